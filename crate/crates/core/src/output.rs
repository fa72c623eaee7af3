//! CSV tables with a fixed number format (17 significant digits,
//! scientific notation) so that identical inputs give identical bytes.

use std::io::{self, Write};

use num_complex::Complex64;

use crate::analytic::SpectrumPoint;
use crate::dynamics::Trajectory;
use crate::stability::StabilityMap;
use crate::tuning::ScanRow;

/// Trajectory tables are thinned to at most this many rows.
pub const MAX_TRAJECTORY_ROWS: usize = 10_000;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, fmt_f64)
}

pub fn write_spectrum_csv<W: Write>(mut w: W, rows: &[SpectrumPoint]) -> io::Result<()> {
    writeln!(w, "x_mhz,re_eps,im_eps,abs_t,arg_t,delay_us")?;
    for p in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_f64(p.x),
            fmt_f64(p.susceptibility.re),
            fmt_f64(p.susceptibility.im),
            fmt_f64(p.transmission.norm()),
            fmt_f64(p.transmission.arg()),
            fmt_f64(p.delay),
        )?;
    }
    Ok(())
}

/// Header of a trajectory table for `n` resonators.
pub fn trajectory_header(n: usize) -> String {
    let mut header = String::from("t_us");
    for k in 1..=n {
        header.push_str(&format!(",re_a{k},im_a{k}"));
    }
    header.push_str(",gain_mhz");
    header
}

pub fn trajectory_row(t: f64, amplitudes: &[Complex64], gain: f64) -> String {
    let mut line = fmt_f64(t);
    for a in amplitudes {
        line.push(',');
        line.push_str(&fmt_f64(a.re));
        line.push(',');
        line.push_str(&fmt_f64(a.im));
    }
    line.push(',');
    line.push_str(&fmt_f64(gain));
    line
}

pub fn write_trajectory_csv<W: Write>(mut w: W, traj: &Trajectory, max_rows: usize) -> io::Result<()> {
    let n = traj.amplitudes.first().map_or(0, Vec::len);
    writeln!(w, "{}", trajectory_header(n))?;
    for i in traj.downsample_indices(max_rows) {
        writeln!(w, "{}", trajectory_row(traj.times[i], &traj.amplitudes[i], traj.gain_trace[i]))?;
    }
    Ok(())
}

pub fn write_map_csv<W: Write>(mut w: W, map: &StabilityMap) -> io::Result<()> {
    writeln!(w, "j1_mhz,j2_mhz,max_re_lambda_mhz,label")?;
    for c in &map.cells {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_f64(c.j1),
            fmt_f64(c.j2),
            fmt_f64(c.max_real_part),
            c.regime.as_str()
        )?;
    }
    Ok(())
}

pub fn write_scan_csv<W: Write>(mut w: W, rows: &[ScanRow]) -> io::Result<()> {
    writeln!(w, "j2_mhz,label,t0_sq,min_t_sq,max_t_sq,gain_mhz")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            fmt_f64(r.j2),
            r.regime.as_str(),
            fmt_opt(r.t0_sq),
            fmt_opt(r.min_t_sq),
            fmt_opt(r.max_t_sq),
            fmt_opt(r.effective_gain),
        )?;
    }
    Ok(())
}
