use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use cavity_trio::analytic::{
    default_delay_step, fwhm_transparency_window, imag_slope_at_resonance, spectrum_table, susceptibility_at,
    transparency_condition_general,
};
use cavity_trio::config::{linspace, GridSpec, Scenario, TuneTarget};
use cavity_trio::dynamics::{evolve, final_photon_numbers, EvolveControls};
use cavity_trio::model::{Frame, GainModel, ResonatorChain, Role};
use cavity_trio::noise::{noise_floor_power, noise_photon_estimates, NoiseReport};
use cavity_trio::output::{
    trajectory_header, trajectory_row, write_map_csv, write_spectrum_csv, write_trajectory_csv, MAX_TRAJECTORY_ROWS,
};
use cavity_trio::presets::load_preset;
use cavity_trio::stability::{
    classify_stability_in, closed_form_thresholds, marginal_j1, stability_map, Regime, StabilityReport,
};
use cavity_trio::tuning::{find_transparency_j2, saturated_state, SaturatedState};
use num_complex::Complex64;
use serde_json::{json, Value};

use crate::error::CliError;
use crate::svg::{heat_map, line_panels, Panel, Reference, Series};

pub const DEFAULT_T_END: f64 = 20.0;
pub const DEFAULT_POINTS: usize = 1001;
pub const DEFAULT_WAVELENGTH: f64 = 1550e-9;
const DEFAULT_TUNE_TOL: f64 = 1e-9;
const FIXED_POINT_TOL: f64 = 1e-13;

pub struct Context {
    pub scenario: Scenario,
    pub out: PathBuf,
    pub svg: bool,
    pub frame: Frame,
}

pub fn load_scenario(config: Option<&Path>, preset: Option<&str>) -> Result<Scenario, CliError> {
    match (config, preset) {
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::config(format!("cannot read {}: {e}", path.display())))?;
            Ok(Scenario::from_toml_str(&text)?)
        }
        (None, Some(name)) => Ok(load_preset(name)?),
        _ => Err(CliError::config("give exactly one of --config and --preset")),
    }
}

impl Context {
    fn file(&self, stem: &str, ext: &str) -> PathBuf {
        self.out.join(format!("{}-{stem}.{ext}", self.scenario.name()))
    }

    fn create(&self, stem: &str, ext: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
        fs::create_dir_all(&self.out)?;
        let path = self.file(stem, ext);
        let file = File::create(&path)?;
        Ok((path, BufWriter::new(file)))
    }

    fn write_text(&self, stem: &str, ext: &str, text: &str) -> Result<PathBuf, CliError> {
        let (path, mut w) = self.create(stem, ext)?;
        w.write_all(text.as_bytes())?;
        w.flush()?;
        Ok(path)
    }

    fn sidecar(&self, command: &str, results: Value) -> Result<PathBuf, CliError> {
        let doc = json!({
            "tool": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
            "command": command,
            "scenario": self.scenario.doc,
            "results": results,
        });
        let mut text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::numerical(e.to_string()))?;
        text.push('\n');
        self.write_text(command, "json", &text)
    }
}

fn complex_pairs(values: &[Complex64]) -> Vec<[f64; 2]> {
    values.iter().map(|z| [z.re, z.im]).collect()
}

/// True for a resonant passive–gain–passive trio.
fn is_resonant_trio(chain: &ResonatorChain) -> bool {
    chain.len() == 3 && chain.active_index() == Some(1) && chain.is_degenerate(1e-12)
}

/// Effective gain at which steady-state quantities are evaluated, with the
/// saturated state for a saturating model.
fn operating_gain(scenario: &Scenario) -> Result<(f64, Option<SaturatedState>), CliError> {
    match scenario.gain {
        GainModel::Constant { kappa2 } => Ok((kappa2, None)),
        GainModel::Saturating { .. } => {
            let state = saturated_state(&scenario.chain, &scenario.gain, &scenario.pump, FIXED_POINT_TOL)?;
            Ok((state.effective_gain, Some(state)))
        }
    }
}

/// Human-readable reason for an unstable scenario, naming the violated
/// closed-form threshold where one applies.
fn instability_diagnostic(chain: &ResonatorChain, gain: f64, report: &StabilityReport) -> String {
    let mut msg = format!("largest eigenvalue real part is {:.6e} MHz", report.max_real_part);
    if is_resonant_trio(chain) {
        let (k1, k3) = (chain.resonators[0].rate, chain.resonators[2].rate);
        let (j1, j2) = (chain.couplings[0], chain.couplings[1]);
        match closed_form_thresholds(k1, gain, k3, Some(j1), None) {
            Ok(t) => {
                if let Some(min_j2) = t.min_j2.filter(|&m| j2 < m) {
                    msg.push_str(&format!(
                        "; J2 = {j2} MHz is below the stability threshold {min_j2:.6} MHz \
                         (J1 = {j1} MHz < sqrt(kappa1 kappa2) = {:.6} MHz)",
                        t.sqrt_k1k2
                    ));
                }
            }
            Err(_) => msg.push_str(&format!(
                "; gain {gain} MHz is not below both kappa1 = {k1} and kappa3 = {k3} MHz, \
                 so no closed-form threshold applies"
            )),
        }
    }
    msg
}

fn check_stable(chain: &ResonatorChain, gain: f64, report: &StabilityReport) -> Result<(), CliError> {
    if report.regime == Regime::Unstable {
        return Err(CliError::unstable(instability_diagnostic(chain, gain, report)));
    }
    Ok(())
}

fn stability_json(report: &StabilityReport, frame: Frame) -> Value {
    json!({
        "frame": frame,
        "regime": report.regime.as_str(),
        "max_re_lambda_mhz": report.max_real_part,
        "eigenvalues_mhz": complex_pairs(&report.eigenvalues),
    })
}

fn saturated_json(state: &Option<SaturatedState>) -> Value {
    match state {
        Some(s) => json!({
            "g2s_mhz": s.g2s,
            "effective_gain_mhz": s.effective_gain,
            "iterations": s.iterations,
            "method": format!("{:?}", s.method),
        }),
        None => Value::Null,
    }
}

pub fn spectrum(ctx: &Context, x_range: Option<(f64, f64)>, points: Option<usize>) -> Result<(), CliError> {
    let s = &ctx.scenario;
    let chain = &s.chain;
    let run = &s.doc.run;
    let (lo, hi) = x_range
        .or(run.x_range_mhz.map(|[a, b]| (a, b)))
        .unwrap_or((-chain.kappa1(), chain.kappa1()));
    let points = points.or(run.points).unwrap_or(DEFAULT_POINTS);
    GridSpec { lo, hi, n: points }.validate()?;
    let (gain, saturated) = operating_gain(s)?;
    let report = classify_stability_in(chain, gain, &s.pump, ctx.frame)?;
    check_stable(chain, gain, &report)?;

    let grid = linspace(lo, hi, points);
    let d_omega = default_delay_step(chain);
    let rows = spectrum_table(chain, gain, &grid, d_omega)?;
    let (csv_path, mut w) = ctx.create("spectrum", "csv")?;
    write_spectrum_csv(&mut w, &rows)?;
    w.flush()?;

    let eps = susceptibility_at(chain, gain, s.pump.omega_p)?;
    let t = Complex64::new(1.0, 0.0) - eps;
    let mut results = json!({
        "effective_gain_mhz": gain,
        "saturated": saturated_json(&saturated),
        "stability": stability_json(&report, ctx.frame),
        "delay_step_mhz": d_omega,
        "at_pump": {
            "x_mhz": s.pump.omega_p - chain.resonators[0].omega,
            "re_eps": eps.re,
            "im_eps": eps.im,
            "abs_t_sq": t.norm_sqr(),
        },
    });
    if is_resonant_trio(chain) {
        let (kex, k3, j1) = (chain.kappa_ex, chain.resonators[2].rate, chain.couplings[0]);
        results["slope_k_per_mhz"] = imag_slope_at_resonance(kex, gain, k3, j1).map_or(Value::Null, |k| json!(k));
        results["fwhm"] = fwhm_transparency_window(chain, gain).map_or(Value::Null, |f| {
            json!({
                "width_mhz": f.width,
                "width_hz": f.width * 1e6 / std::f64::consts::TAU,
                "lower_mhz": f.lower,
                "upper_mhz": f.upper,
                "half_width_estimate_mhz": f.approximation,
            })
        });
    }
    if chain.len() == 3 && chain.active_index() == Some(1) {
        let (k2, k3) = (gain, chain.resonators[2].rate);
        let (w2, w3) = (chain.resonators[1].omega, chain.resonators[2].omega);
        results["transparency"] = transparency_condition_general(k2, k3, w2, w3).map_or(Value::Null, |p| {
            json!({ "j2_mhz": p.j2_star, "omega_p_mhz": p.omega_p_star })
        });
    }
    let json_path = ctx.sidecar("spectrum", results)?;
    println!("wrote {}", csv_path.display());
    println!("wrote {}", json_path.display());
    println!("|t|^2 at pump = {:.12}", t.norm_sqr());

    if ctx.svg {
        let series = |label: &str, f: &dyn Fn(&cavity_trio::analytic::SpectrumPoint) -> f64| Series {
            label: label.into(),
            points: rows.iter().map(|p| (p.x, f(p))).collect(),
        };
        let panels = [
            Panel {
                y_label: "susceptibility".into(),
                series: vec![
                    series("Re eps_T", &|p| p.susceptibility.re),
                    series("Im eps_T", &|p| p.susceptibility.im),
                ],
            },
            Panel {
                y_label: "|t|^2".into(),
                series: vec![series("|t|^2", &|p| p.transmission.norm_sqr())],
            },
            Panel {
                y_label: "delay [us]".into(),
                series: vec![series("delay", &|p| p.delay)],
            },
        ];
        let svg = line_panels(&format!("{} spectrum", s.name()), "x = omega_p - omega_1 [MHz]", &panels);
        println!("wrote {}", ctx.write_text("spectrum", "svg", &svg)?.display());
    }
    Ok(())
}

pub fn evolve_cmd(ctx: &Context, t_end: Option<f64>) -> Result<(), CliError> {
    let s = &ctx.scenario;
    let t_end = t_end.or(s.doc.run.t_end_us).unwrap_or(DEFAULT_T_END);
    if !(t_end.is_finite() && t_end >= 0.0) {
        return Err(CliError::config("t_end must be finite and non-negative"));
    }
    let n = s.chain.len();
    let (csv_path, mut w) = ctx.create("evolve", "csv")?;
    if t_end == 0.0 {
        let zeros = vec![Complex64::new(0.0, 0.0); n];
        writeln!(w, "{}", trajectory_header(n))?;
        writeln!(w, "{}", trajectory_row(0.0, &zeros, s.gain.unsaturated_gain()))?;
        w.flush()?;
        let results = json!({
            "t_end_us": 0.0,
            "samples": 1,
            "stabilized_at_us": Value::Null,
            "saturated_gain_mhz": s.gain.unsaturated_gain(),
            "final_amplitudes": complex_pairs(&zeros),
            "final_photon_numbers": vec![0.0; n],
        });
        let json_path = ctx.sidecar("evolve", results)?;
        println!("wrote {}", csv_path.display());
        println!("wrote {}", json_path.display());
        return Ok(());
    }
    let traj = evolve(&s.chain, &s.gain, &s.pump, t_end, &EvolveControls::default())?;
    write_trajectory_csv(&mut w, &traj, MAX_TRAJECTORY_ROWS)?;
    w.flush()?;
    let last = traj.amplitudes.last().expect("trajectory has samples");
    let results = json!({
        "t_end_us": t_end,
        "samples": traj.len(),
        "stabilized_at_us": traj.stabilized_at,
        "steady_window_us": traj.steady_window,
        "saturated_gain_mhz": traj.final_gain(),
        "steady_photon_numbers": final_photon_numbers(&traj).ok(),
        "final_amplitudes": complex_pairs(last),
        "final_photon_numbers": last.iter().map(|a| a.norm_sqr()).collect::<Vec<_>>(),
    });
    let json_path = ctx.sidecar("evolve", results)?;
    println!("wrote {}", csv_path.display());
    println!("wrote {}", json_path.display());
    println!("final gain = {:.9} MHz", traj.final_gain());
    if traj.stabilized_at.is_none() {
        eprintln!("warning: no steady state detected before t_end = {t_end} us");
    }

    if ctx.svg {
        let idx = traj.downsample_indices(2000);
        let fields = (0..n)
            .map(|k| Series {
                label: format!("|a{}|", k + 1),
                points: idx.iter().map(|&i| (traj.times[i], traj.amplitudes[i][k].norm())).collect(),
            })
            .collect();
        let panels = [
            Panel {
                y_label: "|a_k| [sqrt(MHz)]".into(),
                series: fields,
            },
            Panel {
                y_label: "gain [MHz]".into(),
                series: vec![Series {
                    label: "kappa2(t)".into(),
                    points: idx.iter().map(|&i| (traj.times[i], traj.gain_trace[i])).collect(),
                }],
            },
        ];
        let svg = line_panels(&format!("{} evolution", s.name()), "t [us]", &panels);
        println!("wrote {}", ctx.write_text("evolve", "svg", &svg)?.display());
    }
    Ok(())
}

/// Gain used for stability questions: the constant gain, or the largest
/// (unsaturated) effective gain of a saturating model.
fn stability_gain(model: &GainModel) -> f64 {
    model.unsaturated_gain()
}

pub fn stability_map_cmd(ctx: &Context, grids: &[GridSpec]) -> Result<(), CliError> {
    let s = &ctx.scenario;
    let chain = &s.chain;
    let run = &s.doc.run;
    let single = |j: f64| GridSpec { lo: j, hi: j, n: 1 };
    let j1_grid = grids
        .first()
        .copied()
        .or(run.j1_grid_mhz)
        .unwrap_or_else(|| single(chain.couplings[0]));
    let j2_grid = grids
        .get(1)
        .copied()
        .or(run.j2_grid_mhz)
        .or_else(|| chain.couplings.get(1).map(|&j| single(j)))
        .ok_or_else(|| CliError::config("stability map needs at least three resonators"))?;
    for g in [&j1_grid, &j2_grid] {
        g.validate()?;
        if g.lo <= 0.0 {
            return Err(CliError::config("coupling grids must be positive"));
        }
    }
    let gain = stability_gain(&s.gain);
    let map = stability_map(chain, gain, &j1_grid.values(), &j2_grid.values())?;
    let (csv_path, mut w) = ctx.create("stability-map", "csv")?;
    write_map_csv(&mut w, &map)?;
    w.flush()?;

    let count = |r: Regime| map.cells.iter().filter(|c| c.regime == r).count();
    let thresholds = if is_resonant_trio(chain) {
        closed_form_thresholds(chain.resonators[0].rate, gain, chain.resonators[2].rate, Some(0.0), None).ok()
    } else {
        None
    };
    let results = json!({
        "gain_mhz": gain,
        "j1_grid_mhz": [j1_grid.lo, j1_grid.hi, j1_grid.n],
        "j2_grid_mhz": [j2_grid.lo, j2_grid.hi, j2_grid.n],
        "counts": {
            "stable": count(Regime::Stable),
            "marginal": count(Regime::Marginal),
            "unstable": count(Regime::Unstable),
        },
        "reference_lines_mhz": thresholds.map(|t| json!({
            "sqrt_k1k2": t.sqrt_k1k2,
            "sqrt_k2k3": t.sqrt_k2k3,
        })),
        "boundary": map.boundary,
    });
    let json_path = ctx.sidecar("stability-map", results)?;
    println!("wrote {}", csv_path.display());
    println!("wrote {}", json_path.display());
    if let Some(t) = thresholds {
        println!(
            "reference values: sqrt(kappa1 kappa2) = {:.6} MHz, sqrt(kappa2 kappa3) = {:.6} MHz",
            t.sqrt_k1k2, t.sqrt_k2k3
        );
    }

    if ctx.svg {
        let cells: Vec<(f64, f64, &str)> = map.cells.iter().map(|c| (c.j1, c.j2, c.regime.as_str())).collect();
        let references: Vec<Reference> = thresholds
            .map(|t| {
                vec![
                    Reference {
                        label: format!("sqrt(k1 k2) = {:.4}", t.sqrt_k1k2),
                        vertical: true,
                        value: t.sqrt_k1k2,
                    },
                    Reference {
                        label: format!("sqrt(k2 k3) = {:.4}", t.sqrt_k2k3),
                        vertical: false,
                        value: t.sqrt_k2k3,
                    },
                ]
            })
            .unwrap_or_default();
        let svg = heat_map(
            &format!("{} dynamical regimes", s.name()),
            "J1 [MHz]",
            "J2 [MHz]",
            &cells,
            &[("stable", "#9fd39f"), ("marginal", "#f2d16b"), ("unstable", "#e38b8b")],
            map.boundary.as_deref(),
            &references,
        );
        println!("wrote {}", ctx.write_text("stability-map", "svg", &svg)?.display());
    }
    Ok(())
}

pub fn tune_cmd(
    ctx: &Context,
    target: Option<TuneTarget>,
    bracket: Option<(f64, f64)>,
    tol: Option<f64>,
) -> Result<(), CliError> {
    let s = &ctx.scenario;
    let chain = &s.chain;
    let run = &s.doc.run;
    let target = target
        .or(run.tune)
        .ok_or_else(|| CliError::config("no tuning target: pass j2 or j1-marginal"))?;
    let bracket = bracket.or(run.bracket_mhz.map(|[a, b]| (a, b)));
    let scale = chain.rate_scale();
    let results = match target {
        TuneTarget::J2 => {
            let bracket = bracket.unwrap_or((1e-6 * scale, 10.0 * scale));
            let tol = tol.or(run.tol).unwrap_or(DEFAULT_TUNE_TOL);
            let r = find_transparency_j2(chain, &s.gain, &s.pump, bracket, tol)?;
            println!("{} = {:.9} MHz (residual {:.3e})", r.parameter_name, r.value, r.residual);
            json!({
                "parameter": "j2",
                "name": r.parameter_name,
                "value_mhz": r.value,
                "residual": r.residual,
                "iterations": r.iterations,
                "saturated_gain_mhz": r.saturated_gain,
                "bracket_mhz": [bracket.0, bracket.1],
                "tol": tol,
            })
        }
        TuneTarget::J1Marginal => {
            if chain.len() != 3 || chain.active_index() != Some(1) || chain.resonators[0].role != Role::Passive {
                return Err(CliError::config("j1-marginal needs a passive-active-passive trio"));
            }
            let bracket = bracket.unwrap_or((1e-6 * scale, 100.0 * scale));
            let gain = stability_gain(&s.gain);
            let (k1, k3, j2) = (chain.resonators[0].rate, chain.resonators[2].rate, chain.couplings[1]);
            let j1 = marginal_j1(k1, gain, k3, j2, bracket)?;
            println!("J1 marginal = {j1:.9} MHz");
            json!({
                "parameter": "j1-marginal",
                "name": "J1",
                "value_mhz": j1,
                "gain_mhz": gain,
                "bracket_mhz": [bracket.0, bracket.1],
            })
        }
    };
    let json_path = ctx.sidecar("tune", results)?;
    println!("wrote {}", json_path.display());
    Ok(())
}

pub fn noise_cmd(ctx: &Context) -> Result<(), CliError> {
    let s = &ctx.scenario;
    let chain = &s.chain;
    let active = chain
        .active_index()
        .ok_or_else(|| CliError::config("chain has no active resonator"))?;
    let (g2s, gamma2, saturated) = match s.gain {
        GainModel::Constant { kappa2 } => {
            let gamma2 = chain.resonators[active].intrinsic_loss;
            (kappa2 + gamma2, gamma2, None)
        }
        GainModel::Saturating { gamma2, .. } => {
            let state = saturated_state(chain, &s.gain, &s.pump, FIXED_POINT_TOL)?;
            (state.g2s, gamma2, Some(state))
        }
    };
    let wavelength = s.doc.run.wavelength_m.unwrap_or(DEFAULT_WAVELENGTH);
    let estimate = noise_photon_estimates(chain, g2s, gamma2)?;
    let report = NoiseReport::new(&estimate, noise_floor_power(wavelength)?);
    println!(
        "extra photons in resonator 1 = {:.6e} (|lambda| = {:.6} MHz)",
        report.selected,
        estimate.eigenvalues[estimate.selected].norm()
    );
    let results = json!({
        "gamma2_mhz": gamma2,
        "wavelength_m": wavelength,
        "saturated": saturated_json(&saturated),
        "report": report,
    });
    let json_path = ctx.sidecar("noise", results)?;
    println!("wrote {}", json_path.display());
    Ok(())
}
