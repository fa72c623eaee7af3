//! Adaptive Dormand–Prince 5(4) integrator for complex-valued systems.

use std::ops::ControlFlow;

use num_complex::Complex64;
use thiserror::Error;

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;

const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;

// fifth-order minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
    /// Upper bound on the step size; `f64::INFINITY` for none.
    pub max_step: f64,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_steps: 10_000_000,
            max_step: f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t}")]
    StepSizeUnderflow { t: f64 },
    #[error("step budget exhausted at t = {t}")]
    MaxStepsExceeded { t: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("invalid integration options: {0}")]
    InvalidOptions(&'static str),
}

/// Where an integration ended.
#[derive(Debug, Clone, PartialEq)]
pub struct OdeOutcome {
    pub t: f64,
    pub y: Vec<Complex64>,
    pub accepted: usize,
    pub rejected: usize,
    /// True when the observer asked to stop before `t_end`.
    pub interrupted: bool,
}

fn error_norm(err: &[Complex64], y0: &[Complex64], y1: &[Complex64], opts: &OdeOptions) -> f64 {
    if err.is_empty() {
        return 0.0;
    }
    let sum: f64 = err
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let scale = opts.abs_tol + opts.rel_tol * a.norm().max(b.norm());
            (e.norm() / scale).powi(2)
        })
        .sum();
    (sum / err.len() as f64).sqrt()
}

fn scaled_norm(v: &[Complex64], y: &[Complex64], opts: &OdeOptions) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    let sum: f64 = v
        .iter()
        .zip(y)
        .map(|(e, a)| (e.norm() / (opts.abs_tol + opts.rel_tol * a.norm())).powi(2))
        .sum();
    (sum / v.len() as f64).sqrt()
}

fn initial_step<F>(f: &mut F, t0: f64, y0: &[Complex64], f0: &[Complex64], opts: &OdeOptions) -> f64
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
{
    let d0 = scaled_norm(y0, y0, opts);
    let d1 = scaled_norm(f0, y0, opts);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
    let y1: Vec<Complex64> = y0.iter().zip(f0).map(|(y, k)| y + h0 * k).collect();
    let mut f1 = vec![Complex64::new(0.0, 0.0); y0.len()];
    f(t0 + h0, &y1, &mut f1);
    let diff: Vec<Complex64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = scaled_norm(&diff, y0, opts) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(0.2)
    };
    (100.0 * h0).min(h1).min(opts.max_step)
}

/// Integrates ẏ = f(t, y) from `t0` to `t_end`.
///
/// `observer` sees the initial state and every accepted step; returning
/// `ControlFlow::Break` ends the integration early.
pub fn integrate<F, O>(
    mut f: F,
    t0: f64,
    y0: &[Complex64],
    t_end: f64,
    opts: &OdeOptions,
    mut observer: O,
) -> Result<OdeOutcome, OdeError>
where
    F: FnMut(f64, &[Complex64], &mut [Complex64]),
    O: FnMut(f64, &[Complex64]) -> ControlFlow<()>,
{
    if !(opts.rel_tol > 0.0) || !(opts.abs_tol > 0.0) {
        return Err(OdeError::InvalidOptions("tolerances must be positive"));
    }
    if !(t_end > t0) || !t_end.is_finite() || !t0.is_finite() {
        return Err(OdeError::InvalidOptions("t_end must exceed t0"));
    }
    let n = y0.len();
    let zero = Complex64::new(0.0, 0.0);
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut k1 = vec![zero; n];
    let mut k2 = vec![zero; n];
    let mut k3 = vec![zero; n];
    let mut k4 = vec![zero; n];
    let mut k5 = vec![zero; n];
    let mut k6 = vec![zero; n];
    let mut k7 = vec![zero; n];
    let mut stage = vec![zero; n];
    let mut y_new = vec![zero; n];
    let mut err = vec![zero; n];

    let outcome = |t: f64, y: Vec<Complex64>, accepted, rejected, interrupted| OdeOutcome {
        t,
        y,
        accepted,
        rejected,
        interrupted,
    };

    if observer(t, &y).is_break() {
        return Ok(outcome(t, y, 0, 0, true));
    }
    f(t, &y, &mut k1);
    if k1.iter().chain(&y).any(|v| !v.is_finite()) {
        return Err(OdeError::NonFinite { t });
    }
    let mut h = initial_step(&mut f, t, &y, &k1, opts).min(t_end - t);
    let (mut accepted, mut rejected) = (0usize, 0usize);

    while t < t_end {
        if accepted + rejected >= opts.max_steps {
            return Err(OdeError::MaxStepsExceeded { t });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }
        if h <= 16.0 * f64::EPSILON * t.abs().max(1e-300) {
            return Err(OdeError::StepSizeUnderflow { t });
        }

        for i in 0..n {
            stage[i] = y[i] + h * A21 * k1[i];
        }
        f(t + C2 * h, &stage, &mut k2);
        for i in 0..n {
            stage[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
        }
        f(t + C3 * h, &stage, &mut k3);
        for i in 0..n {
            stage[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
        }
        f(t + C4 * h, &stage, &mut k4);
        for i in 0..n {
            stage[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
        }
        f(t + C5 * h, &stage, &mut k5);
        for i in 0..n {
            stage[i] = y[i]
                + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
        }
        let t_next = if last { t_end } else { t + h };
        f(t_next, &stage, &mut k6);
        for i in 0..n {
            y_new[i] = y[i] + h * (B1 * k1[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i]);
        }
        f(t_next, &y_new, &mut k7);
        for i in 0..n {
            err[i] = h
                * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }

        let norm = error_norm(&err, &y, &y_new, opts);
        if !norm.is_finite() {
            h *= MIN_FACTOR;
            rejected += 1;
            continue;
        }
        if norm <= 1.0 {
            t = t_next;
            std::mem::swap(&mut y, &mut y_new);
            std::mem::swap(&mut k1, &mut k7);
            accepted += 1;
            if observer(t, &y).is_break() {
                return Ok(outcome(t, y, accepted, rejected, true));
            }
            let factor = if norm == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * norm.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            h = (h * factor).min(opts.max_step);
        } else {
            rejected += 1;
            h *= (SAFETY * norm.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
        }
    }
    Ok(outcome(t, y, accepted, rejected, false))
}
