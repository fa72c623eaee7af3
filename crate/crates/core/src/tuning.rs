//! Self-consistent saturated gain and the search for the coupling J₂ that
//! empties resonator 1 once the gain has saturated.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{steady_state_linear, susceptibility_at, AnalyticError};
use crate::dynamics::{evolve, DynamicsError, EvolveControls};
use crate::model::{check_chain, GainModel, ModelError, PumpDrive, ResonatorChain};
use crate::search::{bisect, golden_min};
use crate::stability::{classify_stability, Regime, StabilityError};

pub const RELAXATION: f64 = 0.5;
pub const MAX_FIXED_POINT_ITERATIONS: usize = 500;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TuningError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error(transparent)]
    Dynamics(#[from] DynamicsError),
    #[error("fixed-point iteration did not settle after {iterations} iterations")]
    IterationDiverged { iterations: usize },
    #[error("the bracket holds no interior transparency point")]
    BracketExcluded,
    #[error("J2 = {j2} MHz is dynamically unstable at the unsaturated gain")]
    UnstableRegion { j2: f64 },
    #[error("invalid bracket: need 0 < lo < hi")]
    InvalidBracket,
    #[error("chain has no active resonator")]
    NoActiveResonator,
    #[error("residual {residual:e} exceeds the requested tolerance {tol:e}")]
    ResidualAboveTolerance { residual: f64, tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FixedPointMethod {
    /// Gain was fixed; no iteration needed.
    Constant,
    Iteration,
    /// Iteration failed and the long-time limit of the dynamics was used.
    Integration,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturatedState {
    /// Gross saturated gain g₂,s [MHz].
    pub g2s: f64,
    /// g₂,s − γ₂ [MHz].
    pub effective_gain: f64,
    pub amplitudes: Vec<Complex64>,
    pub iterations: usize,
    pub method: FixedPointMethod,
}

/// Self-consistent steady state under gain saturation: the gain g₂ and
/// amplitudes with g₂ = κ₂,₀/(1 + |a₂|²/I_S), found by damped iteration of
/// the steady state (relaxation 0.5) until g₂ changes by less than
/// `tol`·κ₂,₀.
pub fn saturated_fixed_point(
    chain: &ResonatorChain,
    gain_model: &GainModel,
    pump: &PumpDrive,
    tol: f64,
) -> Result<SaturatedState, TuningError> {
    check_chain(chain)?;
    gain_model.validate()?;
    let active = chain.active_index().ok_or(TuningError::NoActiveResonator)?;
    let (kappa20, gamma2) = match *gain_model {
        GainModel::Constant { kappa2 } => {
            let sol = steady_state_linear(chain, kappa2, pump)?;
            return Ok(SaturatedState {
                g2s: kappa2,
                effective_gain: kappa2,
                amplitudes: sol.amplitudes,
                iterations: 0,
                method: FixedPointMethod::Constant,
            });
        }
        GainModel::Saturating { kappa20, gamma2, .. } => (kappa20, gamma2),
    };
    let mut g = kappa20;
    for iteration in 1..=MAX_FIXED_POINT_ITERATIONS {
        let sol = steady_state_linear(chain, g - gamma2, pump)?;
        let target = gain_model.gross_gain(sol.amplitudes[active].norm_sqr());
        let next = (1.0 - RELAXATION) * g + RELAXATION * target;
        if !next.is_finite() {
            break;
        }
        if (next - g).abs() <= tol * kappa20 {
            let sol = steady_state_linear(chain, next - gamma2, pump)?;
            return Ok(SaturatedState {
                g2s: next,
                effective_gain: next - gamma2,
                amplitudes: sol.amplitudes,
                iterations: iteration,
                method: FixedPointMethod::Iteration,
            });
        }
        g = next;
    }
    Err(TuningError::IterationDiverged {
        iterations: MAX_FIXED_POINT_ITERATIONS,
    })
}

/// Saturated state from the fixed-point iteration, falling back to the
/// long-time limit of the dynamics when the iteration does not settle.
pub fn saturated_state(
    chain: &ResonatorChain,
    gain_model: &GainModel,
    pump: &PumpDrive,
    tol: f64,
) -> Result<SaturatedState, TuningError> {
    match saturated_fixed_point(chain, gain_model, pump, tol) {
        Err(TuningError::IterationDiverged { .. }) => {
            let controls = EvolveControls {
                stop_when_steady: true,
                ..EvolveControls::default()
            };
            let horizon = 1e3 * crate::dynamics::default_steady_window(chain, gain_model.unsaturated_gain());
            let traj = evolve(chain, gain_model, pump, horizon, &controls)?;
            if traj.stabilized_at.is_none() {
                return Err(DynamicsError::NotStabilized.into());
            }
            let effective = traj.final_gain();
            let gamma2 = gain_model.gross_gain(0.0) - gain_model.unsaturated_gain();
            Ok(SaturatedState {
                g2s: effective + gamma2,
                effective_gain: effective,
                amplitudes: traj.final_state.amplitudes.clone(),
                iterations: traj.len(),
                method: FixedPointMethod::Integration,
            })
        }
        other => other,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneResult {
    pub parameter_name: String,
    /// Tuned coupling [MHz].
    pub value: f64,
    /// |A₁|/(√(2κ_ex)εp) at the tuned point.
    pub residual: f64,
    pub iterations: usize,
    /// Effective gain at the tuned point [MHz].
    pub saturated_gain: f64,
}

/// Continued-fraction level L_k = d_k + J_k²/L_{k+1} seen from resonator k
/// (0-based); zero at the transparency point when k is the active resonator.
fn inner_level(chain: &ResonatorChain, gain: f64, omega_p: f64, k: usize) -> Complex64 {
    let d = |i: usize| Complex64::new(chain.signed_damping(i, gain), -(omega_p - chain.resonators[i].omega));
    let n = chain.len();
    let mut level = d(n - 1);
    for i in (k..n - 1).rev() {
        level = d(i) + chain.couplings[i] * chain.couplings[i] / level;
    }
    level
}

fn check_candidate(chain: &ResonatorChain, gain_model: &GainModel, pump: &PumpDrive, j2: f64) -> Result<(), TuningError> {
    let report = classify_stability(chain, gain_model.unsaturated_gain(), pump)?;
    if report.regime == Regime::Unstable {
        return Err(TuningError::UnstableRegion { j2 });
    }
    Ok(())
}

/// Coupling J₂ (between the active resonator and the next one) at which the
/// saturated steady state leaves resonator 1 empty.
///
/// Golden-section search on |A₁|(J₂) narrows the bracket; bisection on the
/// signed inner subfraction (−g_eff + J₂²/κ₃ for a trio) then pins the root. Every
/// candidate is checked for stability at the unsaturated gain.
pub fn find_transparency_j2(
    chain: &ResonatorChain,
    gain_model: &GainModel,
    pump: &PumpDrive,
    bracket: (f64, f64),
    tol: f64,
) -> Result<TuneResult, TuningError> {
    check_chain(chain)?;
    gain_model.validate()?;
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(TuningError::InvalidBracket);
    }
    let active = chain.active_index().ok_or(TuningError::NoActiveResonator)?;
    if active + 1 >= chain.len() {
        return Err(TuningError::NoActiveResonator);
    }
    let fp_tol = 1e-13;
    let mut evaluations = 0usize;

    let state_at = |j2: f64| -> Result<(ResonatorChain, SaturatedState), TuningError> {
        let candidate = chain.with_coupling(active, j2);
        check_candidate(&candidate, gain_model, pump, j2)?;
        let state = saturated_state(&candidate, gain_model, pump, fp_tol)?;
        Ok((candidate, state))
    };
    // |A₁| per unit drive, from the linear response at the saturated gain
    let depth = |j2: f64| -> Result<f64, TuningError> {
        let (candidate, state) = state_at(j2)?;
        let eps = susceptibility_at(&candidate, state.effective_gain, pump.omega_p)?;
        Ok(eps.norm() / (2.0 * chain.kappa_ex))
    };
    let subfraction = |j2: f64| -> Result<f64, TuningError> {
        let (candidate, state) = state_at(j2)?;
        Ok(inner_level(&candidate, state.effective_gain, pump.omega_p, active).re)
    };

    let (j_golden, _) = golden_min(
        |j2| {
            evaluations += 1;
            depth(j2)
        },
        lo,
        hi,
        1e-6 * hi,
    )?;
    if (j_golden - lo) <= 1e-5 * hi || (hi - j_golden) <= 1e-5 * hi {
        return Err(TuningError::BracketExcluded);
    }
    let width = 1e-3 * (hi - lo);
    let (a, b) = ((j_golden - width).max(lo), (j_golden + width).min(hi));
    let mut count = 0usize;
    let root = match bisect(
        |j2| {
            count += 1;
            subfraction(j2)
        },
        a,
        b,
        1e-15 * b,
    )? {
        Some(r) => r,
        None => bisect(
            |j2| {
                count += 1;
                subfraction(j2)
            },
            lo,
            hi,
            1e-15 * hi,
        )?
        .ok_or(TuningError::BracketExcluded)?,
    };
    evaluations += count;

    let (candidate, state) = state_at(root)?;
    let eps = susceptibility_at(&candidate, state.effective_gain, pump.omega_p)?;
    let residual = eps.norm() / (2.0 * chain.kappa_ex);
    if residual > tol {
        return Err(TuningError::ResidualAboveTolerance { residual, tol });
    }
    Ok(TuneResult {
        parameter_name: format!("J{}", active + 1),
        value: root,
        residual,
        iterations: evaluations,
        saturated_gain: state.effective_gain,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub j2: f64,
    pub regime: Regime,
    /// |t|² on resonance; `None` for unstable rows.
    pub t0_sq: Option<f64>,
    pub min_t_sq: Option<f64>,
    pub max_t_sq: Option<f64>,
    pub effective_gain: Option<f64>,
}

/// |t(0)|² and the extremes of |t|² over `x_window` (detunings from ω₁)
/// for each J₂ on the grid. Rows are evaluated in parallel; a row that
/// fails carries the unstable label and no transmission.
pub fn scan_transmission_vs_j2(
    chain: &ResonatorChain,
    gain_model: &GainModel,
    pump: &PumpDrive,
    j2_grid: &[f64],
    x_window: &[f64],
) -> Result<Vec<ScanRow>, TuningError> {
    check_chain(chain)?;
    gain_model.validate()?;
    let index = match chain.active_index() {
        Some(a) if a + 1 < chain.len() => a,
        _ if chain.len() >= 2 => 1,
        _ => return Err(TuningError::NoActiveResonator),
    };
    if j2_grid.iter().any(|j| !(j.is_finite() && *j > 0.0)) {
        return Err(TuningError::InvalidBracket);
    }
    let omega1 = chain.resonators[0].omega;
    Ok(j2_grid
        .par_iter()
        .map(|&j2| {
            let candidate = chain.with_coupling(index, j2);
            let unstable = ScanRow {
                j2,
                regime: Regime::Unstable,
                t0_sq: None,
                min_t_sq: None,
                max_t_sq: None,
                effective_gain: None,
            };
            let regime = match classify_stability(&candidate, gain_model.unsaturated_gain(), pump) {
                Ok(r) => r.regime,
                Err(_) => return unstable,
            };
            if regime == Regime::Unstable {
                return unstable;
            }
            let gain = match saturated_state(&candidate, gain_model, pump, 1e-12) {
                Ok(s) => s.effective_gain,
                Err(_) => return unstable,
            };
            let t_sq = |omega_p: f64| {
                susceptibility_at(&candidate, gain, omega_p)
                    .map(|e| (Complex64::new(1.0, 0.0) - e).norm_sqr())
            };
            let Ok(t0) = t_sq(pump.omega_p) else {
                return ScanRow { regime, ..unstable };
            };
            let (mut lo, mut hi) = (t0, t0);
            for &x in x_window {
                if let Ok(v) = t_sq(omega1 + x) {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            ScanRow {
                j2,
                regime,
                t0_sq: Some(t0),
                min_t_sq: Some(lo),
                max_t_sq: Some(hi),
                effective_gain: Some(gain),
            }
        })
        .collect())
}
