use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{susceptibility_at, AnalyticError};
use crate::model::{check_chain, ModelError, PumpDrive, ResonatorChain};
use crate::search::{bisect, golden_min};

const DEGENERACY_TOL: f64 = 1e-12;

/// One row of a transmission spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    /// ωp − ω₁ [MHz].
    pub x: f64,
    pub susceptibility: Complex64,
    pub transmission: Complex64,
    /// Group delay [μs]; NaN where the transmission vanishes.
    pub delay: f64,
}

/// Numerically measured transparency window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FwhmReport {
    /// Full width at half maximum of the Re ε_T dip [MHz].
    pub width: f64,
    /// Small-J₁ estimate J₁²/κ₁ [MHz].
    pub approximation: f64,
    /// Half-maximum crossings below and above resonance [MHz].
    pub lower: f64,
    pub upper: f64,
}

fn check_grid(x_grid: &[f64]) -> Result<(), AnalyticError> {
    if x_grid.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(ModelError::NonFinite("detuning grid").into())
    }
}

/// ε_T over a grid of pump detunings x = ωp − ω₀ for a chain whose
/// resonances all sit at ω₀. Grid points are evaluated in parallel.
pub fn susceptibility_spectrum(
    chain: &ResonatorChain,
    gain: f64,
    x_grid: &[f64],
) -> Result<Vec<Complex64>, AnalyticError> {
    check_chain(chain)?;
    check_grid(x_grid)?;
    if !chain.is_degenerate(DEGENERACY_TOL) {
        return Err(AnalyticError::NonDegenerateFrequencies);
    }
    let omega0 = chain.resonators[0].omega;
    x_grid
        .par_iter()
        .map(|&x| susceptibility_at(chain, gain, omega0 + x))
        .collect()
}

/// Slope K = ∂Im ε_T/∂x at the degenerate transparency point,
/// 2κ_ex(κ₂ − κ₃)/(J₁²κ₃). The group delay there is −K.
pub fn imag_slope_at_resonance(
    kappa_ex: f64,
    kappa2: f64,
    kappa3: f64,
    j1: f64,
) -> Result<f64, AnalyticError> {
    if !(j1 > 0.0) {
        return Err(AnalyticError::ZeroCoupling);
    }
    if !(kappa3 > 0.0) {
        return Err(AnalyticError::NonPositiveRate);
    }
    Ok(2.0 * kappa_ex * (kappa2 - kappa3) / (j1 * j1 * kappa3))
}

fn transmission_at(chain: &ResonatorChain, gain: f64, omega_p: f64) -> Result<Complex64, AnalyticError> {
    Ok(Complex64::new(1.0, 0.0) - susceptibility_at(chain, gain, omega_p)?)
}

/// Group delay τ = ∂arg t/∂ωp [μs] by a central difference of width
/// 2·`d_omega` around the pump frequency.
pub fn group_delay(
    chain: &ResonatorChain,
    gain: f64,
    pump: &PumpDrive,
    d_omega: f64,
) -> Result<f64, AnalyticError> {
    check_chain(chain)?;
    if !(d_omega > 0.0) || !d_omega.is_finite() {
        return Err(AnalyticError::ConditionsNotMet("delay step must be positive"));
    }
    let plus = transmission_at(chain, gain, pump.omega_p + d_omega)?;
    let minus = transmission_at(chain, gain, pump.omega_p - d_omega)?;
    if plus == Complex64::new(0.0, 0.0) || minus == Complex64::new(0.0, 0.0) {
        return Err(AnalyticError::ZeroTransmission);
    }
    // principal value of the phase difference, so a branch cut between the
    // two stencil points does not register as a 2π jump
    let dphi = (plus * minus.conj()).arg();
    Ok(dphi / (2.0 * d_omega))
}

/// Width of the narrowest feature expected near resonance.
fn window_estimate(chain: &ResonatorChain) -> f64 {
    let kappa1 = chain.kappa1().abs().max(f64::MIN_POSITIVE);
    match chain.couplings.first() {
        Some(&j1) => (j1 * j1 / kappa1).min(kappa1),
        None => kappa1,
    }
}

/// Default finite-difference step for delays: well inside the narrowest
/// expected feature of the spectrum.
pub fn default_delay_step(chain: &ResonatorChain) -> f64 {
    1e-4 * window_estimate(chain)
}

/// Transmission spectrum with group delay at each detuning from ω₁.
/// Works for any chain frequencies; points are evaluated in parallel.
pub fn spectrum_table(
    chain: &ResonatorChain,
    gain: f64,
    x_grid: &[f64],
    d_omega: f64,
) -> Result<Vec<SpectrumPoint>, AnalyticError> {
    check_chain(chain)?;
    check_grid(x_grid)?;
    let omega1 = chain.resonators[0].omega;
    x_grid
        .par_iter()
        .map(|&x| {
            let susceptibility = susceptibility_at(chain, gain, omega1 + x)?;
            let pump = PumpDrive {
                omega_p: omega1 + x,
                amplitude: 1.0,
            };
            let delay = match group_delay(chain, gain, &pump, d_omega) {
                Ok(tau) => tau,
                Err(AnalyticError::ZeroTransmission | AnalyticError::SingularSubfraction) => f64::NAN,
                Err(e) => return Err(e),
            };
            Ok(SpectrumPoint {
                x,
                susceptibility,
                transmission: Complex64::new(1.0, 0.0) - susceptibility,
                delay,
            })
        })
        .collect()
}

/// Full width at half maximum of the Re ε_T dip centred on resonance.
///
/// The side maxima are located by an outward geometric scan and refined by
/// golden section; each half-maximum crossing is then bisected.
pub fn fwhm_transparency_window(chain: &ResonatorChain, gain: f64) -> Result<FwhmReport, AnalyticError> {
    check_chain(chain)?;
    let omega0 = chain.resonators[0].omega;
    let re_eps = |x: f64| susceptibility_at(chain, gain, omega0 + x).map(|e| e.re);
    let estimate = window_estimate(chain);
    let reach = 1e4 * chain.rate_scale().max(estimate);
    let center = re_eps(0.0)?;

    let mut crossings = [0.0f64; 2];
    for (side, sign) in [-1.0f64, 1.0].into_iter().enumerate() {
        let f = |x: f64| re_eps(sign * x);
        let mut x_prev2 = 0.0;
        let mut x_prev = 1e-6 * estimate;
        let mut v_prev = f(x_prev)?;
        if v_prev <= center {
            return Err(AnalyticError::NoDip);
        }
        let (peak_x, peak_v) = loop {
            let x = 1.2 * x_prev;
            if x > reach {
                return Err(AnalyticError::NoDip);
            }
            let v = f(x)?;
            if v < v_prev {
                let (xm, neg) = golden_min(|x| f(x).map(|v| -v), x_prev2, x, 1e-12 * x)?;
                break (xm, -neg);
            }
            x_prev2 = x_prev;
            x_prev = x;
            v_prev = v;
        };
        let half = 0.5 * (center + peak_v);
        let crossing = bisect(|x| f(x).map(|v| v - half), 0.0, peak_x, 1e-13 * peak_x)?
            .ok_or(AnalyticError::NoDip)?;
        crossings[side] = crossing;
    }
    Ok(FwhmReport {
        width: crossings[0] + crossings[1],
        approximation: match chain.couplings.first() {
            Some(&j1) => j1 * j1 / chain.kappa1(),
            None => f64::NAN,
        },
        lower: -crossings[0],
        upper: crossings[1],
    })
}
