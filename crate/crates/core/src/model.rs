//! Domain types for a linear chain of coupled optical resonators and the
//! coupled-mode matrix that drives their mean fields.
//!
//! Unit convention used across the crate:
//!
//! * rates, couplings and frequencies are angular and expressed in MHz
//!   (1 MHz = 1e6 s⁻¹);
//! * field amplitudes are in √MHz, so |a|² is a photon number;
//! * time is in μs.
//!
//! Resonators are stored 0-based; user-facing output numbers them from 1,
//! with resonator 1 being the one coupled to the input waveguide.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Reduced Planck constant [J·s].
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum [m/s].
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
/// Number of s⁻¹ in one MHz.
pub const PER_SECOND_PER_MHZ: f64 = 1e6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("chain has no resonators")]
    EmptyChain,
    #[error("expected {expected} couplings for {resonators} resonators, found {found}")]
    CouplingCountMismatch {
        resonators: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-finite parameter: {0}")]
    NonFinite(&'static str),
    #[error("resonator {index} has a negative rate or intrinsic loss")]
    NegativeRate { index: usize },
    #[error("coupling J{index} must be positive")]
    NonPositiveCoupling { index: usize },
    #[error("external coupling rate must be positive")]
    NonPositiveExternal,
    #[error("external coupling {kappa_ex} MHz exceeds total damping {kappa1} MHz of resonator 1")]
    ExternalExceedsTotal { kappa_ex: f64, kappa1: f64 },
    #[error("chain has no active resonator")]
    MissingActive,
    #[error("chain has more than one active resonator")]
    MultipleActive,
    #[error("pump amplitude must be non-negative")]
    NegativeAmplitude,
    #[error("pump power must be non-negative")]
    NegativePower,
    #[error("wavelength must be positive")]
    NonPositiveWavelength,
    #[error("invalid gain model: {0}")]
    InvalidGain(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Passive,
    Active,
}

/// One optical resonator.
///
/// `rate` is the damping rate for a passive resonator and the effective
/// (net) gain rate for the active one. `intrinsic_loss` is γ₂ for the
/// active resonator and κ_in for the pumped one; it is informational for
/// every other resonator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resonator {
    pub omega: f64,
    pub role: Role,
    pub rate: f64,
    pub intrinsic_loss: f64,
}

impl Resonator {
    pub fn passive(omega: f64, damping: f64) -> Self {
        Resonator {
            omega,
            role: Role::Passive,
            rate: damping,
            intrinsic_loss: 0.0,
        }
    }

    pub fn active(omega: f64, gain: f64) -> Self {
        Resonator {
            omega,
            role: Role::Active,
            rate: gain,
            intrinsic_loss: 0.0,
        }
    }

    pub fn with_intrinsic_loss(mut self, loss: f64) -> Self {
        self.intrinsic_loss = loss;
        self
    }

    pub fn is_active(&self) -> bool {
        self.role == Role::Active
    }
}

/// A linear chain of resonators; resonator 0 is coupled to the waveguide
/// with rate `kappa_ex`, and `couplings[k]` links resonators k and k+1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResonatorChain {
    pub resonators: Vec<Resonator>,
    pub couplings: Vec<f64>,
    pub kappa_ex: f64,
}

impl ResonatorChain {
    pub fn new(resonators: Vec<Resonator>, couplings: Vec<f64>, kappa_ex: f64) -> Self {
        ResonatorChain {
            resonators,
            couplings,
            kappa_ex,
        }
    }

    /// Passive–active–passive chain with all three resonances at `omega0`.
    pub fn degenerate_trio(
        omega0: f64,
        kappa1: f64,
        kappa_ex: f64,
        kappa2: f64,
        kappa3: f64,
        j1: f64,
        j2: f64,
    ) -> Self {
        ResonatorChain {
            resonators: vec![
                Resonator::passive(omega0, kappa1).with_intrinsic_loss(kappa1 - kappa_ex),
                Resonator::active(omega0, kappa2),
                Resonator::passive(omega0, kappa3),
            ],
            couplings: vec![j1, j2],
            kappa_ex,
        }
    }

    pub fn len(&self) -> usize {
        self.resonators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.resonators.is_empty()
    }

    /// Index of the active resonator, if any.
    pub fn active_index(&self) -> Option<usize> {
        self.resonators.iter().position(Resonator::is_active)
    }

    /// Damping rate κ₁ of the pumped resonator.
    pub fn kappa1(&self) -> f64 {
        self.resonators[0].rate
    }

    /// Copy of the chain with coupling `index` (0-based) replaced.
    pub fn with_coupling(&self, index: usize, value: f64) -> Self {
        let mut chain = self.clone();
        chain.couplings[index] = value;
        chain
    }

    /// Copy of the chain with resonator `index` taking a new rate.
    pub fn with_rate(&self, index: usize, rate: f64) -> Self {
        let mut chain = self.clone();
        chain.resonators[index].rate = rate;
        chain
    }

    /// True when every resonance frequency equals that of resonator 1
    /// within `rel_tol` of the largest rate/coupling in the chain.
    pub fn is_degenerate(&self, rel_tol: f64) -> bool {
        let omega0 = self.resonators[0].omega;
        let scale = self.rate_scale();
        self.resonators
            .iter()
            .all(|r| (r.omega - omega0).abs() <= rel_tol * scale.max(omega0.abs()))
    }

    /// Largest magnitude among rates and couplings; a natural frequency scale.
    pub fn rate_scale(&self) -> f64 {
        self.resonators
            .iter()
            .map(|r| r.rate.abs())
            .chain(self.couplings.iter().map(|j| j.abs()))
            .fold(self.kappa_ex.abs(), f64::max)
    }

    /// Signed damping of resonator `k` in the mean-field equation: +κ for a
    /// passive resonator, −gain for the active one.
    pub(crate) fn signed_damping(&self, k: usize, gain: f64) -> f64 {
        match self.resonators[k].role {
            Role::Passive => self.resonators[k].rate,
            Role::Active => -gain,
        }
    }

    /// Coherent drive √(2κ_ex)·εp entering resonator 1 [MHz·√MHz].
    pub fn drive(&self, pump: &PumpDrive) -> f64 {
        (2.0 * self.kappa_ex).sqrt() * pump.amplitude
    }
}

/// Coherent pump at angular frequency `omega_p` [MHz] and amplitude εp [√MHz].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpDrive {
    pub omega_p: f64,
    pub amplitude: f64,
}

impl PumpDrive {
    pub fn new(omega_p: f64, amplitude: f64) -> Result<Self, ModelError> {
        if !omega_p.is_finite() || !amplitude.is_finite() {
            return Err(ModelError::NonFinite("pump"));
        }
        if amplitude < 0.0 {
            return Err(ModelError::NegativeAmplitude);
        }
        Ok(PumpDrive { omega_p, amplitude })
    }

    /// Pump from optical power [W] at vacuum wavelength [m].
    pub fn from_power(omega_p: f64, power: f64, wavelength: f64) -> Result<Self, ModelError> {
        Self::new(omega_p, pump_amplitude_from_power(power, wavelength)?)
    }

    /// Detuning of the pump from resonator `k`, Δ_k = ωp − ω_k.
    pub fn detuning(&self, chain: &ResonatorChain, k: usize) -> f64 {
        self.omega_p - chain.resonators[k].omega
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum GainModel {
    /// Fixed effective gain rate κ₂ [MHz].
    Constant { kappa2: f64 },
    /// g₂ = κ₂,₀ / (1 + n₂/I_S), effective gain g₂ − γ₂.
    Saturating {
        kappa20: f64,
        saturation: f64,
        gamma2: f64,
    },
}

impl GainModel {
    pub fn validate(&self) -> Result<(), ModelError> {
        match *self {
            GainModel::Constant { kappa2 } => {
                if !kappa2.is_finite() {
                    return Err(ModelError::NonFinite("kappa2"));
                }
            }
            GainModel::Saturating {
                kappa20,
                saturation,
                gamma2,
            } => {
                if !(kappa20.is_finite() && saturation.is_finite() && gamma2.is_finite()) {
                    return Err(ModelError::NonFinite("gain"));
                }
                if kappa20 <= 0.0 {
                    return Err(ModelError::InvalidGain("kappa20 must be positive"));
                }
                if saturation <= 0.0 {
                    return Err(ModelError::InvalidGain("saturation intensity must be positive"));
                }
                if gamma2 < 0.0 {
                    return Err(ModelError::InvalidGain("gamma2 must be non-negative"));
                }
            }
        }
        Ok(())
    }

    /// Gross gain g₂ at intracavity photon number `photons`.
    pub fn gross_gain(&self, photons: f64) -> f64 {
        match *self {
            GainModel::Constant { kappa2 } => kappa2,
            GainModel::Saturating {
                kappa20,
                saturation,
                ..
            } => kappa20 / (1.0 + photons / saturation),
        }
    }

    /// Effective gain g₂ − γ₂ at intracavity photon number `photons`.
    pub fn effective_gain(&self, photons: f64) -> f64 {
        match *self {
            GainModel::Constant { kappa2 } => kappa2,
            GainModel::Saturating { gamma2, .. } => self.gross_gain(photons) - gamma2,
        }
    }

    /// Effective gain of an empty resonator; an upper bound for every
    /// photon number.
    pub fn unsaturated_gain(&self) -> f64 {
        self.effective_gain(0.0)
    }
}

/// Frame in which the coupled-mode matrix is written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Frame {
    /// Rotating at the pump frequency; the driven steady state is a fixed point.
    #[default]
    Rotating,
    /// Laboratory frame with −iω_k on the diagonal and a drive ∝ e^{−iωp t}.
    Lab,
}

fn check_structure(chain: &ResonatorChain) -> Result<(), ModelError> {
    let n = chain.resonators.len();
    if n == 0 {
        return Err(ModelError::EmptyChain);
    }
    if chain.couplings.len() != n - 1 {
        return Err(ModelError::CouplingCountMismatch {
            resonators: n,
            expected: n - 1,
            found: chain.couplings.len(),
        });
    }
    for r in &chain.resonators {
        if !(r.omega.is_finite() && r.rate.is_finite() && r.intrinsic_loss.is_finite()) {
            return Err(ModelError::NonFinite("resonator"));
        }
    }
    if !chain.couplings.iter().all(|j| j.is_finite()) {
        return Err(ModelError::NonFinite("coupling"));
    }
    if !chain.kappa_ex.is_finite() {
        return Err(ModelError::NonFinite("kappa_ex"));
    }
    for (index, r) in chain.resonators.iter().enumerate() {
        if r.rate < 0.0 || r.intrinsic_loss < 0.0 {
            return Err(ModelError::NegativeRate { index: index + 1 });
        }
    }
    for (index, &j) in chain.couplings.iter().enumerate() {
        if j <= 0.0 {
            return Err(ModelError::NonPositiveCoupling { index: index + 1 });
        }
    }
    if chain.kappa_ex <= 0.0 {
        return Err(ModelError::NonPositiveExternal);
    }
    let first = &chain.resonators[0];
    if first.role == Role::Passive && chain.kappa_ex > first.rate {
        return Err(ModelError::ExternalExceedsTotal {
            kappa_ex: chain.kappa_ex,
            kappa1: first.rate,
        });
    }
    if chain.resonators.iter().filter(|r| r.is_active()).count() > 1 {
        return Err(ModelError::MultipleActive);
    }
    Ok(())
}

/// Structural validation shared by the numerical routines: every invariant
/// except the requirement that an active resonator be present, so that
/// all-passive reference chains can be evaluated.
pub(crate) fn check_chain(chain: &ResonatorChain) -> Result<(), ModelError> {
    check_structure(chain)
}

/// Checks every chain invariant, reporting the first one violated.
pub fn validate_chain(chain: &ResonatorChain) -> Result<(), ModelError> {
    check_structure(chain)?;
    if chain.active_index().is_none() {
        return Err(ModelError::MissingActive);
    }
    Ok(())
}

/// Coupled-mode matrix M of ȧ = M·a + v_in.
///
/// In the rotating frame the diagonal holds −κ_k + iΔ_k (passive) or
/// +gain + iΔ_k (active); in the lab frame iΔ_k is replaced by −iω_k.
/// Off-diagonal neighbours carry iJ_k, so M is complex symmetric and
/// tridiagonal.
pub fn build_dynamical_matrix(
    chain: &ResonatorChain,
    gain: f64,
    omega_p: f64,
    frame: Frame,
) -> Result<DMatrix<Complex64>, ModelError> {
    check_chain(chain)?;
    if !gain.is_finite() || !omega_p.is_finite() {
        return Err(ModelError::NonFinite("gain or pump frequency"));
    }
    let n = chain.len();
    let mut m = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for (k, r) in chain.resonators.iter().enumerate() {
        let phase = match frame {
            Frame::Rotating => omega_p - r.omega,
            Frame::Lab => -r.omega,
        };
        m[(k, k)] = Complex64::new(-chain.signed_damping(k, gain), phase);
    }
    for (k, &j) in chain.couplings.iter().enumerate() {
        m[(k, k + 1)] = Complex64::new(0.0, j);
        m[(k + 1, k)] = Complex64::new(0.0, j);
    }
    Ok(m)
}

/// Angular optical frequency [rad/s] at vacuum wavelength [m].
pub fn optical_angular_frequency(wavelength: f64) -> Result<f64, ModelError> {
    if !(wavelength > 0.0) || !wavelength.is_finite() {
        return Err(ModelError::NonPositiveWavelength);
    }
    Ok(2.0 * std::f64::consts::PI * SPEED_OF_LIGHT / wavelength)
}

/// εp [√MHz] of a pump carrying `power` watts at `wavelength` metres,
/// from εp² = P/(ħωp).
pub fn pump_amplitude_from_power(power: f64, wavelength: f64) -> Result<f64, ModelError> {
    let omega = optical_angular_frequency(wavelength)?;
    if !power.is_finite() {
        return Err(ModelError::NonFinite("power"));
    }
    if power < 0.0 {
        return Err(ModelError::NegativePower);
    }
    let photon_flux = power / (HBAR * omega);
    Ok((photon_flux / PER_SECOND_PER_MHZ).sqrt())
}

/// Inverse of [`pump_amplitude_from_power`].
pub fn power_from_amplitude(amplitude: f64, wavelength: f64) -> Result<f64, ModelError> {
    let omega = optical_angular_frequency(wavelength)?;
    if !amplitude.is_finite() {
        return Err(ModelError::NonFinite("amplitude"));
    }
    if amplitude < 0.0 {
        return Err(ModelError::NegativeAmplitude);
    }
    Ok(amplitude * amplitude * PER_SECOND_PER_MHZ * HBAR * omega)
}
