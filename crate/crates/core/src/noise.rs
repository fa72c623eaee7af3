//! Closed-form estimate of the photons that gain noise adds to resonator 1,
//! and the pump power at which the coherent drive drops to the noise scale.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{build_dynamical_matrix, power_from_amplitude, Frame, ModelError, ResonatorChain};
use crate::stability::{eigenvalues, StabilityError};

/// Largest eigenvector-matrix condition number accepted as diagonalizable.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NoiseError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Stability(#[from] StabilityError),
    #[error("eigenvector matrix is numerically singular (condition {condition:e})")]
    DefectiveMatrix { condition: f64 },
    #[error("chain has no active resonator")]
    NoActiveResonator,
    #[error("gain must be finite and non-negative")]
    InvalidGain,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseEstimate {
    /// |C_{k,a}·g₂,s/λ_k|² for each eigenmode k, where a is the active
    /// resonator and C the inverse of the eigenvector matrix.
    pub per_mode: Vec<f64>,
    /// Entry belonging to the eigenvalue of largest magnitude.
    pub fastest_mode_value: f64,
    pub selected: usize,
    /// Eigenvalues in the order of `per_mode` [MHz].
    pub eigenvalues: Vec<Complex64>,
    pub g2s: f64,
}

/// Unit-norm null vector of (M − λI), phase fixed so that its largest
/// component is real and positive.
fn eigenvector(m: &DMatrix<Complex64>, lambda: Complex64) -> DVector<Complex64> {
    let n = m.nrows();
    let shifted = m - DMatrix::from_diagonal_element(n, n, lambda);
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let smallest = svd
        .singular_values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty matrix");
    let mut v: DVector<Complex64> = v_t.row(smallest).transpose().map(|z| z.conj());
    let norm = v.norm();
    v /= Complex64::new(norm, 0.0);
    let anchor = v
        .iter()
        .copied()
        .max_by(|a, b| a.norm().total_cmp(&b.norm()))
        .expect("non-empty vector");
    let phase = anchor.conj() / anchor.norm();
    v * phase
}

/// Unit-norm, phase-anchored eigenvectors as columns, with eigenvalues in
/// the order of [`eigenvalues`].
pub fn eigen_decomposition(
    m: &DMatrix<Complex64>,
) -> Result<(Vec<Complex64>, DMatrix<Complex64>), NoiseError> {
    let values = eigenvalues(m)?;
    let n = values.len();
    let mut v = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for (k, &lambda) in values.iter().enumerate() {
        v.set_column(k, &eigenvector(m, lambda));
    }
    let sv = v.clone().svd(false, false).singular_values;
    let smallest = sv.iter().copied().fold(f64::INFINITY, f64::min);
    let largest = sv.iter().copied().fold(0.0, f64::max);
    let condition = largest / smallest;
    if !(condition <= MAX_CONDITION) {
        return Err(NoiseError::DefectiveMatrix { condition });
    }
    Ok((values, v))
}

/// Extra photons in resonator 1 from the amplification noise, for each
/// eigenmode of the resonant coupled-mode matrix at effective gain
/// g₂,s − γ₂.
pub fn noise_photon_estimates(
    chain: &ResonatorChain,
    g2s: f64,
    gamma2: f64,
) -> Result<NoiseEstimate, NoiseError> {
    if !(g2s >= 0.0 && g2s.is_finite() && gamma2.is_finite()) {
        return Err(NoiseError::InvalidGain);
    }
    let active = chain.active_index().ok_or(NoiseError::NoActiveResonator)?;
    let m = build_dynamical_matrix(chain, g2s - gamma2, chain.resonators[0].omega, Frame::Rotating)?;
    let (values, v) = eigen_decomposition(&m)?;
    let c = v
        .clone()
        .try_inverse()
        .ok_or(NoiseError::DefectiveMatrix { condition: f64::INFINITY })?;
    let per_mode: Vec<f64> = values
        .iter()
        .enumerate()
        .map(|(k, &lambda)| (c[(k, active)] * g2s / lambda).norm_sqr())
        .collect();
    let mut selected = 0;
    for (k, lambda) in values.iter().enumerate().skip(1) {
        let best = values[selected];
        let (a, b) = (lambda.norm(), best.norm());
        let tie = (a - b).abs() <= 1e-12 * a.max(b);
        if (!tie && a > b) || (tie && lambda.im > best.im) {
            selected = k;
        }
    }
    Ok(NoiseEstimate {
        fastest_mode_value: per_mode[selected],
        per_mode,
        selected,
        eigenvalues: values,
        g2s,
    })
}

/// Pump power [W] whose drive amplitude is 1 √Hz at `wavelength` [m].
pub fn noise_floor_power(wavelength: f64) -> Result<f64, ModelError> {
    power_from_amplitude(1e-3, wavelength)
}

/// Serializable summary of a noise estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseReport {
    pub g2s_mhz: f64,
    pub per_mode: Vec<f64>,
    pub selected: f64,
    pub selected_index: usize,
    pub eigenvalues_mhz: Vec<[f64; 2]>,
    pub floor_power_w: f64,
}

impl NoiseReport {
    pub fn new(estimate: &NoiseEstimate, floor_power_w: f64) -> Self {
        NoiseReport {
            g2s_mhz: estimate.g2s,
            per_mode: estimate.per_mode.clone(),
            selected: estimate.fastest_mode_value,
            selected_index: estimate.selected,
            eigenvalues_mhz: estimate.eigenvalues.iter().map(|l| [l.re, l.im]).collect(),
            floor_power_w,
        }
    }
}
