//! Eigenvalue stability of the coupled-mode matrix, closed-form coupling
//! thresholds for a resonant gain/loss trio, and regime maps over (J₁, J₂).

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{build_dynamical_matrix, Frame, ModelError, PumpDrive, ResonatorChain};
use crate::search::bisect;

/// Half-width [MHz] of the band of max Re λ labelled Marginal.
pub const MARGINAL_TOL: f64 = 1e-6;
/// Largest matrix handed to the dense eigen solver.
pub const MAX_EIGEN_DIM: usize = 8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StabilityError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("eigenvalue iteration did not converge")]
    NoConvergence,
    #[error("matrix of dimension {0} exceeds the dense solver limit")]
    MatrixTooLarge(usize),
    #[error("matrix must be square with finite entries")]
    InvalidMatrix,
    #[error("closed-form thresholds need kappa2 < min(kappa1, kappa3); classify numerically instead")]
    RegimeNotCovered,
    #[error("bracket does not contain a sign change of the largest real part")]
    NoSignChange,
    #[error("invalid arguments: {0}")]
    InvalidArguments(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    Stable,
    Marginal,
    Unstable,
}

impl Regime {
    pub fn from_max_real_part(max_re: f64) -> Self {
        if max_re.abs() <= MARGINAL_TOL {
            Regime::Marginal
        } else if max_re < 0.0 {
            Regime::Stable
        } else {
            Regime::Unstable
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::Stable => "stable",
            Regime::Marginal => "marginal",
            Regime::Unstable => "unstable",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    /// Sorted by descending real part, then descending imaginary part.
    pub eigenvalues: Vec<Complex64>,
    pub max_real_part: f64,
    /// No eigenvalue with a real part above the marginal band.
    pub stable: bool,
    pub margin: f64,
    pub regime: Regime,
}

fn sort_eigenvalues(values: &mut [Complex64]) {
    values.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
}

/// All eigenvalues of a dense complex matrix of dimension at most 8, in
/// descending order of real part (ties by descending imaginary part).
pub fn eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<Complex64>, StabilityError> {
    if !m.is_square() || m.iter().any(|v| !v.is_finite()) {
        return Err(StabilityError::InvalidMatrix);
    }
    let n = m.nrows();
    if n > MAX_EIGEN_DIM {
        return Err(StabilityError::MatrixTooLarge(n));
    }
    if n == 0 {
        return Ok(Vec::new());
    }
    let schur = m
        .clone()
        .try_schur(f64::EPSILON, 10_000)
        .ok_or(StabilityError::NoConvergence)?;
    let (_, t) = schur.unpack();
    let mut values: Vec<Complex64> = t.diagonal().iter().copied().collect();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(StabilityError::NoConvergence);
    }
    sort_eigenvalues(&mut values);
    Ok(values)
}

/// Largest eigenvalue real part of the chain's coupled-mode matrix.
pub fn max_real_part(chain: &ResonatorChain, gain: f64) -> Result<f64, StabilityError> {
    let m = build_dynamical_matrix(chain, gain, chain.resonators[0].omega, Frame::Rotating)?;
    Ok(eigenvalues(&m)?[0].re)
}

/// Stability of the chain under effective gain `gain`, from the matrix in
/// the requested frame (real parts do not depend on it).
pub fn classify_stability_in(
    chain: &ResonatorChain,
    gain: f64,
    pump: &PumpDrive,
    frame: Frame,
) -> Result<StabilityReport, StabilityError> {
    let m = build_dynamical_matrix(chain, gain, pump.omega_p, frame)?;
    let eigenvalues = eigenvalues(&m)?;
    let max_real_part = eigenvalues[0].re;
    let regime = Regime::from_max_real_part(max_real_part);
    Ok(StabilityReport {
        eigenvalues,
        max_real_part,
        stable: regime != Regime::Unstable,
        margin: -max_real_part,
        regime,
    })
}

pub fn classify_stability(
    chain: &ResonatorChain,
    gain: f64,
    pump: &PumpDrive,
) -> Result<StabilityReport, StabilityError> {
    classify_stability_in(chain, gain, pump, Frame::Rotating)
}

/// Closed-form stability thresholds of a resonant passive–gain–passive trio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Smallest stable J₂ for the given J₁; `None` when any J₂ is stable.
    pub min_j2: Option<f64>,
    /// Smallest stable J₁ for the given J₂; `None` when any J₁ is stable.
    pub min_j1: Option<f64>,
    /// √(κ₁κ₂): at or above this J₁ no J₂ constraint applies.
    pub sqrt_k1k2: f64,
    /// √(κ₂κ₃): at or above this J₂ no J₁ constraint applies.
    pub sqrt_k2k3: f64,
}

/// Stability thresholds from det M = κ₁κ₂κ₃ − κ₁J₂² − J₁²κ₃ at resonance.
/// Pass exactly one of `j1` and `j2`.
pub fn closed_form_thresholds(
    kappa1: f64,
    kappa2: f64,
    kappa3: f64,
    j1: Option<f64>,
    j2: Option<f64>,
) -> Result<Thresholds, StabilityError> {
    if !(kappa1 > 0.0 && kappa3 > 0.0 && kappa2 >= 0.0) {
        return Err(StabilityError::InvalidArguments("rates must be positive"));
    }
    if kappa2 >= kappa3 || kappa2 >= kappa1 {
        return Err(StabilityError::RegimeNotCovered);
    }
    let sqrt_k1k2 = (kappa1 * kappa2).sqrt();
    let sqrt_k2k3 = (kappa2 * kappa3).sqrt();
    let mut out = Thresholds {
        min_j2: None,
        min_j1: None,
        sqrt_k1k2,
        sqrt_k2k3,
    };
    match (j1, j2) {
        (Some(j1), None) => {
            if !(j1 >= 0.0) {
                return Err(StabilityError::InvalidArguments("j1 must be non-negative"));
            }
            if j1 < sqrt_k1k2 {
                out.min_j2 = Some(((kappa1 * kappa2 * kappa3 - j1 * j1 * kappa3) / kappa1).sqrt());
            }
        }
        (None, Some(j2)) => {
            if !(j2 >= 0.0) {
                return Err(StabilityError::InvalidArguments("j2 must be non-negative"));
            }
            if j2 < sqrt_k2k3 {
                out.min_j1 = Some(((kappa1 * kappa2 * kappa3 - j2 * j2 * kappa1) / kappa3).sqrt());
            }
        }
        _ => return Err(StabilityError::InvalidArguments("give exactly one of j1 and j2")),
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MapCell {
    pub j1: f64,
    pub j2: f64,
    pub max_real_part: f64,
    pub regime: Regime,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityMap {
    pub j1_grid: Vec<f64>,
    pub j2_grid: Vec<f64>,
    /// Row-major with J₁ as the slow index.
    pub cells: Vec<MapCell>,
    /// Closed-form (J₁, min J₂) boundary when the trio is in the covered regime.
    pub boundary: Option<Vec<(f64, f64)>>,
}

impl StabilityMap {
    pub fn cell(&self, i1: usize, i2: usize) -> &MapCell {
        &self.cells[i1 * self.j2_grid.len() + i2]
    }
}

/// Regime labels over a (J₁, J₂) grid, evaluated in parallel.
pub fn stability_map(
    template: &ResonatorChain,
    gain: f64,
    j1_grid: &[f64],
    j2_grid: &[f64],
) -> Result<StabilityMap, StabilityError> {
    if template.len() < 3 {
        return Err(StabilityError::InvalidArguments("map needs at least three resonators"));
    }
    if j1_grid.iter().chain(j2_grid).any(|j| !(j.is_finite() && *j > 0.0)) {
        return Err(StabilityError::InvalidArguments("grid couplings must be finite and positive"));
    }
    let pairs: Vec<(f64, f64)> = j1_grid
        .iter()
        .flat_map(|&j1| j2_grid.iter().map(move |&j2| (j1, j2)))
        .collect();
    let cells = pairs
        .par_iter()
        .map(|&(j1, j2)| {
            let chain = template.with_coupling(0, j1).with_coupling(1, j2);
            let max_re = max_real_part(&chain, gain)?;
            Ok(MapCell {
                j1,
                j2,
                max_real_part: max_re,
                regime: Regime::from_max_real_part(max_re),
            })
        })
        .collect::<Result<Vec<_>, StabilityError>>()?;
    Ok(StabilityMap {
        j1_grid: j1_grid.to_vec(),
        j2_grid: j2_grid.to_vec(),
        cells,
        boundary: boundary_curve(template, gain, 200),
    })
}

/// Points (J₁, min stable J₂) of the closed-form boundary, if it applies.
pub fn boundary_curve(template: &ResonatorChain, gain: f64, samples: usize) -> Option<Vec<(f64, f64)>> {
    if template.len() != 3 || template.active_index() != Some(1) || !template.is_degenerate(1e-12) {
        return None;
    }
    let (k1, k3) = (template.resonators[0].rate, template.resonators[2].rate);
    let edge = closed_form_thresholds(k1, gain, k3, Some(0.0), None).ok()?.sqrt_k1k2;
    let samples = samples.max(2);
    Some(
        (0..samples)
            .map(|i| {
                let j1 = edge * i as f64 / (samples - 1) as f64;
                let j2 = closed_form_thresholds(k1, gain, k3, Some(j1), None)
                    .ok()
                    .and_then(|t| t.min_j2)
                    .unwrap_or(0.0);
                (j1, j2)
            })
            .collect(),
    )
}

/// J₁ at which the largest real part of a resonant passive–gain–passive
/// trio crosses zero, by bisection within `bracket`.
pub fn marginal_j1(
    kappa1: f64,
    kappa2: f64,
    kappa3: f64,
    j2: f64,
    bracket: (f64, f64),
) -> Result<f64, StabilityError> {
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi > lo && hi.is_finite()) {
        return Err(StabilityError::InvalidArguments("bracket must satisfy 0 < lo < hi"));
    }
    let template = ResonatorChain::degenerate_trio(0.0, kappa1, kappa1 / 2.0, kappa2, kappa3, lo, j2);
    bisect(
        |j1| max_real_part(&template.with_coupling(0, j1), kappa2),
        lo,
        hi,
        1e-12 * hi,
    )?
    .ok_or(StabilityError::NoSignChange)
}
