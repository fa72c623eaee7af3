use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::AnalyticError;
use crate::model::{check_chain, PumpDrive, ResonatorChain, Role};

const PRECONDITION_TOL: f64 = 1e-9;

/// Coupling and pump frequency at which resonator 1 stays empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransparencyPoint {
    pub j2_star: f64,
    pub omega_p_star: f64,
}

/// Coefficients of the dark and bright combinations over (a₂, a₃).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DarkBrightBasis {
    pub dark_coeffs: [Complex64; 2],
    pub bright_coeffs: [Complex64; 2],
}

impl DarkBrightBasis {
    /// Applies the dark combination to a pair of amplitudes.
    pub fn dark_projection(&self, a2: Complex64, a3: Complex64) -> Complex64 {
        self.dark_coeffs[0] * a2 + self.dark_coeffs[1] * a3
    }

    pub fn bright_projection(&self, a2: Complex64, a3: Complex64) -> Complex64 {
        self.bright_coeffs[0] * a2 + self.bright_coeffs[1] * a3
    }

    /// Σ conj(b_i)·d_i, which equals κ₂ − κ₃.
    pub fn overlap(&self) -> Complex64 {
        self.bright_coeffs
            .iter()
            .zip(&self.dark_coeffs)
            .map(|(b, d)| b.conj() * d)
            .sum()
    }
}

/// Transparency point of a gain resonator (rate κ₂, frequency ω₂) coupled to
/// a passive one (κ₃, ω₃): both parts of κ₂ + iΔ₂ − J₂²/(κ₃ − iΔ₃) vanish.
///
/// Equal rates with equal frequencies form a degenerate family; J₂* = κ₂ at
/// ωp* = ω₂ is returned for it.
pub fn transparency_condition_general(
    kappa2: f64,
    kappa3: f64,
    omega2: f64,
    omega3: f64,
) -> Result<TransparencyPoint, AnalyticError> {
    if !(kappa2 > 0.0 && kappa3 > 0.0) {
        return Err(AnalyticError::NonPositiveRate);
    }
    if kappa2 == kappa3 {
        if omega2 != omega3 {
            return Err(AnalyticError::EqualRates);
        }
        return Ok(TransparencyPoint {
            j2_star: kappa2,
            omega_p_star: omega2,
        });
    }
    let dk = kappa2 - kappa3;
    let dw = omega2 - omega3;
    let j2_star = (kappa2 * kappa3 * (dw * dw + dk * dk) / (dk * dk)).sqrt();
    let omega_p_star = (omega3 * kappa2 - omega2 * kappa3) / dk;
    Ok(TransparencyPoint {
        j2_star,
        omega_p_star,
    })
}

/// Transparency coupling J₂ of a degenerate four-resonator chain, where the
/// subfraction −κ₂ + J₂²/(κ₃ + J₃²/κ₄) vanishes.
pub fn transparency_condition_four(
    kappa2: f64,
    kappa3: f64,
    kappa4: f64,
    j3: f64,
    omega0: f64,
) -> Result<TransparencyPoint, AnalyticError> {
    if !(kappa2 > 0.0 && kappa3 > 0.0 && kappa4 > 0.0 && j3 > 0.0) {
        return Err(AnalyticError::NonPositiveRate);
    }
    Ok(TransparencyPoint {
        j2_star: (kappa2 * (j3 * j3 + kappa3 * kappa4) / kappa4).sqrt(),
        omega_p_star: omega0,
    })
}

/// Steady amplitudes at the degenerate transparency point, where resonator 1
/// is empty and the field sits in the (a₂, a₃) dark combination:
/// s·(0, i/J₁, −√(κ₂/κ₃)/J₁).
pub fn dark_state(
    chain: &ResonatorChain,
    gain: f64,
    pump: &PumpDrive,
) -> Result<[Complex64; 3], AnalyticError> {
    check_chain(chain)?;
    if chain.len() != 3 {
        return Err(AnalyticError::UnsupportedLength {
            found: chain.len(),
            supported: "3",
        });
    }
    let roles: Vec<Role> = chain.resonators.iter().map(|r| r.role).collect();
    if roles != [Role::Passive, Role::Active, Role::Passive] {
        return Err(AnalyticError::ConditionsNotMet(
            "chain must be passive, active, passive",
        ));
    }
    let scale = chain.rate_scale();
    if !chain.is_degenerate(PRECONDITION_TOL) {
        return Err(AnalyticError::ConditionsNotMet("frequencies are not degenerate"));
    }
    if pump.detuning(chain, 0).abs() > PRECONDITION_TOL * scale {
        return Err(AnalyticError::ConditionsNotMet("pump is detuned"));
    }
    let kappa3 = chain.resonators[2].rate;
    if !(gain > 0.0 && kappa3 > 0.0) {
        return Err(AnalyticError::ConditionsNotMet("gain and kappa3 must be positive"));
    }
    let (j1, j2) = (chain.couplings[0], chain.couplings[1]);
    let j2_star = (gain * kappa3).sqrt();
    if (j2 - j2_star).abs() > PRECONDITION_TOL * j2_star {
        return Err(AnalyticError::ConditionsNotMet("J2 is not at sqrt(kappa2 kappa3)"));
    }
    let s = chain.drive(pump);
    Ok([
        Complex64::new(0.0, 0.0),
        Complex64::new(0.0, s / j1),
        Complex64::new(-(gain / kappa3).sqrt() * s / j1, 0.0),
    ])
}

/// Dark d = −i√κ₂·a₂ + √κ₃·a₃ and bright b = −i√κ₂·a₂ − √κ₃·a₃.
/// The pair is not orthogonal unless κ₂ = κ₃.
pub fn dark_bright_basis(kappa2: f64, kappa3: f64) -> Result<DarkBrightBasis, AnalyticError> {
    if !(kappa2 > 0.0 && kappa3 > 0.0) {
        return Err(AnalyticError::NonPositiveRate);
    }
    let (r2, r3) = (kappa2.sqrt(), kappa3.sqrt());
    Ok(DarkBrightBasis {
        dark_coeffs: [Complex64::new(0.0, -r2), Complex64::new(r3, 0.0)],
        bright_coeffs: [Complex64::new(0.0, -r2), Complex64::new(-r3, 0.0)],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{steady_state_continued_fraction, steady_state_exact};
    use crate::model::Resonator;
    use approx::assert_relative_eq;

    fn inset() -> ResonatorChain {
        ResonatorChain::degenerate_trio(0.0, 10.0, 5.0, 0.2, 5.0, 2.0, 1.0)
    }

    #[test]
    fn degenerate_condition() {
        let p = transparency_condition_general(0.2, 5.0, 3.0, 3.0).unwrap();
        assert_relative_eq!(p.j2_star, 1.0, max_relative = 1e-15);
        assert_eq!(p.omega_p_star, 3.0);
    }

    #[test]
    fn non_degenerate_residual() {
        let (k2, k3, w2, w3) = (1.0, 2.0, 100.0, 101.0);
        let p = transparency_condition_general(k2, k3, w2, w3).unwrap();
        let d2 = p.omega_p_star - w2;
        let d3 = p.omega_p_star - w3;
        let residual = Complex64::new(k2, d2)
            - p.j2_star * p.j2_star / Complex64::new(k3, -d3);
        assert!(residual.norm() < 1e-12);
    }

    #[test]
    fn equal_rates() {
        assert_eq!(
            transparency_condition_general(1.0, 1.0, 0.0, 1.0),
            Err(AnalyticError::EqualRates)
        );
        let p = transparency_condition_general(1.5, 1.5, 2.0, 2.0).unwrap();
        assert_eq!(p.j2_star, 1.5);
        assert_eq!(p.omega_p_star, 2.0);
        assert_eq!(
            transparency_condition_general(0.0, 1.0, 0.0, 0.0),
            Err(AnalyticError::NonPositiveRate)
        );
    }

    #[test]
    fn four_resonator_condition() {
        let p = transparency_condition_four(0.1, 1.0, 2.0, 1.0, 0.0).unwrap();
        assert_relative_eq!(p.j2_star, 0.15f64.sqrt(), max_relative = 1e-15);
        let chain = ResonatorChain::new(
            vec![
                Resonator::passive(0.0, 4.0),
                Resonator::active(0.0, 0.1),
                Resonator::passive(0.0, 1.0),
                Resonator::passive(0.0, 2.0),
            ],
            vec![0.7, p.j2_star, 1.0],
            2.0,
        );
        let a1 = steady_state_continued_fraction(&chain, 0.1, &PumpDrive::new(0.0, 1.0).unwrap())
            .unwrap();
        assert!(a1.norm() < 1e-14);
        let limit = transparency_condition_four(0.1, 1.0, 2.0, 1e-9, 0.0).unwrap();
        assert_relative_eq!(limit.j2_star, 0.1f64.sqrt(), max_relative = 1e-12);
        assert_eq!(
            transparency_condition_four(0.1, 1.0, 2.0, 0.0, 0.0),
            Err(AnalyticError::NonPositiveRate)
        );
    }

    #[test]
    fn dark_state_matches_exact_solution() {
        let pump = PumpDrive::new(0.0, 1.0).unwrap();
        let dark = dark_state(&inset(), 0.2, &pump).unwrap();
        let exact = steady_state_exact(&inset(), 0.2, &pump).unwrap();
        for (d, e) in dark.iter().zip(&exact.amplitudes).skip(1) {
            assert!((d - e).norm() < 1e-12 * d.norm());
        }
        let s = 10f64.sqrt();
        assert_relative_eq!(dark[1].im, s / 2.0, max_relative = 1e-15);
        assert_relative_eq!(dark[1].norm_sqr() / dark[2].norm_sqr(), 25.0, max_relative = 1e-12);
        // J₁·A₂ = i·s
        let lhs = 2.0 * dark[1];
        assert!((lhs - Complex64::new(0.0, s)).norm() < 1e-15 * s);
    }

    #[test]
    fn dark_state_preconditions() {
        let pump = PumpDrive::new(0.0, 1.0).unwrap();
        let off = inset().with_coupling(1, 1.01);
        assert!(matches!(
            dark_state(&off, 0.2, &pump),
            Err(AnalyticError::ConditionsNotMet(_))
        ));
        let detuned = PumpDrive::new(0.1, 1.0).unwrap();
        assert!(matches!(
            dark_state(&inset(), 0.2, &detuned),
            Err(AnalyticError::ConditionsNotMet(_))
        ));
        let mut shifted = inset();
        shifted.resonators[2].omega = 0.5;
        assert!(matches!(
            dark_state(&shifted, 0.2, &pump),
            Err(AnalyticError::ConditionsNotMet(_))
        ));
    }

    #[test]
    fn basis_annihilates_dark_state() {
        let pump = PumpDrive::new(0.0, 1.0).unwrap();
        let dark = dark_state(&inset(), 0.2, &pump).unwrap();
        let basis = dark_bright_basis(0.2, 5.0).unwrap();
        assert!(basis.dark_projection(dark[1], dark[2]).norm() < 1e-12);
        assert!(basis.bright_projection(dark[1], dark[2]).norm() > 1.0);
        assert_relative_eq!(basis.overlap().re, 0.2 - 5.0, max_relative = 1e-14);
        assert_eq!(basis.overlap().im, 0.0);
    }

    #[test]
    fn symmetric_basis() {
        let basis = dark_bright_basis(1.0, 1.0).unwrap();
        assert_eq!(basis.dark_coeffs, [Complex64::new(0.0, -1.0), Complex64::new(1.0, 0.0)]);
        assert_eq!(basis.bright_coeffs, [Complex64::new(0.0, -1.0), Complex64::new(-1.0, 0.0)]);
        assert_eq!(basis.overlap(), Complex64::new(0.0, 0.0));
        assert_eq!(dark_bright_basis(1.0, -1.0), Err(AnalyticError::NonPositiveRate));
    }
}
