use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::AnalyticError;
use crate::model::{build_dynamical_matrix, check_chain, Frame, PumpDrive, ResonatorChain};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Driven steady state of a chain in the pump's rotating frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadySolution {
    /// Intracavity amplitudes A_k [√MHz], resonator 1 first.
    pub amplitudes: Vec<Complex64>,
    /// ε_T = √(2κ_ex)·A₁/εp.
    pub susceptibility: Complex64,
    /// Output/input field ratio t = 1 − ε_T.
    pub transmission: Complex64,
    /// Pump detuning from resonator 1, ωp − ω₁ [MHz].
    pub detuning_x: f64,
}

impl SteadySolution {
    /// Builds a solution from amplitudes and the response A₁ per unit drive.
    pub(crate) fn new(
        chain: &ResonatorChain,
        pump: &PumpDrive,
        amplitudes: Vec<Complex64>,
        a1_per_drive: Complex64,
    ) -> Self {
        let susceptibility = 2.0 * chain.kappa_ex * a1_per_drive;
        SteadySolution {
            amplitudes,
            susceptibility,
            transmission: Complex64::new(1.0, 0.0) - susceptibility,
            detuning_x: pump.detuning(chain, 0),
        }
    }

    pub fn photon_numbers(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Output/input field ratio t = 1 − ε_T.
pub fn transmission(solution: &SteadySolution) -> Complex64 {
    Complex64::new(1.0, 0.0) - solution.susceptibility
}

/// Closed-form steady state of a three-resonator chain.
///
/// With d_k = γ_k − iΔ_k (γ_k = κ_k for passive, −κ₂ for active) the
/// response is A₁ = s·(J₂² + d₂d₃)/D, A₂ = s·iJ₁d₃/D, A₃ = −s·J₁J₂/D with
/// D = η + (J₁² + d₁d₂)·d₃ and η = J₂²·d₁, s = √(2κ_ex)·εp. For an active
/// middle resonator this is the familiar
/// `A₁ ∝ J₂² − (κ₂+iΔ₂)(κ₃−iΔ₃)` numerator.
pub fn steady_state_exact(
    chain: &ResonatorChain,
    gain: f64,
    pump: &PumpDrive,
) -> Result<SteadySolution, AnalyticError> {
    check_chain(chain)?;
    if chain.len() != 3 {
        return Err(AnalyticError::UnsupportedLength {
            found: chain.len(),
            supported: "3",
        });
    }
    let d: Vec<Complex64> = (0..3)
        .map(|k| Complex64::new(chain.signed_damping(k, gain), -pump.detuning(chain, k)))
        .collect();
    let (j1, j2) = (chain.couplings[0], chain.couplings[1]);
    let eta = j2 * j2 * d[0];
    let denominator = eta + (j1 * j1 + d[0] * d[1]) * d[2];
    if denominator == ZERO || !denominator.is_finite() {
        return Err(AnalyticError::SingularDenominator);
    }
    let s = chain.drive(pump);
    let a1_per_drive = (j2 * j2 + d[1] * d[2]) / denominator;
    let a2_per_drive = Complex64::new(0.0, j1) * d[2] / denominator;
    let a3_per_drive = Complex64::new(-j1 * j2, 0.0) / denominator;
    let amplitudes = vec![s * a1_per_drive, s * a2_per_drive, s * a3_per_drive];
    Ok(SteadySolution::new(chain, pump, amplitudes, a1_per_drive))
}

/// Value of a continued-fraction level, allowing the point at infinity that
/// a vanishing inner subfraction produces.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Level {
    Finite(Complex64),
    Infinite,
}

/// Outermost denominator L₁ of A₁ = s/L₁, evaluated from the far end of
/// the chain inward: L_N = d_N, L_k = d_k + J_k²/L_{k+1}.
fn response_denominator(chain: &ResonatorChain, gain: f64, omega_p: f64) -> Level {
    let n = chain.len();
    let d = |k: usize| Complex64::new(chain.signed_damping(k, gain), -(omega_p - chain.resonators[k].omega));
    let mut level = Level::Finite(d(n - 1));
    for k in (0..n - 1).rev() {
        let j = chain.couplings[k];
        level = match level {
            Level::Infinite => Level::Finite(d(k)),
            Level::Finite(inner) if inner == ZERO => Level::Infinite,
            Level::Finite(inner) => Level::Finite(d(k) + j * j / inner),
        };
    }
    level
}

fn a1_per_drive(chain: &ResonatorChain, gain: f64, omega_p: f64) -> Result<Complex64, AnalyticError> {
    match response_denominator(chain, gain, omega_p) {
        Level::Infinite => Ok(ZERO),
        Level::Finite(outer) if outer == ZERO || !outer.is_finite() => {
            Err(AnalyticError::SingularSubfraction)
        }
        Level::Finite(outer) => Ok(Complex64::new(1.0, 0.0) / outer),
    }
}

/// A₁ from the nested continued fraction, for chains of up to four
/// resonators. A vanishing inner subfraction yields A₁ = 0 exactly.
pub fn steady_state_continued_fraction(
    chain: &ResonatorChain,
    gain: f64,
    pump: &PumpDrive,
) -> Result<Complex64, AnalyticError> {
    check_chain(chain)?;
    if chain.len() > 4 {
        return Err(AnalyticError::UnsupportedLength {
            found: chain.len(),
            supported: "1 to 4",
        });
    }
    Ok(chain.drive(pump) * a1_per_drive(chain, gain, pump.omega_p)?)
}

/// ε_T at pump frequency `omega_p` via the continued fraction.
pub fn susceptibility_at(
    chain: &ResonatorChain,
    gain: f64,
    omega_p: f64,
) -> Result<Complex64, AnalyticError> {
    Ok(2.0 * chain.kappa_ex * a1_per_drive(chain, gain, omega_p)?)
}

/// Steady state of a chain of any length by solving M·A = −v_in directly.
pub fn steady_state_linear(
    chain: &ResonatorChain,
    gain: f64,
    pump: &PumpDrive,
) -> Result<SteadySolution, AnalyticError> {
    let m = build_dynamical_matrix(chain, gain, pump.omega_p, Frame::Rotating)?;
    let n = chain.len();
    let mut rhs = DVector::from_element(n, ZERO);
    rhs[0] = Complex64::new(-1.0, 0.0);
    let lu = m.lu();
    let unit: DVector<Complex64> = lu.solve(&rhs).ok_or(AnalyticError::SingularDenominator)?;
    if unit.iter().any(|a| !a.is_finite()) {
        return Err(AnalyticError::SingularDenominator);
    }
    let s = chain.drive(pump);
    let amplitudes = unit.iter().map(|a| s * a).collect();
    Ok(SteadySolution::new(chain, pump, amplitudes, unit[0]))
}

/// Power transmission T = C²/(C+1)² at the window centre of two coupled
/// passive resonators, with cooperativity C = J₁²/(κ₁κ₂).
pub fn cooperativity_transmission(kappa1: f64, kappa2: f64, j1: f64) -> Result<f64, AnalyticError> {
    if !(kappa1 > 0.0 && kappa2 > 0.0 && j1 > 0.0) {
        return Err(AnalyticError::NonPositiveRate);
    }
    let c = j1 * j1 / (kappa1 * kappa2);
    Ok((c / (c + 1.0)).powi(2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Resonator;
    use approx::assert_relative_eq;

    fn inset() -> ResonatorChain {
        ResonatorChain::degenerate_trio(0.0, 10.0, 5.0, 0.2, 5.0, 2.0, 1.0)
    }

    fn resonant(amplitude: f64) -> PumpDrive {
        PumpDrive::new(0.0, amplitude).unwrap()
    }

    #[test]
    fn inset_is_fully_transparent() {
        let sol = steady_state_exact(&inset(), 0.2, &resonant(1.0)).unwrap();
        assert!(sol.amplitudes[0].norm() < 1e-14 * 10f64.sqrt());
        assert!((sol.transmission.norm_sqr() - 1.0).abs() < 1e-12);
        let a1 = steady_state_continued_fraction(&inset(), 0.2, &resonant(1.0)).unwrap();
        assert_eq!(a1, ZERO);
    }

    #[test]
    fn unforced_chain_is_empty() {
        let sol = steady_state_exact(&inset(), 0.2, &resonant(0.0)).unwrap();
        assert!(sol.amplitudes.iter().all(|a| *a == ZERO));
        // the susceptibility is still defined by the linear response
        assert!(sol.susceptibility.norm() < 1e-15);
    }

    #[test]
    fn figure_four_critical_coupling() {
        let chain = ResonatorChain::degenerate_trio(0.0, 20.0, 10.0, 0.06, 6.0, 1.0, 0.6);
        let sol = steady_state_exact(&chain, 0.06, &resonant(3.0)).unwrap();
        assert!((sol.transmission.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn figure_four_amplifies_below_critical_coupling() {
        let chain = ResonatorChain::degenerate_trio(0.0, 20.0, 10.0, 0.06, 6.0, 1.0, 0.4);
        let a1 = steady_state_continued_fraction(&chain, 0.06, &resonant(1.0)).unwrap();
        let eps = (2.0 * chain.kappa_ex).sqrt() * a1;
        assert!((Complex64::new(1.0, 0.0) - eps).norm_sqr() > 1.0);
    }

    #[test]
    fn two_passive_resonators() {
        let (k1, kex, k2, j) = (4.0, 2.0, 0.7, 1.3);
        let chain = ResonatorChain::new(
            vec![Resonator::passive(0.0, k1), Resonator::passive(0.0, k2)],
            vec![j],
            kex,
        );
        let a1 = steady_state_continued_fraction(&chain, 0.0, &resonant(1.0)).unwrap();
        let eps = (2.0 * kex).sqrt() * a1;
        assert_relative_eq!(eps.re, 2.0 * kex / (k1 + j * j / k2), max_relative = 1e-14);
        assert!(eps.im.abs() < 1e-15);
    }

    #[test]
    fn critically_coupled_single_cavity_extinguishes() {
        let chain = ResonatorChain::new(vec![Resonator::passive(0.0, 6.0)], vec![], 3.0);
        let sol = steady_state_linear(&chain, 0.0, &resonant(1.0)).unwrap();
        assert!(transmission(&sol).norm() < 1e-15);
    }

    #[test]
    fn pole_is_reported() {
        // bare active resonator at zero net gain: d₁ = 0
        let chain = ResonatorChain::new(vec![Resonator::active(0.0, 0.0)], vec![], 0.5);
        assert_eq!(
            steady_state_continued_fraction(&chain, 0.0, &resonant(1.0)),
            Err(AnalyticError::SingularSubfraction)
        );
        assert_eq!(
            steady_state_linear(&chain, 0.0, &resonant(1.0)),
            Err(AnalyticError::SingularDenominator)
        );
        // κ₁ + J₁²/(J₂²/κ₃ − κ₂) vanishes at J₂² = κ₃(κ₂ − J₁²/κ₁)
        let chain = ResonatorChain::degenerate_trio(0.0, 20.0, 10.0, 0.06, 6.0, 1.0, 0.06f64.sqrt());
        match steady_state_exact(&chain, 0.06, &resonant(1.0)) {
            Err(AnalyticError::SingularDenominator) => {}
            Ok(sol) => assert!(sol.amplitudes[0].norm() > 1e12),
            Err(other) => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn length_limits() {
        let five = ResonatorChain::new(vec![Resonator::passive(0.0, 1.0); 5], vec![1.0; 4], 0.5);
        assert!(matches!(
            steady_state_continued_fraction(&five, 0.0, &resonant(1.0)),
            Err(AnalyticError::UnsupportedLength { found: 5, .. })
        ));
        assert!(matches!(
            steady_state_exact(&five, 0.0, &resonant(1.0)),
            Err(AnalyticError::UnsupportedLength { found: 5, .. })
        ));
        assert!(steady_state_linear(&five, 0.0, &resonant(1.0)).is_ok());
    }

    #[test]
    fn cooperativity_values() {
        // C = 1
        assert_relative_eq!(cooperativity_transmission(2.0, 0.5, 1.0).unwrap(), 0.25);
        let mut last = 0.0;
        for j in [0.1, 1.0, 10.0, 100.0, 1000.0] {
            let t = cooperativity_transmission(2.0, 0.5, j).unwrap();
            assert!(t > last && t < 1.0);
            last = t;
        }
        assert!(last > 0.9999);
        assert_eq!(
            cooperativity_transmission(0.0, 1.0, 1.0),
            Err(AnalyticError::NonPositiveRate)
        );
    }

    #[test]
    fn cooperativity_matches_two_resonator_fraction() {
        for &(k2, j) in &[(0.3, 0.2), (1.0, 1.0), (5.0, 7.0), (0.01, 3.0)] {
            let k1 = 4.0;
            let chain = ResonatorChain::new(
                vec![Resonator::passive(0.0, k1), Resonator::passive(0.0, k2)],
                vec![j],
                k1 / 2.0,
            );
            let eps = susceptibility_at(&chain, 0.0, 0.0).unwrap();
            let t = (Complex64::new(1.0, 0.0) - eps).norm_sqr();
            let expected = cooperativity_transmission(k1, k2, j).unwrap();
            assert!((t - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_exact_and_fraction_agree() {
        let chain = ResonatorChain::new(
            vec![
                Resonator::passive(0.4, 3.0),
                Resonator::active(-0.2, 0.3),
                Resonator::passive(0.1, 2.0),
            ],
            vec![1.1, 0.7],
            1.2,
        );
        let pump = PumpDrive::new(0.25, 2.0).unwrap();
        let exact = steady_state_exact(&chain, 0.3, &pump).unwrap();
        let linear = steady_state_linear(&chain, 0.3, &pump).unwrap();
        let a1 = steady_state_continued_fraction(&chain, 0.3, &pump).unwrap();
        for k in 0..3 {
            assert!((exact.amplitudes[k] - linear.amplitudes[k]).norm() < 1e-12 * exact.amplitudes[k].norm());
        }
        assert!((exact.amplitudes[0] - a1).norm() < 1e-12 * a1.norm());
    }
}
