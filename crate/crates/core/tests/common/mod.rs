#![allow(dead_code)]

use cavity_trio::model::{PumpDrive, Resonator, ResonatorChain};
use cavity_trio::stability::max_real_part;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Log-uniform draw from [lo, hi].
pub fn log_uniform(rng: &mut StdRng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// Passive–active–passive chain with arbitrary frequencies and rates.
pub fn random_trio(rng: &mut StdRng) -> (ResonatorChain, f64) {
    let kappa1 = log_uniform(rng, 0.5, 20.0);
    let kappa_ex = kappa1 * rng.random_range(0.1..1.0);
    let gain = log_uniform(rng, 0.01, 5.0);
    let kappa3 = log_uniform(rng, 0.1, 20.0);
    let mut omega = || rng.random_range(-5.0..5.0);
    let (w1, w2, w3) = (omega(), omega(), omega());
    let j1 = log_uniform(rng, 0.1, 20.0);
    let j2 = log_uniform(rng, 0.1, 20.0);
    let chain = ResonatorChain::new(
        vec![
            Resonator::passive(w1, kappa1).with_intrinsic_loss(kappa1 - kappa_ex),
            Resonator::active(w2, gain),
            Resonator::passive(w3, kappa3),
        ],
        vec![j1, j2],
        kappa_ex,
    );
    (chain, gain)
}

/// Random trio whose slowest mode decays at least at `margin` MHz.
pub fn random_stable_trio(rng: &mut StdRng, margin: f64) -> (ResonatorChain, f64) {
    loop {
        let (chain, gain) = random_trio(rng);
        if max_real_part(&chain, gain).unwrap() < -margin {
            return (chain, gain);
        }
    }
}

/// Resonant trio with every frequency at `omega0`.
pub fn random_resonant_trio(rng: &mut StdRng, omega0: f64) -> (ResonatorChain, f64) {
    let (mut chain, gain) = random_trio(rng);
    for r in &mut chain.resonators {
        r.omega = omega0;
    }
    (chain, gain)
}

pub fn random_pump(rng: &mut StdRng, chain: &ResonatorChain) -> PumpDrive {
    let omega_p = chain.resonators[0].omega + rng.random_range(-5.0..5.0);
    PumpDrive::new(omega_p, log_uniform(rng, 1e-3, 1e4)).unwrap()
}
