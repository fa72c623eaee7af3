//! Time-domain integration of the mean-field equations in the frame rotating
//! at the pump frequency, with constant or saturating gain.
//!
//! The saturating gain uses the coherent-state closure n₂ = |a₂|², so the
//! effective gain at time t is κ₂,₀/(1 + |a₂(t)|²/I_S) − γ₂.

use std::collections::VecDeque;
use std::ops::ControlFlow;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::SteadySolution;
use crate::model::{build_dynamical_matrix, check_chain, Frame, GainModel, ModelError, PumpDrive, ResonatorChain};
use crate::ode::{integrate, OdeError, OdeOptions};
use crate::stability::eigenvalues;

/// Amplitudes beyond this multiple of the drive scale count as divergence.
pub const DIVERGENCE_RATIO: f64 = 1e12;
/// Steady windows span this many of the slowest decay times.
pub const STEADY_WINDOW_DECAYS: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("trajectory diverged at t = {t} us (|a| > {limit:e})")]
    Diverged { t: f64, limit: f64 },
    #[error("integrator could not meet the tolerance: {0}")]
    ToleranceNotMet(OdeError),
    #[error("trajectory never reached a steady state")]
    NotStabilized,
    #[error("invalid controls: {0}")]
    InvalidControls(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolveControls {
    pub rel_tol: f64,
    /// Absolute tolerance [√MHz]; defaults to 1e-12 of the drive √(2κ_ex)εp.
    pub abs_tol: Option<f64>,
    pub steady_tol: f64,
    /// Steady window [μs]; defaults to 20 slowest decay times.
    pub steady_window: Option<f64>,
    /// Initial amplitudes; vacuum when absent.
    pub initial: Option<Vec<Complex64>>,
    pub max_steps: usize,
    /// End the run as soon as the steady criterion holds.
    pub stop_when_steady: bool,
}

impl Default for EvolveControls {
    fn default() -> Self {
        EvolveControls {
            rel_tol: 1e-9,
            abs_tol: None,
            steady_tol: 1e-8,
            steady_window: None,
            initial: None,
            max_steps: 20_000_000,
            stop_when_steady: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub amplitudes: Vec<Vec<Complex64>>,
    /// Effective gain of the active resonator at each sample [MHz].
    pub gain_trace: Vec<f64>,
    pub stabilized_at: Option<f64>,
    /// Snapshot of the last sample.
    pub final_state: SteadySolution,
    /// √(2κ_ex)·εp, the scale of ε₀ in the steady criterion.
    pub drive_scale: f64,
    /// Absolute integration tolerance used for the run [√MHz].
    pub abs_tol: f64,
    /// Scale of gain fluctuations in the steady criterion (κ₂,₀ or |κ₂|).
    pub gain_scale: f64,
    pub steady_window: f64,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_gain(&self) -> f64 {
        *self.gain_trace.last().expect("trajectory has samples")
    }

    /// Indices of at most `max_rows` samples spread evenly over the run,
    /// always including the first and last.
    pub fn downsample_indices(&self, max_rows: usize) -> Vec<usize> {
        let n = self.len();
        if n <= max_rows || max_rows < 2 {
            return (0..n).collect();
        }
        let mut idx: Vec<usize> = (0..max_rows)
            .map(|i| ((i as f64) * (n - 1) as f64 / (max_rows - 1) as f64).round() as usize)
            .collect();
        idx.dedup();
        idx
    }
}

/// ε₀ of the steady criterion: 1e-9 of the drive, but never below the
/// amplitude jitter an adaptive integrator leaves at its absolute tolerance.
fn steady_floor(drive: f64, abs_tol: f64, steady_tol: f64) -> f64 {
    (1e-9 * drive).max(100.0 * abs_tol / steady_tol)
}

fn gain_scale(model: &GainModel) -> f64 {
    match *model {
        GainModel::Constant { kappa2 } => kappa2.abs(),
        GainModel::Saturating { kappa20, .. } => kappa20,
    }
}

/// Default steady window: 20/min |Re λ| over the eigenvalues of the matrix
/// at effective gain `gain`, ignoring those that are zero to within 1e-12
/// of the chain's rate scale.
pub fn default_steady_window(chain: &ResonatorChain, gain: f64) -> f64 {
    let scale = chain.rate_scale().max(gain.abs());
    let fallback = STEADY_WINDOW_DECAYS / scale.max(f64::MIN_POSITIVE);
    let Ok(m) = build_dynamical_matrix(chain, gain, chain.resonators[0].omega, Frame::Rotating) else {
        return fallback;
    };
    let Ok(values) = eigenvalues(&m) else {
        return fallback;
    };
    values
        .iter()
        .map(|l| l.re.abs())
        .filter(|r| *r > 1e-12 * scale)
        .fold(None, |acc: Option<f64>, r| Some(acc.map_or(r, |a| a.min(r))))
        .map_or(fallback, |slowest| STEADY_WINDOW_DECAYS / slowest)
}

/// Integrates ȧ = M(g(t))·a + v_in from t = 0 to `t_end` [μs].
pub fn evolve(
    chain: &ResonatorChain,
    gain_model: &GainModel,
    pump: &PumpDrive,
    t_end: f64,
    controls: &EvolveControls,
) -> Result<Trajectory, DynamicsError> {
    check_chain(chain)?;
    gain_model.validate()?;
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(DynamicsError::InvalidControls("t_end must be positive"));
    }
    if !(controls.rel_tol > 0.0) || !(controls.steady_tol > 0.0) {
        return Err(DynamicsError::InvalidControls("tolerances must be positive"));
    }
    let n = chain.len();
    let zero = Complex64::new(0.0, 0.0);
    let initial = match &controls.initial {
        Some(v) if v.len() != n => {
            return Err(DynamicsError::InvalidControls("initial state has the wrong length"))
        }
        Some(v) if v.iter().any(|a| !a.is_finite()) => {
            return Err(DynamicsError::InvalidControls("initial state must be finite"))
        }
        Some(v) => v.clone(),
        None => vec![zero; n],
    };

    let drive = chain.drive(pump);
    let amplitude_scale = initial.iter().map(|a| a.norm()).fold(drive, f64::max);
    let abs_tol = controls
        .abs_tol
        .unwrap_or(1e-12 * drive)
        .max(1e-30);
    let limit = DIVERGENCE_RATIO * amplitude_scale;
    let active = chain.active_index();

    let diag: Vec<Complex64> = (0..n)
        .map(|k| {
            let passive_rate = if chain.resonators[k].is_active() { 0.0 } else { -chain.resonators[k].rate };
            Complex64::new(passive_rate, pump.detuning(chain, k))
        })
        .collect();
    let couplings: Vec<Complex64> = chain.couplings.iter().map(|&j| Complex64::new(0.0, j)).collect();
    let gain_at = |state: &[Complex64]| match active {
        Some(a) => gain_model.effective_gain(state[a].norm_sqr()),
        None => 0.0,
    };

    let rhs = |_t: f64, a: &[Complex64], da: &mut [Complex64]| {
        let g = gain_at(a);
        for k in 0..n {
            let mut d = diag[k] * a[k];
            if Some(k) == active {
                d += g * a[k];
            }
            if k > 0 {
                d += couplings[k - 1] * a[k - 1];
            }
            if k + 1 < n {
                d += couplings[k] * a[k + 1];
            }
            da[k] = d;
        }
        da[0] += drive;
    };

    let window = match controls.steady_window {
        Some(w) if w > 0.0 && w.is_finite() => w,
        Some(_) => return Err(DynamicsError::InvalidControls("steady window must be positive")),
        None => default_steady_window(chain, gain_at(&initial)),
    };
    let eps0 = steady_floor(drive, abs_tol, controls.steady_tol);
    let track_window = controls.steady_window.is_none() && matches!(gain_model, GainModel::Saturating { .. });
    let g_scale = gain_scale(gain_model);

    let mut times = Vec::new();
    let mut amplitudes = Vec::new();
    let mut gain_trace = Vec::new();
    let mut diverged_at = None;
    let mut detector = SteadyDetector::new(n, window, controls.steady_tol, eps0, g_scale);
    let mut stabilized_at = None;

    let opts = OdeOptions {
        rel_tol: controls.rel_tol,
        abs_tol,
        max_steps: controls.max_steps,
        max_step: f64::INFINITY,
    };
    integrate(rhs, 0.0, &initial, t_end, &opts, |t, a| {
        if a.iter().any(|v| v.norm() > limit || !v.is_finite()) {
            diverged_at = Some(t);
            return ControlFlow::Break(());
        }
        let g = gain_at(a);
        if track_window && times.len() % 256 == 0 {
            detector.window = default_steady_window(chain, g);
        }
        times.push(t);
        amplitudes.push(a.to_vec());
        gain_trace.push(g);
        if stabilized_at.is_none() {
            stabilized_at = detector.push(t, a, g);
            if stabilized_at.is_some() && controls.stop_when_steady {
                return ControlFlow::Break(());
            }
        }
        ControlFlow::Continue(())
    })
    .map_err(|e| match e {
        OdeError::NonFinite { t } => DynamicsError::Diverged { t, limit },
        other => DynamicsError::ToleranceNotMet(other),
    })?;
    if let Some(t) = diverged_at {
        return Err(DynamicsError::Diverged { t, limit });
    }

    let last = amplitudes.last().expect("initial sample recorded").clone();
    let a1_per_drive = if drive > 0.0 { last[0] / drive } else { zero };
    let final_state = SteadySolution::new(chain, pump, last, a1_per_drive);
    Ok(Trajectory {
        times,
        amplitudes,
        gain_trace,
        stabilized_at,
        final_state,
        drive_scale: drive,
        abs_tol,
        gain_scale: g_scale,
        steady_window: detector.window,
    })
}

/// Sliding-window extremum tracker over a stream of samples.
struct MonotoneQueue {
    entries: VecDeque<(usize, f64)>,
    keep_max: bool,
}

impl MonotoneQueue {
    fn new(keep_max: bool) -> Self {
        MonotoneQueue {
            entries: VecDeque::new(),
            keep_max,
        }
    }

    fn push(&mut self, index: usize, value: f64) {
        while let Some(&(_, back)) = self.entries.back() {
            let dominated = if self.keep_max { back <= value } else { back >= value };
            if !dominated {
                break;
            }
            self.entries.pop_back();
        }
        self.entries.push_back((index, value));
    }

    fn expire(&mut self, first_index: usize) {
        while matches!(self.entries.front(), Some(&(i, _)) if i < first_index) {
            self.entries.pop_front();
        }
    }

    fn value(&self) -> f64 {
        self.entries.front().map_or(f64::NAN, |&(_, v)| v)
    }
}

/// Streaming form of the steady criterion. For each window the spread of
/// every amplitude is bounded by the diagonal of its bounding box in the
/// complex plane and compared against the smallest modulus in the window,
/// which is a sufficient condition for the pairwise criterion.
struct SteadyDetector {
    window: f64,
    tol: f64,
    eps0: f64,
    gain_scale: f64,
    times: Vec<f64>,
    // per amplitude: max re, min re, max im, min im, min |a|
    queues: Vec<[MonotoneQueue; 5]>,
    gain_max: MonotoneQueue,
    gain_min: MonotoneQueue,
    start: usize,
}

impl SteadyDetector {
    fn new(n: usize, window: f64, tol: f64, eps0: f64, gain_scale: f64) -> Self {
        SteadyDetector {
            window,
            tol,
            eps0,
            gain_scale,
            times: Vec::new(),
            queues: (0..n)
                .map(|_| {
                    [
                        MonotoneQueue::new(true),
                        MonotoneQueue::new(false),
                        MonotoneQueue::new(true),
                        MonotoneQueue::new(false),
                        MonotoneQueue::new(false),
                    ]
                })
                .collect(),
            gain_max: MonotoneQueue::new(true),
            gain_min: MonotoneQueue::new(false),
            start: 0,
        }
    }

    /// Adds a sample; returns the window start once the window ending at
    /// this sample satisfies the criterion.
    fn push(&mut self, t: f64, a: &[Complex64], g: f64) -> Option<f64> {
        let index = self.times.len();
        self.times.push(t);
        for (q, v) in self.queues.iter_mut().zip(a) {
            q[0].push(index, v.re);
            q[1].push(index, v.re);
            q[2].push(index, v.im);
            q[3].push(index, v.im);
            q[4].push(index, v.norm());
        }
        self.gain_max.push(index, g);
        self.gain_min.push(index, g);
        // each start is judged once, as soon as its window is covered
        while t - self.times[self.start] >= self.window {
            let first = self.start;
            for q in self.queues.iter_mut() {
                for m in q.iter_mut() {
                    m.expire(first);
                }
            }
            self.gain_max.expire(first);
            self.gain_min.expire(first);
            let steady = self.queues.iter().all(|q| {
                let spread = (q[0].value() - q[1].value()).hypot(q[2].value() - q[3].value());
                spread == 0.0 || spread < self.tol * (q[4].value() + self.eps0)
            });
            let g_spread = self.gain_max.value() - self.gain_min.value();
            if steady && (g_spread == 0.0 || g_spread < self.tol * self.gain_scale) {
                return Some(self.times[first]);
            }
            self.start += 1;
        }
        None
    }
}

/// Earliest sample time t* from which the trajectory stays within
/// `steady_tol` (relative) over `window` μs.
pub fn detect_steady(trajectory: &Trajectory, window: f64, steady_tol: f64) -> Option<f64> {
    if trajectory.is_empty() || !(window >= 0.0) {
        return None;
    }
    let n = trajectory.amplitudes[0].len();
    let mut detector = SteadyDetector::new(
        n,
        window,
        steady_tol,
        steady_floor(trajectory.drive_scale, trajectory.abs_tol, steady_tol),
        trajectory.gain_scale,
    );
    trajectory
        .times
        .iter()
        .zip(&trajectory.amplitudes)
        .zip(&trajectory.gain_trace)
        .find_map(|((&t, a), &g)| detector.push(t, a, g))
}

/// Photon numbers |a_k|² at the stabilization time.
pub fn final_photon_numbers(trajectory: &Trajectory) -> Result<Vec<f64>, DynamicsError> {
    let t_star = trajectory.stabilized_at.ok_or(DynamicsError::NotStabilized)?;
    let index = trajectory
        .times
        .iter()
        .position(|&t| t >= t_star)
        .ok_or(DynamicsError::NotStabilized)?;
    Ok(trajectory.amplitudes[index].iter().map(|a| a.norm_sqr()).collect())
}
