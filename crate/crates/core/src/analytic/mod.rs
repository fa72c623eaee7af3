//! Closed-form steady states and the quantities derived from them:
//! susceptibility spectra, transparency conditions, dark-mode amplitudes,
//! dispersion slope, group delay and window width.
//!
//! Every routine here works in the frame rotating at the pump frequency and
//! treats the effective gain of the active resonator as a constant.

mod dispersion;
mod steady;
mod transparency;

pub use dispersion::{
    default_delay_step, fwhm_transparency_window, group_delay, imag_slope_at_resonance,
    spectrum_table, susceptibility_spectrum, FwhmReport, SpectrumPoint,
};
pub use steady::{
    cooperativity_transmission, steady_state_continued_fraction, steady_state_exact,
    steady_state_linear, susceptibility_at, transmission, SteadySolution,
};
pub use transparency::{
    dark_bright_basis, dark_state, transparency_condition_four, transparency_condition_general,
    DarkBrightBasis, TransparencyPoint,
};


use crate::model::ModelError;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("steady-state denominator vanishes: the linear response has a pole here")]
    SingularDenominator,
    #[error("outermost continued-fraction denominator vanishes: the linear response has a pole here")]
    SingularSubfraction,
    #[error("unsupported chain length {found} (supported: {supported})")]
    UnsupportedLength {
        found: usize,
        supported: &'static str,
    },
    #[error("resonance frequencies are not degenerate")]
    NonDegenerateFrequencies,
    #[error("equal rates with distinct resonance frequencies admit no finite transparency point")]
    EqualRates,
    #[error("rates must be positive")]
    NonPositiveRate,
    #[error("preconditions not met: {0}")]
    ConditionsNotMet(&'static str),
    #[error("coupling must be positive")]
    ZeroCoupling,
    #[error("transmission vanishes, its phase is undefined")]
    ZeroTransmission,
    #[error("Re(susceptibility) has no local minimum at zero detuning")]
    NoDip,
}
