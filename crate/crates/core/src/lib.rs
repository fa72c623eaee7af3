//! Mean-field model of a linear chain of coupled optical resonators with one
//! gain element: closed-form steady states and transparency conditions,
//! time-domain integration with saturating gain, eigenvalue stability
//! analysis, coupling search and noise estimates.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod model;
mod search;
pub mod dynamics;
pub mod ode;
pub mod stability;
pub mod tuning;
pub mod noise;
pub mod config;
pub mod presets;
pub mod output;
