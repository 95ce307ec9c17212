//! Steady-state entanglement between two filtered output fields of a
//! three-mode optomechanical system.
//!
//! The numerical pipeline runs `model` (drift and scattering matrices) →
//! `spectra` (filtered-mode moments) → `entanglement` (covariance matrix and
//! logarithmic negativity). `formulas` holds the closed-form optima and
//! `optimize` locates the numerical optima they are checked against.

// NaN-rejecting `!(x > 0.0)` checks and index loops that mirror the algebra are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod config;
pub mod entanglement;
pub mod error;
pub mod figures;
pub mod formulas;
pub mod model;
pub mod optimize;
pub mod output;
pub mod quadrature;
pub mod spectra;

pub use entanglement::{
    covariance_from_moments, entanglement, log_negativity, CovarianceMatrix, EntanglementResult,
};
pub use error::{Error, Result};
pub use formulas::AnalyticInputs;
pub use model::{check_stability, drift_matrix, scattering, ScatteringMatrix, StabilityVerdict, SystemParams};
pub use spectra::{correlator_modulus, moment_integrand, moments, FilterSpec, MomentId, MomentSet};
