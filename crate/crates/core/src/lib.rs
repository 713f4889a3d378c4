//! Ramsey interferometry of qubit ensembles under collective, spatio-temporally
//! correlated Gaussian dephasing noise.
//!
//! The crate is organised along the data flow of a calculation:
//!
//! * [`noise_models`] describes the bath through its spectrum `S(ω)`.
//! * [`control_filters`] evaluates the filter functions `F±(ω, t)` of a
//!   control protocol.
//! * [`dephasing`] combines both into the decay parameter `χ(t)` and the
//!   bath-induced twisting phase `Ψ(t)`.
//! * [`estimators`] turns `(φ, χ, Ψ)` into collective-spin moments and the
//!   frequency uncertainty `Δb`.
//! * [`runner`] assembles scenarios, scans and optimizes the detection time and
//!   fits scaling laws.

pub mod control_filters;
pub mod dephasing;
pub mod error;
pub mod estimators;
pub mod noise_models;
pub mod quadrature;
pub mod runner;
pub mod special;

pub use error::{Error, Result};
