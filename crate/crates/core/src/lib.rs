//! Excitation transport through short chains of coupled optical cavities,
//! each holding a two-level atom, with a sink at the far end and optional
//! dephasing.
//!
//! Layers, bottom up:
//!
//! - [`basis`]: mode layouts and the quanta-projected occupation basis
//! - [`operator`]: ladder/number operators and matrix algebra on that basis
//! - [`model`]: chain configuration, Hamiltonian and jump operators
//! - [`evolution`]: discrete time stepping and observables
//! - [`oracle`]: exact Liouvillian propagation for small systems
//! - [`experiments`]: time-to-target, optimal rates and parameter sweeps
//! - [`config`] / [`output`]: text configuration and CSV/manifest output

pub mod basis;
pub mod config;
pub mod error;
pub mod evolution;
pub mod experiments;
pub mod model;
pub mod operator;
pub mod oracle;
pub mod output;
pub mod state;

pub use error::{Error, Result};
