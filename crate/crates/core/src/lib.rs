//! Numerical laboratory for the (1+3)-dimensional Dirac-Klein-Gordon system.
//!
//! The crate is organised bottom-up:
//!
//! - [`clifford`]: gamma matrices, projections and exact matrix identities.
//! - [`lattice`]: cubic grids, fourth-order stencils, deterministic quadrature.
//! - [`vector_fields`]: Lorentz vector fields, null forms and operator residuals.
//! - [`dkg_solver`]: RK4 method-of-lines evolution and spectral free flows.
//! - [`functionals`]: ghost, standard, conformal and weighted energies.
//! - [`structure_checks`]: nonlinear identities along computed solutions.
//! - [`analysis`]: decay fits, energy monitoring and scattering diagnostics.

pub mod analysis;
pub mod clifford;
pub mod commands;
pub mod config;
pub mod dkg_solver;
pub mod error;
pub mod functionals;
pub mod lattice;
pub mod report;
pub mod snapshot;
pub mod structure_checks;
pub mod vector_fields;

pub use error::{Error, Result};
