//! Moment-preserving spectral approximation and Galerkin solvers for
//! one-dimensional Fokker-Planck type equations.

pub mod basis;
pub mod dirichlet_basis;
pub mod error;
pub mod experiments;
pub mod moments;
pub mod operators;
pub mod projection;
pub mod quadrature;
pub mod report;
pub mod timestepper;

pub use error::{Error, Result};
