//! Matrix ridge approximation: M ~ A A^T + delta I, optionally under the
//! linear constraint A^T b = 0, with applications to fast approximate
//! inversion, constrained eigenvector extraction, spectral clustering, and
//! Gaussian process regression.

pub mod baselines;
pub mod cluster;
pub mod constrained;
pub mod data;
pub mod eigen;
pub mod error;
pub mod gpr;
pub mod inverse;
pub mod kernel;
pub mod matrix;
pub mod ridge;
pub mod testing;
pub mod transform;
pub mod wishart;

pub use error::{Error, Result};
pub use matrix::{ConstraintVector, SymMatrix};
pub use ridge::{fit_em, fit_sd, fit_sd_general, fit_twostep, EmOptions, FitReport, RidgeModel, Solver};
