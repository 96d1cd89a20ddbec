//! RBF kernel matrix construction.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;

/// RBF kernel configuration: K[i][j] = exp(-||x_i - x_j||^2 / beta).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct KernelConfig {
    pub beta: f64,
}

impl KernelConfig {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidInput(format!("beta must be positive, got {beta}")));
        }
        Ok(Self { beta })
    }
}

/// Kernel matrix of a dataset (rows are points).
pub fn rbf_kernel(x: &DMatrix<f64>, cfg: KernelConfig) -> Result<SymMatrix> {
    if x.nrows() == 0 {
        return Err(Error::InvalidInput("empty dataset".into()));
    }
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidInput("dataset has non-finite entries".into()));
    }
    let n = x.nrows();
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, i)] = 1.0;
        for j in 0..i {
            let d2 = (x.row(i) - x.row(j)).norm_squared();
            let v = (-d2 / cfg.beta).exp();
            k[(i, j)] = v;
            k[(j, i)] = v;
        }
    }
    SymMatrix::new(k)
}

/// Cross-kernel between two datasets: out[i][j] = k(a_i, b_j).
pub fn rbf_cross_kernel(a: &DMatrix<f64>, b: &DMatrix<f64>, cfg: KernelConfig) -> Result<DMatrix<f64>> {
    if a.ncols() != b.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "feature dims differ: {} vs {}",
            a.ncols(),
            b.ncols()
        )));
    }
    Ok(DMatrix::from_fn(a.nrows(), b.nrows(), |i, j| {
        (-(a.row(i) - b.row(j)).norm_squared() / cfg.beta).exp()
    }))
}
