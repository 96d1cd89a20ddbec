//! Symmetric eigendecomposition with a deterministic ordering and sign
//! convention, backed by nalgebra's tridiagonalization + QR routine.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;

/// Eigenvalues in descending order with column-orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenPair {
    /// Reconstructs V diag(values) V^T.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let m = self.values.len();
        let mut scaled = self.vectors.clone();
        for j in 0..m {
            scaled.column_mut(j).scale_mut(self.values[j]);
        }
        scaled * self.vectors.transpose()
    }

    /// The orthogonal projector onto the span of the first q eigenvectors.
    pub fn projector(&self, q: usize) -> DMatrix<f64> {
        let uq = self.vectors.columns(0, q);
        &uq * uq.transpose()
    }
}

/// Full eigendecomposition of a symmetric matrix. Values come out in
/// descending order; each eigenvector's largest-magnitude entry is forced
/// positive so that repeated runs are bitwise identical.
pub fn sym_eig(m: &SymMatrix) -> Result<EigenPair> {
    let data = m.as_matrix();
    if !data.iter().all(|x| x.is_finite()) {
        return Err(Error::InvalidInput("non-finite entries".into()));
    }
    let se = data.clone().symmetric_eigen();

    let n = m.dim();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[b].partial_cmp(&se.eigenvalues[a]).unwrap());

    let mut values = Vec::with_capacity(n);
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        values.push(se.eigenvalues[src]);
        let mut col = se.eigenvectors.column(src).clone_owned();
        // sign convention: largest-magnitude entry positive, first index on ties
        let mut pivot = 0;
        for i in 1..n {
            if col[i].abs() > col[pivot].abs() {
                pivot = i;
            }
        }
        if col[pivot] < 0.0 {
            col.neg_mut();
        }
        vectors.set_column(dst, &col);
    }
    Ok(EigenPair { values, vectors })
}
