//! Woodbury-based application of the approximate inverse and the two error
//! criteria used to score it.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::baselines::incomplete_cholesky;
use crate::error::{Error, Result};
use crate::matrix::SymMatrix;
use crate::ridge::{fit_sd, RidgeModel};

/// Scaled residuals of the approximate inverse: e_f = (1/sqrt(m))
/// ||I - M Omega^{-1}||_F and e_2 = ||I - M Omega^{-1}||_2.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct InverseErrors {
    pub e_f: f64,
    pub e_2: f64,
}

/// Applies (delta I + L L^T)^{-1} to X by the Woodbury identity:
/// delta^{-1} X - delta^{-1} L (delta I_q + L^T L)^{-1} L^T X.
/// Cost O(m q k + q^3); never forms an m x m inverse.
fn woodbury_apply_factor(l: &DMatrix<f64>, delta: f64, x: &DMatrix<f64>) -> DMatrix<f64> {
    let q = l.ncols();
    let small = DMatrix::from_diagonal_element(q, q, delta) + l.transpose() * l;
    let chol = small
        .cholesky()
        .expect("delta I + L^T L is PD for delta > 0 and finite L");
    let ltx = l.transpose() * x;
    (x - l * chol.solve(&ltx)) / delta
}

/// (delta I + A A^T)^{-1} X for a fitted model, via the Woodbury identity.
pub fn woodbury_apply(model: &RidgeModel, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if x.nrows() != model.dim() {
        return Err(Error::DimensionMismatch(format!(
            "X has {} rows, model dimension is {}",
            x.nrows(),
            model.dim()
        )));
    }
    Ok(woodbury_apply_factor(model.factor(), model.delta(), x))
}

const BLOCK: usize = 64;

/// Residual errors of a generic approximate inverse, given as the operator
/// X -> Omega^{-1} X. The residual R = I - M Omega^{-1} is never
/// materialized: e_f accumulates over 64-column blocks of the identity and
/// e_2 runs power iteration on R^T R matrix-free.
fn errors_for(m_mat: &SymMatrix, apply_inv: &dyn Fn(&DMatrix<f64>) -> DMatrix<f64>) -> InverseErrors {
    let m = m_mat.dim();
    let mat = m_mat.as_matrix();

    let mut ef2 = 0.0;
    let mut col = 0;
    while col < m {
        let width = BLOCK.min(m - col);
        let mut block = DMatrix::zeros(m, width);
        for j in 0..width {
            block[(col + j, j)] = 1.0;
        }
        let resid = &block - mat * apply_inv(&block);
        ef2 += resid.norm_squared();
        col += width;
    }
    let e_f = (ef2 / m as f64).sqrt();

    // power iteration for ||R||_2 with R x = x - M(Omega^{-1} x) and
    // R^T x = x - Omega^{-1}(M x)
    let apply_r = |x: &DVector<f64>| -> DVector<f64> {
        let xm = DMatrix::from_column_slice(m, 1, x.as_slice());
        let y = &xm - mat * apply_inv(&xm);
        DVector::from_column_slice(y.as_slice())
    };
    let apply_rt = |x: &DVector<f64>| -> DVector<f64> {
        let mx = mat * x;
        let mxm = DMatrix::from_column_slice(m, 1, mx.as_slice());
        x - DVector::from_column_slice(apply_inv(&mxm).as_slice())
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v = DVector::from_fn(m, |_, _| rng.gen::<f64>() - 0.5);
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..500 {
        let w = apply_rt(&apply_r(&v));
        let norm = w.norm();
        if norm == 0.0 {
            lambda = 0.0;
            break;
        }
        let next = w / norm;
        let change = (norm - lambda).abs();
        lambda = norm;
        v = next;
        if change <= 1e-8 * lambda.max(1.0) {
            break;
        }
    }
    InverseErrors {
        e_f,
        e_2: lambda.sqrt(),
    }
}

/// Errors of a ridge model's Woodbury inverse against a positive definite M.
pub fn inverse_errors(m_mat: &SymMatrix, model: &RidgeModel) -> Result<InverseErrors> {
    if model.dim() != m_mat.dim() {
        return Err(Error::DimensionMismatch("model dimension".into()));
    }
    if m_mat.as_matrix().clone().cholesky().is_none() {
        return Err(Error::InvalidInput("matrix is not positive definite".into()));
    }
    let (l, delta) = (model.factor().clone(), model.delta());
    Ok(errors_for(m_mat, &move |x| woodbury_apply_factor(&l, delta, x)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StructuredMethod {
    Ra,
    Icd,
}

/// Errors of two approximate inverses of the structured matrix
/// K = phi + alpha2 I: `ra` fits the ridge model on K itself; `icd` factors
/// phi ~ L L^T and inverts L L^T + alpha2 I by Woodbury.
pub fn structured_inverse_errors(
    phi: &SymMatrix,
    alpha2: f64,
    q: usize,
    method: StructuredMethod,
) -> Result<InverseErrors> {
    if !(alpha2 > 0.0) || !alpha2.is_finite() {
        return Err(Error::InvalidInput(format!("alpha2 must be positive, got {alpha2}")));
    }
    let m = phi.dim();
    let mut k_data = phi.as_matrix().clone();
    for i in 0..m {
        k_data[(i, i)] += alpha2;
    }
    let k = SymMatrix::new(k_data)?;
    match method {
        StructuredMethod::Ra => {
            let (model, _) = fit_sd(&k, q, &crate::matrix::ConstraintVector::none(m))?;
            inverse_errors(&k, &model)
        }
        StructuredMethod::Icd => {
            let factor = incomplete_cholesky(phi, q, 0.0)?;
            let l = factor.l;
            Ok(errors_for(&k, &move |x| woodbury_apply_factor(&l, alpha2, x)))
        }
    }
}
