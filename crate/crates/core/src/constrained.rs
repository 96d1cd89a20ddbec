//! Linearly constrained eigenvector extraction: an orthonormal basis X of
//! the top-q subspace with X^T b = 0, obtained from the ridge factor.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::eigen::sym_eig;
use crate::error::{Error, Result};
use crate::matrix::{ConstraintVector, SymMatrix};
use crate::ridge::{fit_em, fit_sd, EmOptions};
use crate::transform::{apply_transform, TransformMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubspaceMethod {
    Sd,
    Em,
}

/// Column-orthonormal basis of the constrained principal subspace, with its
/// Rayleigh quotient tr(X^T M X). A near-degenerate gap at q does not fail;
/// it attaches a warning instead, since the subspace is then only defined up
/// to rotation across the gap.
#[derive(Debug, Clone)]
pub struct ConstrainedBasis {
    pub x: DMatrix<f64>,
    pub rayleigh: f64,
    pub warning: Option<String>,
}

impl ConstrainedBasis {
    pub fn to_json(&self) -> String {
        let ser = BasisJson {
            m: self.x.nrows(),
            q: self.x.ncols(),
            x: self.x.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()).collect(),
            rayleigh: self.rayleigh,
        };
        serde_json::to_string_pretty(&ser).expect("basis serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct BasisJson {
    m: usize,
    q: usize,
    #[serde(rename = "X")]
    x: Vec<f64>,
    rayleigh: f64,
}

/// A (A^T A)^{-1/2}: the closest column-orthonormal matrix with the same
/// column span, via the symmetric inverse square root of the Gram matrix.
pub fn orthonormalize_factor(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let q = a.ncols();
    let gram = a.transpose() * a;
    let gram_sym = SymMatrix::symmetrize(gram)?.0;
    let ep = sym_eig(&gram_sym)?;
    if *ep.values.last().unwrap() <= 1e-12 * ep.values[0] {
        return Err(Error::InvalidInput("factor is rank deficient".into()));
    }
    let mut inv_half = ep.vectors.clone();
    for j in 0..q {
        inv_half.column_mut(j).scale_mut(1.0 / ep.values[j].sqrt());
    }
    Ok(a * (&inv_half * ep.vectors.transpose()))
}

/// Solves max tr(X^T M X) over X^T X = I_q, X^T b = 0 by projecting out b,
/// fitting the ridge model on T = P M P, and orthonormalizing its factor.
pub fn top_subspace(
    m_mat: &SymMatrix,
    q: usize,
    b: &ConstraintVector,
    method: SubspaceMethod,
    opts: &EmOptions,
) -> Result<ConstrainedBasis> {
    let t = apply_transform(m_mat, b, TransformMode::Project)?;
    let factor = match method {
        SubspaceMethod::Sd => fit_sd(&t, q, b)?.0,
        SubspaceMethod::Em => fit_em(&t, q, b, opts)?.model,
    };
    let x = orthonormalize_factor(factor.factor())?;
    let rayleigh = (x.transpose() * m_mat.as_matrix() * &x).trace();
    let ep = sym_eig(&t)?;
    let warning = if q < t.dim() && (ep.values[q - 1] - ep.values[q]).abs() < 1e-8 * ep.values[0].abs().max(1e-300) {
        Some(format!(
            "subspace ill-defined: relative gap at q = {q} is below 1e-8; basis is stable only up to rotation"
        ))
    } else {
        None
    };
    Ok(ConstrainedBasis { x, rayleigh, warning })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::{random_psd, random_unit_constraint, toy_matrix};

    fn projector_distance(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
        (a * a.transpose() - b * b.transpose()).norm()
    }

    #[test]
    fn orthonormalize_identity_on_orthonormal_input() {
        let m = random_psd(6, 9, 1);
        let ep = sym_eig(&m).unwrap();
        let u = ep.vectors.columns(0, 3).clone_owned();
        let out = orthonormalize_factor(&u).unwrap();
        assert!((out - u).norm() < 1e-12);
    }

    #[test]
    fn orthonormalize_preserves_span() {
        let m = random_psd(7, 10, 2);
        let ep = sym_eig(&m).unwrap();
        let u = ep.vectors.columns(0, 2).clone_owned();
        // A = U C for a PD C keeps the span
        let c = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let a = &u * c;
        let out = orthonormalize_factor(&a).unwrap();
        let gram = out.transpose() * &out;
        assert!((gram - DMatrix::identity(2, 2)).norm() < 1e-10);
        assert!(projector_distance(&out, &u) < 1e-10);
    }

    #[test]
    fn orthonormalize_rejects_rank_deficiency() {
        let mut a = DMatrix::zeros(4, 2);
        a[(0, 0)] = 1.0;
        a[(0, 1)] = 1.0;
        assert!(orthonormalize_factor(&a).is_err());
    }

    #[test]
    fn diagonal_case_spans_leading_axes() {
        let m = SymMatrix::from_diagonal(&[5.0, 4.0, 3.0, 2.0, 1.0]);
        let basis = top_subspace(&m, 2, &ConstraintVector::none(5), SubspaceMethod::Sd, &EmOptions::default()).unwrap();
        let mut e12 = DMatrix::zeros(5, 2);
        e12[(0, 0)] = 1.0;
        e12[(1, 1)] = 1.0;
        assert!(projector_distance(&basis.x, &e12) < 1e-10);
        assert!((basis.rayleigh - 9.0).abs() < 1e-10);
    }

    #[test]
    fn em_matches_top_eigenspace_on_toy() {
        let m = toy_matrix();
        let basis = top_subspace(&m, 3, &ConstraintVector::none(10), SubspaceMethod::Em, &EmOptions {
            max_iters: 5000,
            tol: 1e-12,
            ..EmOptions::default()
        })
        .unwrap();
        let ep = sym_eig(&m).unwrap();
        let u3 = ep.vectors.columns(0, 3).clone_owned();
        assert!(projector_distance(&basis.x, &u3) <= 1e-6);
        // X = U3 V with V orthogonal
        let v = u3.transpose() * &basis.x;
        assert!((v.transpose() * &v - DMatrix::identity(3, 3)).norm() < 1e-6);
    }

    #[test]
    fn constraints_hold_and_match_brute_force() {
        for seed in 0..10u64 {
            let m = random_psd(15, 22, seed);
            let b = random_unit_constraint(15, seed + 50);
            let basis = top_subspace(&m, 4, &b, SubspaceMethod::Sd, &EmOptions::default()).unwrap();
            let gram = basis.x.transpose() * &basis.x;
            assert!((gram - DMatrix::identity(4, 4)).norm() <= 1e-8);
            assert!((basis.x.transpose() * b.as_vector()).norm() <= 1e-8);
            // brute force: top-4 eigenvectors of T
            let t = apply_transform(&m, &b, TransformMode::Project).unwrap();
            let ep = sym_eig(&t).unwrap();
            let u4 = ep.vectors.columns(0, 4).clone_owned();
            assert!(projector_distance(&basis.x, &u4) <= 1e-6);
            let brute: f64 = ep.values[..4].iter().sum();
            assert!((basis.rayleigh - brute).abs() <= 1e-8 * brute.abs());
        }
    }

    #[test]
    fn rayleigh_dominates_random_feasible_bases() {
        let m = random_psd(10, 16, 33);
        let b = random_unit_constraint(10, 34);
        let basis = top_subspace(&m, 3, &b, SubspaceMethod::Sd, &EmOptions::default()).unwrap();
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(35);
        for _ in 0..100 {
            let mut y = DMatrix::from_fn(10, 3, |_, _| rng.gen::<f64>() - 0.5);
            let bv = b.as_vector();
            let coeffs = bv.transpose() * &y;
            y -= bv * coeffs;
            let y = orthonormalize_factor(&y).unwrap();
            let val = (y.transpose() * m.as_matrix() * &y).trace();
            assert!(basis.rayleigh >= val - 1e-6 * basis.rayleigh.abs());
        }
    }

    #[test]
    fn warns_on_degenerate_gap() {
        let m = SymMatrix::from_diagonal(&[3.0, 2.0, 2.0, 1.0]);
        let basis = top_subspace(&m, 2, &ConstraintVector::none(4), SubspaceMethod::Sd, &EmOptions::default()).unwrap();
        assert!(basis.warning.is_some());
    }
}
