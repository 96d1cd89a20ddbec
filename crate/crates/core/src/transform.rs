//! Centering and projection transforms that bake the linear constraint into
//! a symmetric matrix.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::{ConstraintVector, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransformMode {
    /// S = H_b M H_b^T with H_b = I - (1 b^T)/(1^T b).
    Center,
    /// T = P M P with P = I - b b^T.
    Project,
}

/// Applies the centering or projection transform. Both reduce to the
/// identity when b = 0, and both annihilate the b direction: the output O
/// satisfies O b = 0 and b^T O = 0.
pub fn apply_transform(
    m: &SymMatrix,
    b: &ConstraintVector,
    mode: TransformMode,
) -> Result<SymMatrix> {
    if b.dim() != m.dim() {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{} but constraint has length {}",
            m.dim(),
            m.dim(),
            b.dim()
        )));
    }
    if b.is_zero() {
        return Ok(m.clone());
    }
    let n = m.dim();
    let bv = b.as_vector();
    let transformed = match mode {
        TransformMode::Center => {
            let ones_dot_b: f64 = bv.iter().sum();
            if ones_dot_b.abs() < 1e-12 {
                return Err(Error::InvalidInput(
                    "centering is undefined: 1^T b = 0".into(),
                ));
            }
            let hb = DMatrix::identity(n, n)
                - DMatrix::from_fn(n, n, |_, j| bv[j] / ones_dot_b);
            &hb * m.as_matrix() * hb.transpose()
        }
        TransformMode::Project => {
            let p = DMatrix::identity(n, n) - bv * bv.transpose();
            &p * m.as_matrix() * &p
        }
    };
    // enforce exact symmetry against roundoff
    let (sym, _) = SymMatrix::symmetrize(transformed)?;
    Ok(sym)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testing::random_psd;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_unit(m: usize, seed: u64) -> ConstraintVector {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let v = DVector::from_fn(m, |_, _| rng.gen::<f64>() - 0.3);
        ConstraintVector::new(v).unwrap()
    }

    #[test]
    fn zero_constraint_is_identity() {
        let m = random_psd(4, 6, 1);
        let b = ConstraintVector::none(4);
        for mode in [TransformMode::Center, TransformMode::Project] {
            assert_eq!(&apply_transform(&m, &b, mode).unwrap(), &m);
        }
    }

    #[test]
    fn uniform_constraint_center_equals_project() {
        let m = random_psd(5, 8, 2);
        let b = ConstraintVector::uniform(5);
        let s = apply_transform(&m, &b, TransformMode::Center).unwrap();
        let t = apply_transform(&m, &b, TransformMode::Project).unwrap();
        assert!((s.as_matrix() - t.as_matrix()).norm() < 1e-12 * m.frobenius_norm());
    }

    #[test]
    fn output_annihilates_b() {
        let m = random_psd(6, 9, 3);
        let b = random_unit(6, 7);
        for mode in [TransformMode::Center, TransformMode::Project] {
            let out = apply_transform(&m, &b, mode).unwrap();
            let v = out.as_matrix() * b.as_vector();
            assert!(v.norm() < 1e-12 * m.frobenius_norm(), "mode {mode:?}");
        }
    }

    #[test]
    fn idempotent() {
        let m = random_psd(6, 9, 4);
        let b = random_unit(6, 11);
        for mode in [TransformMode::Center, TransformMode::Project] {
            let once = apply_transform(&m, &b, mode).unwrap();
            let twice = apply_transform(&once, &b, mode).unwrap();
            assert!((once.as_matrix() - twice.as_matrix()).norm() < 1e-12 * m.frobenius_norm());
        }
    }

    #[test]
    fn projection_introduces_zero_eigenvalue() {
        let m = random_psd(6, 9, 5);
        let b = random_unit(6, 13);
        let t = apply_transform(&m, &b, TransformMode::Project).unwrap();
        let ep = crate::eigen::sym_eig(&t).unwrap();
        let min_abs = ep.values.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
        assert!(min_abs <= 1e-10 * t.frobenius_norm());
    }

    #[test]
    fn centering_rejects_orthogonal_to_ones() {
        let m = random_psd(2, 4, 6);
        let b = ConstraintVector::new(DVector::from_row_slice(&[1.0, -1.0])).unwrap();
        assert!(apply_transform(&m, &b, TransformMode::Center).is_err());
        assert!(apply_transform(&m, &b, TransformMode::Project).is_ok());
    }
}
