//! Synthetic PSD matrix sampling from a Wishart distribution.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::SymMatrix;

/// Draws M = F F^T where F is m x r with columns f_j ~ N(0, omega/r), so
/// E[M] = omega. Deterministic for a fixed seed. When r < m the draw is PSD
/// but singular; callers that need positive definiteness should check r.
pub fn sample_wishart(m: usize, r: usize, omega: &SymMatrix, seed: u64) -> Result<SymMatrix> {
    if omega.dim() != m {
        return Err(Error::DimensionMismatch(format!(
            "omega is {}x{}, expected {m}x{m}",
            omega.dim(),
            omega.dim()
        )));
    }
    let scaled = omega.as_matrix() / r as f64;
    let chol = scaled
        .cholesky()
        .ok_or_else(|| Error::InvalidInput("omega is not positive definite".into()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = DMatrix::from_fn(m, r, |_, _| StandardNormal.sample(&mut rng));
    let f = chol.l() * g;
    let (out, _) = SymMatrix::symmetrize(&f * f.transpose())?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_concentrates_at_omega() {
        // law of large numbers over 100 seeds
        let omega = SymMatrix::identity(2);
        let mut mean = [0.0; 2];
        for seed in 0..100 {
            let w = sample_wishart(2, 10_000, &omega, seed).unwrap();
            mean[0] += w.as_matrix()[(0, 0)] / 100.0;
            mean[1] += w.as_matrix()[(1, 1)] / 100.0;
        }
        assert!((mean[0] - 1.0).abs() < 0.1);
        assert!((mean[1] - 1.0).abs() < 0.1);
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let omega = SymMatrix::identity(3);
        let a = sample_wishart(3, 5, &omega, 42).unwrap();
        let b = sample_wishart(3, 5, &omega, 42).unwrap();
        assert_eq!(&a, &b);
    }

    #[test]
    fn desk_scale_equicorrelated_draw_is_pd() {
        let m = 50;
        let data = DMatrix::from_fn(m, m, |i, j| if i == j { 1.0 } else { 0.5 });
        let omega = SymMatrix::new(data).unwrap();
        let w = sample_wishart(m, 70, &omega, 7).unwrap();
        assert!(w.as_matrix().clone().cholesky().is_some());
    }

    #[test]
    fn rejects_non_pd_omega() {
        let omega = SymMatrix::from_diagonal(&[1.0, 0.0]);
        assert!(sample_wishart(2, 4, &omega, 0).is_err());
    }
}
