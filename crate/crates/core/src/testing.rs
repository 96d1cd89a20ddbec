//! Shared fixtures for tests: the 10x10 reference matrix and seeded random
//! PSD draws.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::matrix::{ConstraintVector, SymMatrix};
use crate::wishart::sample_wishart;

/// The 10x10 positive definite matrix used as a running example throughout
/// the test suite, loaded from the checked-in fixture.
pub fn toy_matrix() -> SymMatrix {
    let text = include_str!("../../../data/toy10.txt");
    let (m, asym) = SymMatrix::parse_text(text).expect("fixture parses");
    assert!(asym < 1e-12, "fixture should be exactly symmetric");
    m
}

/// Seeded Wishart draw with identity scale: an m x m PSD matrix of rank
/// min(m, r), positive definite when r >= m.
pub fn random_psd(m: usize, r: usize, seed: u64) -> SymMatrix {
    sample_wishart(m, r, &SymMatrix::identity(m), seed).expect("identity omega is PD")
}

/// Seeded random unit constraint vector with entries biased off-center so
/// 1^T b stays away from zero.
pub fn random_unit_constraint(m: usize, seed: u64) -> ConstraintVector {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = DVector::from_fn(m, |_, _| rng.gen::<f64>() + 0.1);
    ConstraintVector::new(v).expect("finite entries")
}
