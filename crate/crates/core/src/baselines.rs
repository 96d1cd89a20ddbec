//! Competing low-rank approximators: incomplete Cholesky and the Nyström
//! method.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::eigen::sym_eig;
use crate::error::{Error, Result};
use crate::matrix::SymMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorMethod {
    Icd,
    Nystrom,
}

/// A low-rank factor M ~ L L^T. For ICD, `indices` is the pivot order and L
/// is lower triangular after permuting rows into that order; for Nyström,
/// `indices` is the sampled column set.
#[derive(Debug, Clone)]
pub struct LowRankFactor {
    pub l: DMatrix<f64>,
    pub method: FactorMethod,
    pub indices: Vec<usize>,
    /// True when ICD stopped before reaching the requested rank because the
    /// remaining diagonal fell below the pivot tolerance.
    pub early_stop: bool,
}

impl LowRankFactor {
    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn rank(&self) -> usize {
        self.l.ncols()
    }

    pub fn to_json(&self) -> String {
        let ser = LowRankFactorJson {
            m: self.dim(),
            q: self.rank(),
            method: self.method,
            indices: self.indices.clone(),
            l: self.l.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()).collect(),
        };
        serde_json::to_string_pretty(&ser).expect("factor serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de: LowRankFactorJson =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if de.l.len() != de.m * de.q {
            return Err(Error::Parse("factor entry count mismatch".into()));
        }
        Ok(Self {
            l: DMatrix::from_row_slice(de.m, de.q, &de.l),
            method: de.method,
            indices: de.indices,
            early_stop: false,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct LowRankFactorJson {
    m: usize,
    q: usize,
    method: FactorMethod,
    indices: Vec<usize>,
    #[serde(rename = "L")]
    l: Vec<f64>,
}

/// Greedy pivoted partial Cholesky: at each step takes the largest remaining
/// diagonal as pivot. Rows of L stay in the original ordering; `indices`
/// records the pivot sequence. Stops early (flagged) when the largest
/// remaining diagonal drops below `pivot_tol`.
pub fn incomplete_cholesky(m: &SymMatrix, q: usize, pivot_tol: f64) -> Result<LowRankFactor> {
    let n = m.dim();
    if q > n {
        return Err(Error::InvalidInput(format!("rank q = {q} exceeds dimension {n}")));
    }
    let mat = m.as_matrix();
    let mut diag: Vec<f64> = (0..n).map(|i| mat[(i, i)]).collect();
    if diag.iter().any(|d| *d < -1e-10 * m.trace().abs().max(1.0)) {
        return Err(Error::Factorization("negative diagonal entry; input is not PSD".into()));
    }
    let mut l = DMatrix::zeros(n, q);
    let mut indices = Vec::with_capacity(q);
    let mut early_stop = false;
    let mut k = 0;
    while k < q {
        let pivot = (0..n)
            .max_by(|&a, &b| diag[a].partial_cmp(&diag[b]).unwrap())
            .unwrap();
        if diag[pivot] < pivot_tol {
            early_stop = true;
            break;
        }
        if diag[pivot] <= 0.0 {
            return Err(Error::Factorization(format!(
                "non-positive pivot {:.3e} at step {k}",
                diag[pivot]
            )));
        }
        let root = diag[pivot].sqrt();
        for j in 0..n {
            let mut v = mat[(j, pivot)];
            for t in 0..k {
                v -= l[(j, t)] * l[(pivot, t)];
            }
            l[(j, k)] = v / root;
        }
        l[(pivot, k)] = root;
        for j in 0..n {
            diag[j] -= l[(j, k)] * l[(j, k)];
        }
        diag[pivot] = 0.0;
        indices.push(pivot);
        k += 1;
    }
    let l = l.columns(0, k).clone_owned();
    Ok(LowRankFactor {
        l,
        method: FactorMethod::Icd,
        indices,
        early_stop,
    })
}

/// Nyström factor from an explicit column set: L = K_{m,q} W^{-1/2} with
/// W = K_{q,q} + jitter, so that L L^T = K_{m,q} W^{-1} K_{m,q}^T.
pub fn nystrom(k: &SymMatrix, columns: &[usize]) -> Result<LowRankFactor> {
    let n = k.dim();
    let q = columns.len();
    if q == 0 || q > n {
        return Err(Error::InvalidInput(format!("need 1..={n} columns, got {q}")));
    }
    let mut seen = vec![false; n];
    for &c in columns {
        if c >= n {
            return Err(Error::InvalidInput(format!("column index {c} out of range")));
        }
        if seen[c] {
            return Err(Error::InvalidInput(format!("duplicate column index {c}")));
        }
        seen[c] = true;
    }
    let mat = k.as_matrix();
    let kmq = DMatrix::from_fn(n, q, |i, j| mat[(i, columns[j])]);
    let mut w = DMatrix::from_fn(q, q, |i, j| mat[(columns[i], columns[j])]);
    let jitter = 1e-10 * w.trace() / q as f64;
    for i in 0..q {
        w[(i, i)] += jitter;
    }
    let w_sym = SymMatrix::symmetrize(w)?.0;
    let ep = sym_eig(&w_sym)?;
    let floor = 1e-14 * ep.values[0].abs().max(f64::MIN_POSITIVE);
    if ep.values.iter().any(|v| *v <= floor) {
        return Err(Error::Factorization(
            "sampled block is singular beyond the jitter".into(),
        ));
    }
    let mut inv_half = ep.vectors.clone();
    for j in 0..q {
        inv_half.column_mut(j).scale_mut(1.0 / ep.values[j].sqrt());
    }
    let w_inv_half = &inv_half * ep.vectors.transpose();
    Ok(LowRankFactor {
        l: kmq * w_inv_half,
        method: FactorMethod::Nystrom,
        indices: columns.to_vec(),
        early_stop: false,
    })
}

/// Quantifies how far the ICD factor's column space is from the top-q
/// eigenspace: with R = U_q^T L (L^T L)^{-1/2}, returns ||R^T R - I_q||_F.
/// Zero means range(L) = range(U_q); a large defect shows ICD is not an
/// eigenvector method.
pub fn icd_eigvec_check(m: &SymMatrix, q: usize) -> Result<f64> {
    let factor = incomplete_cholesky(m, q, 0.0)?;
    let q_eff = factor.rank();
    let ep = sym_eig(m)?;
    let uq = ep.vectors.columns(0, q_eff).clone_owned();
    let gram = factor.l.transpose() * &factor.l;
    let gram_sym = SymMatrix::symmetrize(gram)?.0;
    let gep = sym_eig(&gram_sym)?;
    if *gep.values.last().unwrap() <= 1e-12 * gep.values[0] {
        return Err(Error::Factorization("ICD factor is rank deficient".into()));
    }
    let mut inv_half = gep.vectors.clone();
    for j in 0..q_eff {
        inv_half.column_mut(j).scale_mut(1.0 / gep.values[j].sqrt());
    }
    let gram_inv_half = &inv_half * gep.vectors.transpose();
    let r = uq.transpose() * &factor.l * gram_inv_half;
    Ok((r.transpose() * r - DMatrix::identity(q_eff, q_eff)).norm())
}
