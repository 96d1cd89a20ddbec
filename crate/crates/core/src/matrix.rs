//! Dense symmetric matrices and the constraint vector, plus the shared
//! whitespace text format used by the CLI.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// A dense symmetric matrix, stored fully. The stored data is exactly
/// symmetric: symmetrization is the loader's job, not the consumer's.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMatrix {
    data: DMatrix<f64>,
}

impl SymMatrix {
    /// Wraps a matrix that is already exactly symmetric.
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.nrows() != data.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "expected square matrix with m >= 1, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if !data.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        for i in 0..data.nrows() {
            for j in 0..i {
                if data[(i, j)] != data[(j, i)] {
                    return Err(Error::InvalidInput(format!(
                        "matrix is not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Self { data })
    }

    /// Symmetrizes via (M + M^T)/2 and returns the matrix together with the
    /// Frobenius norm of the asymmetric part that was discarded.
    pub fn symmetrize(data: DMatrix<f64>) -> Result<(Self, f64)> {
        if data.nrows() == 0 || data.nrows() != data.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "expected square matrix with m >= 1, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        let sym = (&data + data.transpose()) * 0.5;
        let asym_norm = (&data - &sym).norm();
        let m = Self::new(sym)?;
        Ok((m, asym_norm))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self {
            data: DMatrix::from_diagonal(&DVector::from_row_slice(diag)),
        }
    }

    pub fn identity(m: usize) -> Self {
        Self {
            data: DMatrix::identity(m, m),
        }
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    pub fn trace(&self) -> f64 {
        self.data.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.norm()
    }

    /// Parses the shared matrix text format: first line `m n`, then m rows of
    /// n whitespace-separated values. Returns the symmetrized matrix and the
    /// recorded asymmetry norm.
    pub fn parse_text(text: &str) -> Result<(Self, f64)> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty matrix file".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad header `{header}`"))))
            .collect::<Result<_>>()?;
        if dims.len() != 2 {
            return Err(Error::Parse(format!("bad header `{header}`")));
        }
        let (m, n) = (dims[0], dims[1]);
        if m != n {
            return Err(Error::Parse(format!("matrix must be square, got {m}x{n}")));
        }
        let mut data = DMatrix::zeros(m, n);
        for i in 0..m {
            let line = lines
                .next()
                .ok_or_else(|| Error::Parse(format!("missing row {i}")))?;
            let row: Vec<f64> = line
                .split_whitespace()
                .map(|t| t.parse().map_err(|_| Error::Parse(format!("bad value `{t}` in row {i}"))))
                .collect::<Result<_>>()?;
            if row.len() != n {
                return Err(Error::Parse(format!(
                    "row {i} has {} values, expected {n}",
                    row.len()
                )));
            }
            if !row.iter().all(|x| x.is_finite()) {
                return Err(Error::InvalidInput(format!("non-finite value in row {i}")));
            }
            for j in 0..n {
                data[(i, j)] = row[j];
            }
        }
        Self::symmetrize(data)
    }

    /// Writes the shared matrix text format with 17 significant digits.
    pub fn to_text(&self) -> String {
        let m = self.dim();
        let mut out = format!("{m} {m}\n");
        for i in 0..m {
            let row: Vec<String> = (0..m).map(|j| format!("{:.17e}", self.data[(i, j)])).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

/// The linear constraint direction b. Either zero (no constraint) or a unit
/// vector; normalization happens at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintVector {
    b: DVector<f64>,
    zero: bool,
}

impl ConstraintVector {
    const ZERO_TOL: f64 = 1e-12;

    /// Builds the constraint from an arbitrary vector. A vector with norm
    /// below 1e-12 is treated as the zero vector (no constraint); anything
    /// else is normalized to unit length.
    pub fn new(b: DVector<f64>) -> Result<Self> {
        if !b.iter().all(|x| x.is_finite()) {
            return Err(Error::InvalidInput("constraint vector has non-finite entries".into()));
        }
        let norm = b.norm();
        if norm <= Self::ZERO_TOL {
            let m = b.len();
            Ok(Self {
                b: DVector::zeros(m),
                zero: true,
            })
        } else {
            Ok(Self {
                b: b / norm,
                zero: false,
            })
        }
    }

    /// The zero constraint (unconstrained problem) in dimension m.
    pub fn none(m: usize) -> Self {
        Self {
            b: DVector::zeros(m),
            zero: true,
        }
    }

    /// b = (1/sqrt(m)) 1_m, the centering constraint used by kernel methods.
    pub fn uniform(m: usize) -> Self {
        let v = DVector::from_element(m, 1.0 / (m as f64).sqrt());
        Self { b: v, zero: false }
    }

    pub fn is_zero(&self) -> bool {
        self.zero
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.b
    }
}
