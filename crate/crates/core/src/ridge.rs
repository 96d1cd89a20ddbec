//! Ridge approximation solvers: the closed-form spectral solution, the EM
//! iteration, and the two-step QR baseline, plus loss evaluation.
//!
//! All three produce a model M ~ A A^T + delta I with A of full column rank
//! q, delta > 0 and A^T b = 0 under the linear constraint.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::baselines::incomplete_cholesky;
use crate::eigen::sym_eig;
use crate::error::{Error, Result};
use crate::matrix::{ConstraintVector, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Sd,
    Em,
    #[serde(rename = "twostep")]
    TwoStep,
}

/// The fitted approximation M ~ A A^T + delta I.
#[derive(Debug, Clone)]
pub struct RidgeModel {
    factor: DMatrix<f64>,
    delta: f64,
    constraint: ConstraintVector,
    solver: Solver,
    iterations: usize,
}

impl RidgeModel {
    /// Builds a model and checks the invariants: delta > 0, full column
    /// rank, and A^T b = 0 under a nonzero constraint.
    pub fn new(
        factor: DMatrix<f64>,
        delta: f64,
        constraint: ConstraintVector,
        solver: Solver,
        iterations: usize,
    ) -> Result<Self> {
        if !(delta > 0.0) || !delta.is_finite() {
            return Err(Error::InvalidInput(format!("delta must be positive, got {delta}")));
        }
        if constraint.dim() != factor.nrows() {
            return Err(Error::DimensionMismatch(format!(
                "factor has {} rows but constraint length {}",
                factor.nrows(),
                constraint.dim()
            )));
        }
        let sv = factor.clone().svd(false, false).singular_values;
        let (smax, smin) = (sv[0], sv[sv.len() - 1]);
        if smin <= 1e-10 * smax {
            return Err(Error::InvalidInput(format!(
                "factor is rank deficient (sigma_min/sigma_max = {:.3e})",
                smin / smax
            )));
        }
        if !constraint.is_zero() {
            let viol = (factor.transpose() * constraint.as_vector()).norm();
            if viol > 1e-10 * factor.norm() {
                return Err(Error::InvalidInput(format!(
                    "factor violates A^T b = 0 (residual {viol:.3e})"
                )));
            }
        }
        Ok(Self {
            factor,
            delta,
            constraint,
            solver,
            iterations,
        })
    }

    pub fn dim(&self) -> usize {
        self.factor.nrows()
    }

    pub fn rank(&self) -> usize {
        self.factor.ncols()
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.factor
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn constraint(&self) -> &ConstraintVector {
        &self.constraint
    }

    pub fn solver(&self) -> Solver {
        self.solver
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Materializes Omega = A A^T + delta I.
    pub fn omega(&self) -> SymMatrix {
        let m = self.dim();
        let mut data = &self.factor * self.factor.transpose();
        for i in 0..m {
            data[(i, i)] += self.delta;
        }
        let (sym, _) = SymMatrix::symmetrize(data).expect("omega is square");
        sym
    }

    pub fn to_json(&self) -> String {
        let b = if self.constraint.is_zero() {
            None
        } else {
            Some(self.constraint.as_vector().iter().copied().collect::<Vec<_>>())
        };
        let ser = RidgeModelJson {
            m: self.dim(),
            q: self.rank(),
            delta: self.delta,
            solver: self.solver,
            iterations: self.iterations,
            b,
            a: self.factor.row_iter().flat_map(|r| r.iter().copied().collect::<Vec<_>>()).collect(),
        };
        serde_json::to_string_pretty(&ser).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de: RidgeModelJson =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        if de.a.len() != de.m * de.q {
            return Err(Error::Parse(format!(
                "factor has {} entries, expected {}",
                de.a.len(),
                de.m * de.q
            )));
        }
        let factor = DMatrix::from_row_slice(de.m, de.q, &de.a);
        let constraint = match de.b {
            Some(v) => ConstraintVector::new(DVector::from_vec(v))?,
            None => ConstraintVector::none(de.m),
        };
        Self::new(factor, de.delta, constraint, de.solver, de.iterations)
    }
}

#[derive(Serialize, Deserialize)]
struct RidgeModelJson {
    m: usize,
    q: usize,
    delta: f64,
    solver: Solver,
    iterations: usize,
    b: Option<Vec<f64>>,
    #[serde(rename = "A")]
    a: Vec<f64>,
}

/// Options for the EM iteration.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EmOptions {
    pub max_iters: usize,
    pub tol: f64,
    pub delta0: f64,
    pub seed: u64,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tol: 1e-8,
            delta0: 1e-4,
            seed: 0,
        }
    }
}

impl EmOptions {
    fn validate(&self) -> Result<()> {
        if self.max_iters < 1 {
            return Err(Error::InvalidInput("max_iters must be >= 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidInput("tol must be positive".into()));
        }
        if !(self.delta0 > 0.0) {
            return Err(Error::InvalidInput("delta0 must be positive".into()));
        }
        Ok(())
    }
}

/// Loss values and conditioning diagnostics for a fitted model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    /// Least-squares loss tr[(S - A A^T - delta I)^2].
    pub loss_f: f64,
    /// Likelihood loss log|Omega| + tr(Omega^{-1} S).
    pub loss_g: f64,
    /// Condition number of Omega = A A^T + delta I.
    pub cond_approx: f64,
    /// Condition number of the input, when it is positive definite.
    pub cond_input: Option<f64>,
    /// Sum of the input's tail eigenvalues beyond rank q.
    pub tail_sum: f64,
}

/// One EM iterate: the ridge value and the likelihood loss at that iterate.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EmTraceEntry {
    pub delta: f64,
    pub loss_g: f64,
}

/// Outcome of an EM fit. `converged` is false when max_iters was reached
/// before the tolerance; the model is then the best (last) iterate.
#[derive(Debug, Clone)]
pub struct EmFit {
    pub model: RidgeModel,
    pub report: FitReport,
    pub trace: Vec<EmTraceEntry>,
    pub converged: bool,
}

fn psd_rank_exceeds(s: &SymMatrix, q: usize) -> bool {
    if q >= s.dim() {
        return false;
    }
    let tol = 1e-12 * s.trace().max(1.0);
    match incomplete_cholesky(s, q + 1, tol) {
        Ok(f) => f.rank() > q,
        Err(_) => false,
    }
}

fn check_centered(s: &SymMatrix, b: &ConstraintVector) -> Result<()> {
    if b.dim() != s.dim() {
        return Err(Error::DimensionMismatch(format!(
            "matrix is {}x{} but constraint length {}",
            s.dim(),
            s.dim(),
            b.dim()
        )));
    }
    if !b.is_zero() {
        let resid = (s.as_matrix() * b.as_vector()).norm();
        if resid > 1e-8 * s.frobenius_norm().max(1.0) {
            return Err(Error::InvalidInput(format!(
                "matrix is not centered: ||S b|| = {resid:.3e}; apply the transform first"
            )));
        }
    }
    Ok(())
}

/// Closed-form spectral fit of a centered matrix (S b = 0 when b != 0):
/// delta is the mean of the tail eigenvalues and A = U_q (Gamma_q - delta I)^{1/2}.
pub fn fit_sd(s: &SymMatrix, q: usize, b: &ConstraintVector) -> Result<(RidgeModel, FitReport)> {
    let m = s.dim();
    if q < 1 || q >= m {
        return Err(Error::InvalidInput(format!("rank must satisfy 1 <= q < m, got q={q}, m={m}")));
    }
    check_centered(s, b)?;
    let ep = sym_eig(s)?;
    let tail: f64 = ep.values[q..].iter().sum();
    let delta = tail / (m - q) as f64;
    if ep.values[q..].iter().all(|g| *g <= 1e-12) {
        return Err(Error::SpectrumDegeneracy(
            "tail eigenvalues are all zero; the input has exact rank <= q, use an exact factorization instead".into(),
        ));
    }
    if ep.values[q - 1] <= delta {
        return Err(Error::SpectrumDegeneracy(format!(
            "gamma_q = {:.6e} <= delta = {:.6e}; Gamma_q - delta I is not positive definite",
            ep.values[q - 1],
            delta
        )));
    }
    let mut factor = ep.vectors.columns(0, q).clone_owned();
    for j in 0..q {
        factor.column_mut(j).scale_mut((ep.values[j] - delta).sqrt());
    }
    let model = RidgeModel::new(factor, delta, b.clone(), Solver::Sd, 0)?;
    let report = evaluate_losses(s, &model)?;
    Ok((model, report))
}

/// Spectral fit of an *uncentered* matrix under the constraint, solving the
/// general problem on T = P M P with delta absorbing b^T M b. Fails with
/// `ConditionFailed` when the eigenvalue condition gamma_i > delta_hat
/// (i <= q) does not hold; there is no silent fallback.
pub fn fit_sd_general(
    m_mat: &SymMatrix,
    q: usize,
    b: &ConstraintVector,
) -> Result<(RidgeModel, FitReport)> {
    let m = m_mat.dim();
    if q < 1 || q >= m {
        return Err(Error::InvalidInput(format!("rank must satisfy 1 <= q < m, got q={q}, m={m}")));
    }
    if b.dim() != m {
        return Err(Error::DimensionMismatch("constraint length".into()));
    }
    let t = crate::transform::apply_transform(m_mat, b, crate::transform::TransformMode::Project)?;
    let btmb = if b.is_zero() {
        0.0
    } else {
        (b.as_vector().transpose() * m_mat.as_matrix() * b.as_vector())[(0, 0)]
    };
    let ep = sym_eig(&t)?;
    let tail: f64 = ep.values[q..].iter().sum();
    let delta = (btmb + tail) / (m - q) as f64;
    let margin = ep.values[..q]
        .iter()
        .map(|g| g - delta)
        .fold(f64::INFINITY, f64::min);
    if margin <= 0.0 {
        return Err(Error::ConditionFailed { margin });
    }
    if !(delta > 0.0) {
        return Err(Error::SpectrumDegeneracy(
            "delta would be zero; use an exact factorization instead".into(),
        ));
    }
    let mut factor = ep.vectors.columns(0, q).clone_owned();
    for j in 0..q {
        factor.column_mut(j).scale_mut((ep.values[j] - delta).sqrt());
    }
    let model = RidgeModel::new(factor, delta, b.clone(), Solver::Sd, 0)?;
    let report = evaluate_losses(&t, &model)?;
    Ok((model, report))
}

fn loss_g_parts(delta: f64, gram: &DMatrix<f64>, at_s_a: &DMatrix<f64>, trace_s: f64, m: usize) -> f64 {
    let q = gram.nrows();
    let sigma = gram + DMatrix::from_diagonal_element(q, q, delta);
    let chol = sigma.clone().cholesky().expect("sigma is PD for delta > 0");
    let log_det_sigma: f64 = chol.l().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
    let log_det = (m - q) as f64 * delta.ln() + log_det_sigma;
    let tr_inv_s = (trace_s - chol.solve(at_s_a).trace()) / delta;
    log_det + tr_inv_s
}

fn draw_initial_factor(
    s_dim: usize,
    q: usize,
    b: &ConstraintVector,
    seed: u64,
) -> Result<DMatrix<f64>> {
    for attempt in 0..8u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
        let mut a0 = DMatrix::from_fn(s_dim, q, |_, _| StandardNormal.sample(&mut rng));
        if !b.is_zero() {
            let bv = b.as_vector();
            let coeffs = bv.transpose() * &a0;
            a0 -= bv * coeffs;
        }
        let sv = a0.clone().svd(false, false).singular_values;
        if sv[sv.len() - 1] > 1e-8 * sv[0] {
            return Ok(a0);
        }
    }
    Err(Error::InvalidInput("could not draw a full-rank initial factor".into()))
}

/// EM iteration on a centered matrix. The constraint A^T b = 0 is enforced
/// by the initialization and preserved by the updates; delta stays positive
/// throughout. Reaching max_iters is reported through `converged = false`,
/// not an error.
pub fn fit_em(s: &SymMatrix, q: usize, b: &ConstraintVector, opts: &EmOptions) -> Result<EmFit> {
    opts.validate()?;
    let m = s.dim();
    if q < 1 || q >= m {
        return Err(Error::InvalidInput(format!("rank must satisfy 1 <= q < m, got q={q}, m={m}")));
    }
    check_centered(s, b)?;
    if !psd_rank_exceeds(s, q) {
        return Err(Error::InvalidInput(format!("input rank must exceed q = {q}")));
    }

    let mut a = draw_initial_factor(m, q, b, opts.seed)?;
    let mut delta = opts.delta0;
    let mut trace = Vec::new();
    let trace_s = s.trace();
    let mut converged = false;
    let mut iterations = 0;

    let mut prev_norm = f64::NAN;
    for it in 0..opts.max_iters {
        iterations = it + 1;
        let sa = s.as_matrix() * &a;
        let gram = a.transpose() * &a;
        let at_s_a = a.transpose() * &sa;
        trace.push(EmTraceEntry {
            delta,
            loss_g: loss_g_parts(delta, &gram, &at_s_a, trace_s, m),
        });

        let sigma = &gram + DMatrix::from_diagonal_element(q, q, delta);
        let sigma_chol = sigma
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Factorization("EM inner matrix not PD".into()))?;
        let inner = DMatrix::from_diagonal_element(q, q, delta) + sigma_chol.solve(&at_s_a);
        let inner_lu = inner.lu();
        let a_next = inner_lu
            .solve(&sa.transpose())
            .ok_or_else(|| Error::Factorization("EM update solve failed".into()))?
            .transpose();
        // delta update: tr(A_{t+1} Sigma_t^{-1} A_t^T S) = tr(Sigma_t^{-1} (S A_t)^T A_{t+1})
        let cross = sa.transpose() * &a_next;
        let delta_next = (trace_s - sigma_chol.solve(&cross).trace()) / m as f64;

        let gram_next = a_next.transpose() * &a_next;
        let aat_norm = gram_next.norm();
        let delta_change = (delta_next - delta).abs() / delta.max(f64::MIN_POSITIVE);
        let norm_change = if prev_norm.is_nan() {
            f64::INFINITY
        } else {
            (aat_norm - prev_norm).abs() / prev_norm.max(f64::MIN_POSITIVE)
        };
        a = a_next;
        delta = delta_next;
        prev_norm = aat_norm;
        if delta_change < opts.tol && norm_change < opts.tol {
            converged = true;
            break;
        }
    }

    // final trace entry at the returned iterate
    let sa = s.as_matrix() * &a;
    let gram = a.transpose() * &a;
    let at_s_a = a.transpose() * &sa;
    trace.push(EmTraceEntry {
        delta,
        loss_g: loss_g_parts(delta, &gram, &at_s_a, trace_s, m),
    });

    let model = RidgeModel::new(a, delta, b.clone(), Solver::Em, iterations)?;
    let report = evaluate_losses(s, &model)?;
    Ok(EmFit {
        model,
        report,
        trace,
        converged,
    })
}

/// Two-step baseline: QR orthogonal iteration to an orthonormal Q, then
/// A = Q (Q^T S Q)^{1/2} and delta = (tr S - tr Q^T S Q)/m. Suboptimal for
/// the least-squares loss whenever the tail is nonzero.
pub fn fit_twostep(s: &SymMatrix, q: usize, seed: u64) -> Result<(RidgeModel, FitReport)> {
    let m = s.dim();
    if q < 1 || q >= m {
        return Err(Error::InvalidInput(format!("rank must satisfy 1 <= q < m, got q={q}, m={m}")));
    }
    let a0 = draw_initial_factor(m, q, &ConstraintVector::none(m), seed)?;
    let mut qmat = a0
        .qr()
        .q()
        .columns(0, q)
        .clone_owned();
    let mut converged = false;
    for _ in 0..1000 {
        let z = s.as_matrix() * &qmat;
        let q_next = z.qr().q().columns(0, q).clone_owned();
        let change = (&q_next * q_next.transpose() - &qmat * qmat.transpose()).norm();
        qmat = q_next;
        if change < 1e-10 {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NotConverged { iterations: 1000 });
    }
    let bmat = qmat.transpose() * s.as_matrix() * &qmat;
    let bmat = (&bmat + bmat.transpose()) * 0.5;
    let ep = sym_eig(&SymMatrix::new(bmat.clone())?)?;
    if ep.values.iter().any(|v| *v < -1e-12 * s.frobenius_norm()) {
        return Err(Error::Factorization("Q^T S Q is not PSD".into()));
    }
    let mut half = ep.vectors.clone();
    for j in 0..q {
        half.column_mut(j).scale_mut(ep.values[j].max(0.0).sqrt());
    }
    let sqrt_b = &half * ep.vectors.transpose();
    let a = &qmat * sqrt_b;
    let delta = (s.trace() - bmat.trace()) / m as f64;
    if !(delta > 0.0) {
        return Err(Error::SpectrumDegeneracy(
            "two-step delta is not positive; the input has exact rank <= q".into(),
        ));
    }
    let model = RidgeModel::new(a, delta, ConstraintVector::none(m), Solver::TwoStep, 0)?;
    let report = evaluate_losses(s, &model)?;
    Ok((model, report))
}

/// Evaluates the two losses and conditioning diagnostics of a model against
/// a matrix, exactly as defined.
pub fn evaluate_losses(s: &SymMatrix, model: &RidgeModel) -> Result<FitReport> {
    let m = s.dim();
    if model.dim() != m {
        return Err(Error::DimensionMismatch(format!(
            "model dim {} vs matrix dim {m}",
            model.dim()
        )));
    }
    let q = model.rank();
    let a = model.factor();
    let delta = model.delta();

    let mut resid = s.as_matrix() - a * a.transpose();
    for i in 0..m {
        resid[(i, i)] -= delta;
    }
    let loss_f = resid.norm_squared();

    let gram = a.transpose() * a;
    let at_s_a = a.transpose() * s.as_matrix() * a;
    let loss_g = loss_g_parts(delta, &gram, &at_s_a, s.trace(), m);

    let gram_sym = SymMatrix::new((&gram + gram.transpose()) * 0.5)?;
    let top = sym_eig(&gram_sym)?.values[0];
    let cond_approx = (delta + top) / delta;

    let ep = sym_eig(s)?;
    let min = *ep.values.last().unwrap();
    let cond_input = if min > 0.0 { Some(ep.values[0] / min) } else { None };
    let tail_sum = ep.values[q..].iter().sum();

    Ok(FitReport {
        loss_f,
        loss_g,
        cond_approx,
        cond_input,
        tail_sum,
    })
}
