//! Convex optimization kernels: projections onto the PSD cone and the
//! trace-preserving affine set, Dykstra's algorithm for their intersection,
//! and projected-gradient least squares over polytopes and over Choi matrices.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::channel::ChoiMatrix;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, RANK_EPS};

/// Hermitian inputs to the projections are symmetrized when their residual is
/// below this.
pub const SYMMETRIZE_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepRule {
    Fixed,
    Backtracking,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverSettings {
    pub max_iters: usize,
    pub tol_objective: f64,
    pub tol_feasibility: f64,
    pub step_rule: StepRule,
    /// Armijo sufficient-decrease constant for backtracking.
    pub armijo: f64,
    /// Record one [`TraceRow`] per iteration.
    pub trace: bool,
}

impl Default for SolverSettings {
    fn default() -> Self {
        SolverSettings {
            max_iters: 5000,
            tol_objective: 1e-10,
            tol_feasibility: 1e-8,
            step_rule: StepRule::Backtracking,
            armijo: 1e-4,
            trace: false,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidSpec("max_iters must be at least 1".into()));
        }
        if !(self.tol_objective > 0.0 && self.tol_feasibility > 0.0) {
            return Err(Error::InvalidSpec("tolerances must be positive".into()));
        }
        Ok(())
    }
}

/// One iteration of a solver trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iter: usize,
    pub objective: f64,
    pub feas_psd: f64,
    pub feas_tp: f64,
}

/// Writes trace rows as CSV with header `iter,objective,feas_psd,feas_tp`.
pub fn write_trace_csv<W: Write>(rows: &[TraceRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "iter,objective,feas_psd,feas_tp")?;
    for r in rows {
        writeln!(out, "{},{:e},{:e},{:e}", r.iter, r.objective, r.feas_psd, r.feas_tp)?;
    }
    Ok(())
}

/// Polytope `{λ : Gλ ≤ g}`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearInequalitySet {
    rows: DMatrix<f64>,
    bounds: DVector<f64>,
}

impl LinearInequalitySet {
    pub fn new(rows: Vec<Vec<f64>>, bounds: Vec<f64>) -> Result<Self> {
        if rows.len() != bounds.len() {
            return Err(Error::Dimension { expected: rows.len(), got: bounds.len() });
        }
        let n = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidSpec("constraint rows have unequal length".into()));
        }
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        Ok(LinearInequalitySet {
            rows: DMatrix::from_row_slice(bounds.len(), n, &flat),
            bounds: DVector::from_vec(bounds),
        })
    }

    /// No constraints on `n` variables.
    pub fn unconstrained(n: usize) -> Self {
        LinearInequalitySet { rows: DMatrix::zeros(0, n), bounds: DVector::zeros(0) }
    }

    pub fn num_vars(&self) -> usize {
        self.rows.ncols()
    }

    pub fn num_constraints(&self) -> usize {
        self.rows.nrows()
    }

    pub fn rows(&self) -> &DMatrix<f64> {
        &self.rows
    }

    pub fn bounds(&self) -> &DVector<f64> {
        &self.bounds
    }

    /// `max(0, max_k (Gλ - g)_k)`.
    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        (&self.rows * x - &self.bounds).iter().fold(0.0, |m, &v| m.max(v))
    }

    /// Euclidean projection onto the polytope by active-set enumeration.
    ///
    /// Subsets of constraints are tried in order of increasing size; the first
    /// whose equality-constrained projection is primal feasible with
    /// non-negative multipliers is the (unique) projection. Returns
    /// [`Error::Infeasible`] when no subset qualifies, which for small problems
    /// means the polytope is empty.
    pub fn project(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        let scale = 1.0 + v.amax() + self.bounds.amax();
        let tol = 1e-10 * scale;
        if self.max_violation(v) <= tol {
            return Ok(v.clone());
        }
        let m = self.num_constraints();
        let n = self.num_vars();
        let mut subset = Vec::with_capacity(n);
        for k in 1..=n.min(m) {
            if let Some(x) = self.search_subsets(v, k, 0, &mut subset, tol) {
                return Ok(x);
            }
        }
        Err(Error::Infeasible(format!(
            "no active set yields a feasible projection ({} constraints, {} variables)",
            m, n
        )))
    }

    fn search_subsets(
        &self,
        v: &DVector<f64>,
        k: usize,
        start: usize,
        subset: &mut Vec<usize>,
        tol: f64,
    ) -> Option<DVector<f64>> {
        if subset.len() == k {
            return self.try_active_set(v, subset, tol);
        }
        for i in start..self.num_constraints() {
            subset.push(i);
            let found = self.search_subsets(v, k, i + 1, subset, tol);
            subset.pop();
            if found.is_some() {
                return found;
            }
        }
        None
    }

    fn try_active_set(&self, v: &DVector<f64>, active: &[usize], tol: f64) -> Option<DVector<f64>> {
        let ga = self.rows.select_rows(active);
        let gram = &ga * ga.transpose();
        let rhs = &ga * v - self.bounds.select_rows(active);
        let chol = gram.cholesky()?;
        let mu = chol.solve(&rhs);
        if mu.iter().any(|&m| m < -tol) {
            return None;
        }
        let x = v - ga.transpose() * mu;
        (self.max_violation(&x) <= tol).then_some(x)
    }
}

/// `½ λᵀAλ + bᵀλ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Quadratic {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
}

impl Quadratic {
    pub fn new(a: DMatrix<f64>, b: DVector<f64>) -> Result<Self> {
        if !a.is_square() || a.nrows() != b.len() {
            return Err(Error::Dimension { expected: a.nrows(), got: b.len() });
        }
        let asym = (&a - a.transpose()).amax();
        if asym > 1e-10 * (1.0 + a.amax()) {
            return Err(Error::InvalidSpec(format!("quadratic form not symmetric ({asym:.2e})")));
        }
        Ok(Quadratic { a, b })
    }

    pub fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.a * x)) + self.b.dot(x)
    }

    pub fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.a * x + &self.b
    }
}

/// Largest eigenvalue of a symmetric PSD operator by power iteration.
pub fn power_iteration<F: Fn(&DVector<f64>) -> DVector<f64>>(apply: F, n: usize, iters: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    // Fixed, non-symmetric start vector so that no eigenvector is missed by symmetry.
    let mut v = DVector::from_fn(n, |i, _| 1.0 + 0.1 * i as f64);
    v.normalize_mut();
    let mut est = 0.0;
    for _ in 0..iters {
        let w = apply(&v);
        let nw = w.norm();
        if nw == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / nw;
        if (next - est).abs() <= 1e-12 * next.abs() {
            est = next;
            break;
        }
        est = next;
    }
    // Power iteration approaches from below; pad so that 1/L stays a safe step.
    est.max(0.0) * 1.01
}

#[derive(Clone, Debug, PartialEq)]
pub struct QpSolution {
    pub x: DVector<f64>,
    pub objective: f64,
    pub iterations: usize,
    /// Norm of the projected gradient map at exit.
    pub stationarity: f64,
    pub trace: Vec<TraceRow>,
}

/// Projected gradient descent for `min ½λᵀAλ + bᵀλ` subject to `Gλ ≤ g`.
///
/// Starts from the projection of the zero vector, so rank-deficient problems
/// resolve towards the minimum-norm minimizer. Near convergence the active set
/// of the iterate is polished by solving its KKT system exactly.
pub fn pgd_ls(quad: &Quadratic, ineq: &LinearInequalitySet, s: &SolverSettings) -> Result<QpSolution> {
    s.validate()?;
    let n = quad.b.len();
    if ineq.num_vars() != n {
        return Err(Error::Dimension { expected: n, got: ineq.num_vars() });
    }
    let mut x = ineq.project(&DVector::zeros(n))?;
    let lip = power_iteration(|v| &quad.a * v, n, 500);
    let mut trace = Vec::new();
    if lip <= RANK_EPS {
        // Zero quadratic: only the linear term can move the point.
        if quad.b.norm() <= RANK_EPS {
            let objective = quad.value(&x);
            return Ok(QpSolution { x, objective, iterations: 0, stationarity: 0.0, trace });
        }
    }
    let base_step = if lip > RANK_EPS { 1.0 / lip } else { 1.0 };
    let mut f = quad.value(&x);
    let mut stationarity = f64::INFINITY;
    for iter in 1..=s.max_iters {
        let g = quad.gradient(&x);
        let probe = ineq.project(&(&x - &g * base_step))?;
        stationarity = (&probe - &x).norm() / base_step;
        if stationarity <= s.tol_feasibility {
            if let Some(polished) = polish_active_set(quad, ineq, &x, s.tol_feasibility) {
                let fp = quad.value(&polished);
                if fp <= f {
                    let g = quad.gradient(&polished);
                    let probe = ineq.project(&(&polished - &g * base_step))?;
                    let st = (&probe - &polished).norm() / base_step;
                    return Ok(QpSolution { x: polished, objective: fp, iterations: iter, stationarity: st, trace });
                }
            }
            return Ok(QpSolution { x, objective: f, iterations: iter, stationarity, trace });
        }
        let (next, f_next) = match s.step_rule {
            StepRule::Fixed => {
                let fv = quad.value(&probe);
                (probe, fv)
            }
            StepRule::Backtracking => {
                let mut t = base_step;
                let mut cand = probe;
                loop {
                    let fv = quad.value(&cand);
                    if fv <= f + s.armijo * g.dot(&(&cand - &x)) || t < 1e-20 {
                        break (cand, fv);
                    }
                    t *= 0.5;
                    cand = ineq.project(&(&x - &g * t))?;
                }
            }
        };
        let decrease = f - f_next;
        x = next;
        f = f_next;
        if s.trace {
            trace.push(TraceRow { iter, objective: f, feas_psd: 0.0, feas_tp: ineq.max_violation(&x) });
        }
        if decrease.abs() <= s.tol_objective {
            if let Some(polished) = polish_active_set(quad, ineq, &x, s.tol_feasibility) {
                let fp = quad.value(&polished);
                if fp <= f + s.tol_objective {
                    let g = quad.gradient(&polished);
                    let probe = ineq.project(&(&polished - &g * base_step))?;
                    let st = (&probe - &polished).norm() / base_step;
                    if st <= s.tol_feasibility {
                        return Ok(QpSolution { x: polished, objective: fp, iterations: iter, stationarity: st, trace });
                    }
                }
            }
        }
    }
    Err(Error::NonConvergence {
        iterations: s.max_iters,
        psd_residual: 0.0,
        tp_residual: ineq.max_violation(&x),
        stationarity,
    })
}

/// Solves the equality-constrained QP on the constraints active at `x` and
/// returns it when it satisfies the full KKT conditions.
fn polish_active_set(
    quad: &Quadratic,
    ineq: &LinearInequalitySet,
    x: &DVector<f64>,
    tol: f64,
) -> Option<DVector<f64>> {
    let n = x.len();
    let slack = ineq.bounds() - ineq.rows() * x;
    let active: Vec<usize> = (0..ineq.num_constraints()).filter(|&i| slack[i] <= 1e-7).collect();
    let k = active.len();
    if k > n {
        return None;
    }
    let ga = ineq.rows().select_rows(&active);
    let mut kkt = DMatrix::zeros(n + k, n + k);
    kkt.view_mut((0, 0), (n, n)).copy_from(&quad.a);
    kkt.view_mut((0, n), (n, k)).copy_from(&ga.transpose());
    kkt.view_mut((n, 0), (k, n)).copy_from(&ga);
    let mut rhs = DVector::zeros(n + k);
    rhs.rows_mut(0, n).copy_from(&(-&quad.b));
    rhs.rows_mut(n, k).copy_from(&ineq.bounds().select_rows(&active));
    let sol = kkt.lu().solve(&rhs)?;
    let xs = sol.rows(0, n).into_owned();
    let mu = sol.rows(n, k);
    let ok = mu.iter().all(|&m| m >= -tol) && ineq.max_violation(&xs) <= 1e-12 * (1.0 + xs.amax());
    ok.then_some(xs)
}

/// Nearest PSD matrix in Frobenius norm: clip negative eigenvalues to zero.
pub fn project_psd(h: &CMat) -> Result<CMat> {
    let res = linalg::hermitian_residual(h);
    if res > SYMMETRIZE_TOL {
        return Err(Error::NotHermitian(res));
    }
    let (vals, vecs) = linalg::eigh(h);
    if vals[0] >= 0.0 {
        return Ok(linalg::symmetrize(h));
    }
    let clipped = DVector::from_iterator(vals.len(), vals.iter().map(|&v| c(v.max(0.0), 0.0)));
    let out = &vecs * CMat::from_diagonal(&clipped) * vecs.adjoint();
    Ok(linalg::symmetrize(&out))
}

/// Orthogonal projection onto `{X : tr₂ X = I}`: `X - (1/d)(tr₂X - I) ⊗ I`.
pub fn project_tp(x: &CMat, d: usize) -> Result<CMat> {
    if x.nrows() != d * d || x.ncols() != d * d {
        return Err(Error::Dimension { expected: d * d, got: x.nrows() });
    }
    let excess = linalg::partial_trace_second(x, d) - linalg::identity(d);
    Ok(x - linalg::kron(&excess, &linalg::identity(d)).scale(1.0 / d as f64))
}

fn psd_residual(x: &CMat) -> f64 {
    (-linalg::min_eigenvalue(x)).max(0.0)
}

fn tp_residual(x: &CMat, d: usize) -> f64 {
    linalg::max_abs_diff(&linalg::partial_trace_second(x, d), &linalg::identity(d))
}

/// Per-sweep record of Dykstra's algorithm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepLog {
    pub sweep: usize,
    pub psd_residual: f64,
    pub tp_residual: f64,
    /// Frobenius change of the iterate over the sweep.
    pub step: f64,
}

/// Dykstra's alternating projections onto the CPTP Choi set, returning the
/// iterate together with the sweep log.
pub fn dykstra_cptp_logged(x0: &CMat, d: usize, s: &SolverSettings) -> Result<(ChoiMatrix, Vec<SweepLog>)> {
    s.validate()?;
    if x0.nrows() != d * d || x0.ncols() != d * d {
        return Err(Error::Dimension { expected: d * d, got: x0.nrows() });
    }
    let herm = linalg::hermitian_residual(x0);
    if herm > SYMMETRIZE_TOL {
        return Err(Error::NotHermitian(herm));
    }
    let mut x = linalg::symmetrize(x0);
    let mut p = CMat::zeros(d * d, d * d);
    let mut q = CMat::zeros(d * d, d * d);
    let mut log = Vec::new();
    let mut last = (f64::INFINITY, f64::INFINITY);
    for sweep in 1..=s.max_iters {
        let y = project_psd(&(&x + &p))?;
        p = &x + &p - &y;
        let next = project_tp(&(&y + &q), d)?;
        q = &y + &q - &next;
        let step = linalg::frobenius(&(&next - &x));
        x = next;
        let psd = psd_residual(&x);
        let tp = tp_residual(&x, d);
        last = (psd, tp);
        log.push(SweepLog { sweep, psd_residual: psd, tp_residual: tp, step });
        if psd <= s.tol_feasibility && tp <= s.tol_feasibility && step <= s.tol_feasibility {
            return Ok((ChoiMatrix::from_matrix_unchecked(x, d), log));
        }
    }
    Err(Error::NonConvergence {
        iterations: s.max_iters,
        psd_residual: last.0,
        tp_residual: last.1,
        stationarity: f64::NAN,
    })
}

/// Projection of a Hermitian matrix onto `{X ≥ 0, tr₂X = I}`.
pub fn dykstra_cptp(x0: &CMat, d: usize, s: &SolverSettings) -> Result<ChoiMatrix> {
    dykstra_cptp_logged(x0, d, s).map(|(x, _)| x)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChoiLsSolution {
    pub choi: ChoiMatrix,
    pub objective: f64,
    pub iterations: usize,
    pub stationarity: f64,
    pub trace: Vec<TraceRow>,
}

/// Residual sum of squares `Σₖ (p̂ₖ - tr(Cₖ X))²`.
pub fn choi_ls_objective(configs: &[CMat], freqs: &[f64], x: &CMat) -> f64 {
    configs
        .iter()
        .zip(freqs)
        .map(|(cm, &p)| {
            let r = p - linalg::trace_of_product(cm, x).re;
            r * r
        })
        .sum()
}

/// Least-squares fit of a CPTP Choi matrix to outcome frequencies by
/// projected gradient descent, projecting with [`dykstra_cptp`].
pub fn pgd_choi_ls(configs: &[CMat], freqs: &[f64], d: usize, s: &SolverSettings) -> Result<ChoiLsSolution> {
    s.validate()?;
    if configs.len() != freqs.len() {
        return Err(Error::Dimension { expected: configs.len(), got: freqs.len() });
    }
    if configs.is_empty() {
        return Err(Error::InsufficientData("no configuration matrices".into()));
    }
    for cm in configs {
        if cm.nrows() != d * d || cm.ncols() != d * d {
            return Err(Error::Dimension { expected: d * d, got: cm.nrows() });
        }
    }
    // The inner projection must be tighter than the outer stationarity test.
    let inner = SolverSettings {
        max_iters: 20_000,
        tol_feasibility: (s.tol_feasibility * 1e-3).max(1e-14),
        trace: false,
        ..s.clone()
    };
    let k = configs.len();
    let gram = DMatrix::from_fn(k, k, |i, j| linalg::inner(&configs[i], &configs[j]));
    let lip = 2.0 * power_iteration(|v| &gram * v, k, 1000);
    let step0 = if lip > RANK_EPS { 1.0 / lip } else { 1.0 };

    let gradient = |x: &CMat| -> CMat {
        let mut g = CMat::zeros(d * d, d * d);
        for (cm, &p) in configs.iter().zip(freqs) {
            let r = p - linalg::trace_of_product(cm, x).re;
            g -= cm.scale(2.0 * r);
        }
        g
    };

    let mut x = linalg::identity(d * d).scale(1.0 / d as f64);
    let mut f = choi_ls_objective(configs, freqs, &x);
    let mut trace = Vec::new();
    let mut stationarity = f64::INFINITY;
    for iter in 1..=s.max_iters {
        let g = gradient(&x);
        let gnorm = linalg::frobenius(&g);
        let probe = dykstra_cptp(&linalg::symmetrize(&(&x - g.scale(step0))), d, &inner)?.into_matrix();
        stationarity = linalg::frobenius(&(&probe - &x)) / step0;
        if stationarity <= s.tol_feasibility * (1.0 + gnorm) {
            break;
        }
        let (next, f_next) = match s.step_rule {
            StepRule::Fixed => {
                let fv = choi_ls_objective(configs, freqs, &probe);
                (probe, fv)
            }
            StepRule::Backtracking => {
                let mut t = step0;
                let mut cand = probe;
                loop {
                    let fv = choi_ls_objective(configs, freqs, &cand);
                    if fv <= f + s.armijo * linalg::inner(&g, &(&cand - &x)) || t < 1e-20 {
                        break (cand, fv);
                    }
                    t *= 0.5;
                    cand = dykstra_cptp(&linalg::symmetrize(&(&x - g.scale(t))), d, &inner)?.into_matrix();
                }
            }
        };
        let decrease = f - f_next;
        x = next;
        f = f_next;
        if s.trace {
            trace.push(TraceRow { iter, objective: f, feas_psd: psd_residual(&x), feas_tp: tp_residual(&x, d) });
        }
        if iter == s.max_iters {
            return Err(Error::NonConvergence {
                iterations: iter,
                psd_residual: psd_residual(&x),
                tp_residual: tp_residual(&x, d),
                stationarity,
            });
        }
        if decrease.abs() <= s.tol_objective * 1e-6 && stationarity <= s.tol_feasibility.sqrt() {
            // Objective flat and iterate nearly stationary: accept.
            break;
        }
    }
    Ok(ChoiLsSolution {
        choi: ChoiMatrix::from_matrix_unchecked(x, d),
        objective: f,
        iterations: trace.len().max(1),
        stationarity,
        trace,
    })
}
