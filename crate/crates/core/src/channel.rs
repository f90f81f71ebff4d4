//! Pauli and generalized Pauli channels, Choi matrices, CPTP checks and the
//! affine Choi decomposition used by the estimators.
//!
//! Channels act on arbitrary matrices by linear extension of their action on
//! states, which is what the Choi construction needs (it feeds matrix units
//! `|fᵢ⟩⟨fⱼ|`). For a generalized Pauli channel with subalgebra projections
//! `Eᵢ` the map is
//!
//! ```text
//! E(A) = (1 - Σλᵢ) tr(A)/d · I + Σ λᵢ Eᵢ(A)
//! ```
//!
//! and the qubit Pauli channel is the `d = 2`, `u = 3` instance of it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat};
use crate::qstate::{BlochVector, DensityMatrix, Mub};
use crate::solver::LinearInequalitySet;

/// Eigenvalue and partial-trace tolerance for Choi validation.
pub const CPTP_TOL: f64 = 1e-9;
const PARAM_TOL: f64 = 1e-12;

/// Pinching `Eᵢ(A) = Σₖ ⟨φᵢₖ|A|φᵢₖ⟩ |φᵢₖ⟩⟨φᵢₖ|` onto basis `i`.
pub fn cond_expectation(mub: &Mub, i: usize, a: &CMat) -> Result<CMat> {
    if i >= mub.num_bases() {
        return Err(Error::IndexOutOfRange { index: i, len: mub.num_bases() });
    }
    if a.nrows() != mub.dim() || a.ncols() != mub.dim() {
        return Err(Error::Dimension { expected: mub.dim(), got: a.nrows() });
    }
    Ok(pinch(mub, i, a))
}

fn pinch(mub: &Mub, i: usize, a: &CMat) -> CMat {
    let d = mub.dim();
    let mut out = CMat::zeros(d, d);
    for v in &mub.bases()[i] {
        let w = (v.adjoint() * a * v)[(0, 0)];
        out += (v * v.adjoint()).scale(1.0) * w;
    }
    out
}

/// Generalized Pauli channel over a complete MUB (`u = d + 1` bases).
#[derive(Clone, Debug, PartialEq)]
pub struct GenPauliChannel {
    mub: Mub,
    lambda: Vec<f64>,
}

impl GenPauliChannel {
    pub fn new(mub: Mub, lambda: Vec<f64>) -> Result<Self> {
        if mub.num_bases() != mub.dim() + 1 {
            return Err(Error::InvalidChannel(format!(
                "need {} bases for d = {}, got {}",
                mub.dim() + 1,
                mub.dim(),
                mub.num_bases()
            )));
        }
        if lambda.len() != mub.num_bases() {
            return Err(Error::Dimension { expected: mub.num_bases(), got: lambda.len() });
        }
        let verdict = cptp_check_gen(&lambda, mub.dim());
        if !verdict.valid {
            return Err(Error::InvalidChannel(verdict.violated.join("; ")));
        }
        Ok(GenPauliChannel { mub, lambda })
    }

    /// No CPTP check; for building Choi matrices of invalid parameter points.
    pub fn new_unchecked(mub: Mub, lambda: Vec<f64>) -> Self {
        GenPauliChannel { mub, lambda }
    }

    pub fn dim(&self) -> usize {
        self.mub.dim()
    }

    pub fn lambda(&self) -> &[f64] {
        &self.lambda
    }

    pub fn mub(&self) -> &Mub {
        &self.mub
    }

    /// Linear action on an arbitrary `d×d` matrix.
    pub fn apply_matrix(&self, a: &CMat) -> CMat {
        let d = self.dim();
        let sum: f64 = self.lambda.iter().sum();
        let mut out = linalg::identity(d) * (linalg::trace(a) * ((1.0 - sum) / d as f64));
        for (i, &l) in self.lambda.iter().enumerate() {
            if l != 0.0 {
                out += pinch(&self.mub, i, a).scale(l);
            }
        }
        out
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        gen_pauli_apply(self, rho)
    }

    pub fn choi(&self) -> ChoiMatrix {
        choi(|a| self.apply_matrix(a), self.dim())
    }
}

pub fn gen_pauli_apply(ch: &GenPauliChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dim() != ch.dim() {
        return Err(Error::Dimension { expected: ch.dim(), got: rho.dim() });
    }
    Ok(DensityMatrix::new_unchecked(linalg::symmetrize(&ch.apply_matrix(rho.matrix()))))
}

/// Qubit Pauli channel contracting Bloch direction `vᵢ` by `λᵢ`.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliChannel {
    lambda: [f64; 3],
    directions: Mub,
}

impl PauliChannel {
    pub fn new(lambda: [f64; 3], directions: Mub) -> Result<Self> {
        if directions.dim() != 2 || directions.num_bases() != 3 {
            return Err(Error::Dimension { expected: 2, got: directions.dim() });
        }
        let verdict = cptp_check_qubit(&lambda);
        if !verdict.valid {
            return Err(Error::InvalidChannel(verdict.violated.join("; ")));
        }
        Ok(PauliChannel { lambda, directions })
    }

    /// Channel directions along the Pauli axes.
    pub fn standard(lambda: [f64; 3]) -> Result<Self> {
        PauliChannel::new(lambda, Mub::standard(2)?)
    }

    pub fn with_bloch_directions(lambda: [f64; 3], dirs: &[BlochVector; 3]) -> Result<Self> {
        PauliChannel::new(lambda, Mub::from_bloch_directions(dirs)?)
    }

    pub fn lambda(&self) -> [f64; 3] {
        self.lambda
    }

    pub fn directions(&self) -> &Mub {
        &self.directions
    }

    /// Bloch vectors `vᵢ` of the channel directions.
    pub fn bloch_directions(&self) -> [BlochVector; 3] {
        let v = self.directions.bloch_directions().expect("qubit MUB");
        [v[0], v[1], v[2]]
    }

    pub fn as_gen(&self) -> GenPauliChannel {
        GenPauliChannel::new_unchecked(self.directions.clone(), self.lambda.to_vec())
    }

    pub fn apply_matrix(&self, a: &CMat) -> CMat {
        self.as_gen().apply_matrix(a)
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        pauli_apply(self, rho)
    }

    /// Action on Bloch vectors: `b ↦ Σ λᵢ (b·vᵢ) vᵢ`.
    pub fn apply_bloch(&self, b: &BlochVector) -> BlochVector {
        self.bloch_directions()
            .iter()
            .zip(self.lambda.iter())
            .fold(BlochVector::ZERO, |acc, (v, &l)| acc.add(&v.scale(l * b.dot(v))))
    }

    pub fn choi(&self) -> ChoiMatrix {
        choi(|a| self.apply_matrix(a), 2)
    }
}

pub fn pauli_apply(ch: &PauliChannel, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if rho.dim() != 2 {
        return Err(Error::Dimension { expected: 2, got: rho.dim() });
    }
    Ok(DensityMatrix::new_unchecked(linalg::symmetrize(&ch.apply_matrix(rho.matrix()))))
}

/// `k`-fold composition of a Pauli channel: same directions, `λᵢ^k`.
pub fn cascade(ch: &PauliChannel, k: u32) -> Result<PauliChannel> {
    if k == 0 {
        return Err(Error::InvalidChannel("cascade depth must be at least 1".into()));
    }
    let lambda = ch.lambda.map(|l| l.powi(k as i32));
    PauliChannel::new(lambda, ch.directions.clone())
}

/// Same as [`cascade`] for generalized Pauli channels.
pub fn cascade_gen(ch: &GenPauliChannel, k: u32) -> Result<GenPauliChannel> {
    if k == 0 {
        return Err(Error::InvalidChannel("cascade depth must be at least 1".into()));
    }
    GenPauliChannel::new(ch.mub.clone(), ch.lambda.iter().map(|l| l.powi(k as i32)).collect())
}

/// Choi matrix `X = Σᵢⱼ |fᵢ⟩⟨fⱼ| ⊗ E(|fᵢ⟩⟨fⱼ|)` in the computational basis.
#[derive(Clone, Debug, PartialEq)]
pub struct ChoiMatrix {
    dim: usize,
    mat: CMat,
}

impl ChoiMatrix {
    /// Wraps a `d²×d²` matrix after checking Hermiticity, positivity and the
    /// trace condition.
    pub fn new(mat: CMat, dim: usize) -> Result<Self> {
        let verdict = choi_validate(&mat)?;
        if verdict.dim != dim {
            return Err(Error::Dimension { expected: dim * dim, got: mat.nrows() });
        }
        if !verdict.is_cptp() {
            return Err(Error::InvalidChannel(format!(
                "not a CPTP Choi matrix (hermitian residual {:.2e}, min eigenvalue {:.2e}, tp residual {:.2e})",
                verdict.hermitian_residual, verdict.min_eigenvalue, verdict.tp_residual
            )));
        }
        Ok(ChoiMatrix { dim, mat })
    }

    pub fn from_matrix_unchecked(mat: CMat, dim: usize) -> Self {
        ChoiMatrix { dim, mat }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn validate(&self) -> ChoiVerdict {
        choi_validate(&self.mat).expect("square d² matrix")
    }

    /// `E(ρ)` read back from the Choi matrix: `Σᵢⱼ ρᵢⱼ X_(ij block)`.
    pub fn apply_matrix(&self, a: &CMat) -> CMat {
        let d = self.dim;
        let mut out = CMat::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                out += self.mat.view((i * d, j * d), (d, d)) * a[(i, j)];
            }
        }
        out
    }
}

/// Choi matrix of a linear map given by its action on `d×d` matrices.
pub fn choi<F: Fn(&CMat) -> CMat>(apply_fn: F, d: usize) -> ChoiMatrix {
    let mut mat = CMat::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let mut unit = CMat::zeros(d, d);
            unit[(i, j)] = c(1.0, 0.0);
            let block = apply_fn(&unit);
            mat.view_mut((i * d, j * d), (d, d)).copy_from(&block);
        }
    }
    ChoiMatrix { dim: d, mat }
}

/// Independent Hermiticity / positivity / trace-preservation verdicts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChoiVerdict {
    pub dim: usize,
    pub hermitian: bool,
    pub psd: bool,
    pub trace_preserving: bool,
    pub hermitian_residual: f64,
    pub min_eigenvalue: f64,
    pub tp_residual: f64,
}

impl ChoiVerdict {
    pub fn is_cptp(&self) -> bool {
        self.hermitian && self.psd && self.trace_preserving
    }
}

pub fn choi_validate(x: &CMat) -> Result<ChoiVerdict> {
    if !x.is_square() {
        return Err(Error::Dimension { expected: x.nrows(), got: x.ncols() });
    }
    let n = x.nrows();
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n || d == 0 {
        return Err(Error::Dimension { expected: d * d, got: n });
    }
    let hermitian_residual = linalg::hermitian_residual(x);
    let min_eigenvalue = linalg::min_eigenvalue(x);
    let tp_residual =
        linalg::max_abs_diff(&linalg::partial_trace_second(x, d), &linalg::identity(d));
    Ok(ChoiVerdict {
        dim: d,
        hermitian: hermitian_residual <= PARAM_TOL,
        psd: min_eigenvalue >= -CPTP_TOL,
        trace_preserving: tp_residual <= CPTP_TOL,
        hermitian_residual,
        min_eigenvalue,
        tp_residual,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CptpVerdict {
    pub valid: bool,
    pub violated: Vec<String>,
}

impl CptpVerdict {
    fn from_violations(violated: Vec<String>) -> Self {
        CptpVerdict { valid: violated.is_empty(), violated }
    }
}

/// `|1 ± λ₃| ≥ |λ₁ ± λ₂|` and `|λᵢ| ≤ 1`.
pub fn cptp_check_qubit(lambda: &[f64; 3]) -> CptpVerdict {
    let [l1, l2, l3] = *lambda;
    let mut violated = Vec::new();
    if (1.0 + l3).abs() + PARAM_TOL < (l1 + l2).abs() {
        violated.push(format!("|1+λ3| = {} < |λ1+λ2| = {}", (1.0 + l3).abs(), (l1 + l2).abs()));
    }
    if (1.0 - l3).abs() + PARAM_TOL < (l1 - l2).abs() {
        violated.push(format!("|1-λ3| = {} < |λ1-λ2| = {}", (1.0 - l3).abs(), (l1 - l2).abs()));
    }
    for (i, l) in lambda.iter().enumerate() {
        if l.abs() > 1.0 + PARAM_TOL || l.is_nan() {
            violated.push(format!("|λ{}| = {} > 1", i + 1, l.abs()));
        }
    }
    CptpVerdict::from_violations(violated)
}

/// `1 + dλᵢ ≥ Σⱼλⱼ ≥ -1/(d-1)` and `|λᵢ| ≤ 1`.
pub fn cptp_check_gen(lambda: &[f64], d: usize) -> CptpVerdict {
    let mut violated = Vec::new();
    if lambda.len() != d + 1 {
        violated.push(format!("expected {} parameters, got {}", d + 1, lambda.len()));
        return CptpVerdict::from_violations(violated);
    }
    let sum: f64 = lambda.iter().sum();
    for (i, l) in lambda.iter().enumerate() {
        if 1.0 + d as f64 * l + PARAM_TOL < sum {
            violated.push(format!("1 + {d}·λ{} = {} < Σλ = {sum}", i + 1, 1.0 + d as f64 * l));
        }
        if l.abs() > 1.0 + PARAM_TOL || l.is_nan() {
            violated.push(format!("|λ{}| = {} > 1", i + 1, l.abs()));
        }
    }
    let floor = -1.0 / (d as f64 - 1.0);
    if sum + PARAM_TOL < floor {
        violated.push(format!("Σλ = {sum} < {floor}"));
    }
    CptpVerdict::from_violations(violated)
}

/// Linear form `Gλ ≤ g` of the qubit CPTP conditions.
pub fn qubit_constraints() -> LinearInequalitySet {
    let mut rows = vec![
        vec![1.0, 1.0, -1.0],
        vec![-1.0, -1.0, -1.0],
        vec![1.0, -1.0, 1.0],
        vec![-1.0, 1.0, 1.0],
    ];
    let mut bounds = vec![1.0; 4];
    for i in 0..3 {
        for s in [1.0, -1.0] {
            let mut r = vec![0.0; 3];
            r[i] = s;
            rows.push(r);
            bounds.push(1.0);
        }
    }
    LinearInequalitySet::new(rows, bounds).expect("consistent shapes")
}

/// Linear form of the generalized Pauli CPTP conditions for dimension `d`.
pub fn gen_pauli_constraints(d: usize) -> LinearInequalitySet {
    let u = d + 1;
    let mut rows = Vec::new();
    let mut bounds = Vec::new();
    // Σλ - dλᵢ ≤ 1
    for i in 0..u {
        let mut r = vec![1.0; u];
        r[i] -= d as f64;
        rows.push(r);
        bounds.push(1.0);
    }
    // -Σλ ≤ 1/(d-1)
    rows.push(vec![-1.0; u]);
    bounds.push(1.0 / (d as f64 - 1.0));
    for i in 0..u {
        for s in [1.0, -1.0] {
            let mut r = vec![0.0; u];
            r[i] = s;
            rows.push(r);
            bounds.push(1.0);
        }
    }
    LinearInequalitySet::new(rows, bounds).expect("consistent shapes")
}

/// `X(h) = H₀ + Σₖ hₖ Hₖ`.
#[derive(Clone, Debug, PartialEq)]
pub struct AffineBasis {
    pub dim: usize,
    pub h0: CMat,
    pub hk: Vec<CMat>,
    pub param_names: Vec<String>,
}

impl AffineBasis {
    pub fn num_params(&self) -> usize {
        self.hk.len()
    }

    pub fn evaluate(&self, params: &[f64]) -> CMat {
        assert_eq!(params.len(), self.hk.len(), "parameter count");
        self.hk
            .iter()
            .zip(params)
            .fold(self.h0.clone(), |acc, (h, &p)| acc + h.scale(p))
    }

    pub fn choi(&self, params: &[f64]) -> ChoiMatrix {
        ChoiMatrix::from_matrix_unchecked(self.evaluate(params), self.dim)
    }

    /// Least-squares coordinates of `x - H₀` in the span of the `Hₖ`.
    pub fn implied_params(&self, x: &CMat) -> Vec<f64> {
        let m = self.hk.len();
        let diff = x - &self.h0;
        let gram = nalgebra::DMatrix::from_fn(m, m, |i, j| linalg::inner(&self.hk[i], &self.hk[j]));
        let rhs = nalgebra::DVector::from_fn(m, |i, _| linalg::inner(&self.hk[i], &diff));
        let sol = gram.lu().solve(&rhs).expect("linearly independent basis");
        sol.iter().copied().collect()
    }
}

/// Closed-form qubit decomposition: `H₀ = I/2`, `Hₖ = ½ σₖᵀ ⊗ σₖ`.
pub fn affine_basis_qubit() -> AffineBasis {
    let half = |rows: [[f64; 4]; 4]| {
        CMat::from_fn(4, 4, |i, j| c(0.5 * rows[i][j], 0.0))
    };
    AffineBasis {
        dim: 2,
        h0: half([[1., 0., 0., 0.], [0., 1., 0., 0.], [0., 0., 1., 0.], [0., 0., 0., 1.]]),
        hk: vec![
            half([[0., 0., 0., 1.], [0., 0., 1., 0.], [0., 1., 0., 0.], [1., 0., 0., 0.]]),
            half([[0., 0., 0., 1.], [0., 0., -1., 0.], [0., -1., 0., 0.], [1., 0., 0., 0.]]),
            half([[1., 0., 0., 0.], [0., -1., 0., 0.], [0., 0., -1., 0.], [0., 0., 0., 1.]]),
        ],
        param_names: vec!["lambda1".into(), "lambda2".into(), "lambda3".into()],
    }
}

/// Affine decomposition of the generalized Pauli family over `mub`:
/// `H₀ = X(0)`, `Hₖ = X(eₖ) - X(0)`.
pub fn affine_basis_from_mub(mub: &Mub) -> AffineBasis {
    let u = mub.num_bases();
    let at = |lambda: Vec<f64>| GenPauliChannel::new_unchecked(mub.clone(), lambda).choi().into_matrix();
    let h0 = at(vec![0.0; u]);
    let hk = (0..u)
        .map(|k| {
            let mut e = vec![0.0; u];
            e[k] = 1.0;
            at(e) - &h0
        })
        .collect();
    AffineBasis {
        dim: mub.dim(),
        h0,
        hk,
        param_names: (1..=u).map(|k| format!("lambda{k}")).collect(),
    }
}

/// Qutrit decomposition; parameters are `hᵢ = λᵢ` in the basis order of `mub`.
pub fn affine_basis_qutrit(mub: &Mub) -> Result<AffineBasis> {
    if mub.dim() != 3 || mub.num_bases() != 4 {
        return Err(Error::Dimension { expected: 3, got: mub.dim() });
    }
    Ok(affine_basis_from_mub(mub))
}

/// Closed-form 9×9 qutrit Choi matrix with
/// `f₁ = 1 + 2λ₂`, `f₂ = 1 - λ₂`, `f₃ = λ₁ + λ₃ + λ₄`,
/// `f₄ = λ₁ - (λ₃/2)(1 + i√3) - (λ₄/2)(1 - i√3)`.
pub fn qutrit_choi_template(lambda: &[f64; 4]) -> CMat {
    let [l1, l2, l3, l4] = *lambda;
    let s3 = 3f64.sqrt();
    let f1 = c(1.0 + 2.0 * l2, 0.0);
    let f2 = c(1.0 - l2, 0.0);
    let f3 = c(l1 + l3 + l4, 0.0);
    let f4 = c(l1, 0.0) - c(1.0, s3) * (l3 / 2.0) - c(1.0, -s3) * (l4 / 2.0);
    let g = f4.conj();
    let z = c(0.0, 0.0);
    #[rustfmt::skip]
    let entries = [
        f1, z,  z,  z,  f3, z,  z,  z,  f3,
        z,  f2, z,  z,  z,  f4, g,  z,  z,
        z,  z,  f2, g,  z,  z,  z,  f4, z,
        z,  z,  f4, f2, z,  z,  z,  g,  z,
        f3, z,  z,  z,  f1, z,  z,  z,  f3,
        z,  g,  z,  z,  z,  f2, f4, z,  z,
        z,  f4, z,  z,  z,  g,  f2, z,  z,
        z,  z,  g,  f4, z,  z,  z,  f2, z,
        f3, z,  z,  z,  f3, z,  z,  z,  f1,
    ];
    CMat::from_row_slice(9, 9, &entries).unscale(3.0)
}

/// Searches the orderings of the natural qutrit bases for the one whose
/// generalized Pauli Choi matrices reproduce [`qutrit_choi_template`] at
/// `λ = 0` and at every unit vector. Returns the matching order, if any.
pub fn fit_qutrit_basis_order() -> Option<[usize; 4]> {
    let natural = crate::qstate::natural_qutrit_bases();
    let mut probes = vec![[0.0; 4]];
    for k in 0..4 {
        let mut e = [0.0; 4];
        e[k] = 1.0;
        probes.push(e);
    }
    permutations4().into_iter().find(|perm| {
        let bases = perm.iter().map(|&i| natural[i].clone()).collect();
        let mub = Mub::new(3, bases).expect("natural qutrit bases are unbiased");
        probes.iter().all(|lambda| {
            let x = GenPauliChannel::new_unchecked(mub.clone(), lambda.to_vec()).choi();
            linalg::max_abs_diff(x.matrix(), &qutrit_choi_template(lambda)) < 1e-12
        })
    })
}

fn permutations4() -> Vec<[usize; 4]> {
    let mut out = Vec::new();
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    let mut seen = [false; 4];
                    p.iter().for_each(|&i| seen[i] = true);
                    if seen.iter().all(|&s| s) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}
