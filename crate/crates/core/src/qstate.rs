//! Finite-dimensional quantum states, mutually unbiased bases, POVMs and
//! simulated measurement records.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec};
use crate::rng::rng_from_seed;

pub const HERMITIAN_TOL: f64 = 1e-12;
pub const TRACE_TOL: f64 = 1e-12;
pub const PSD_TOL: f64 = 1e-10;
pub const BLOCH_NORM_TOL: f64 = 1e-12;
pub const POVM_TOL: f64 = 1e-10;
/// Probabilities outside `[0, 1]` by at most this much are clipped as roundoff.
pub const PROB_CLIP_TOL: f64 = 1e-10;

/// Qubit state coordinates `(θ₁, θ₂, θ₃)` in the Pauli basis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlochVector(pub [f64; 3]);

impl BlochVector {
    pub const ZERO: BlochVector = BlochVector([0.0; 3]);

    pub fn new(x: f64, y: f64, z: f64) -> Self {
        BlochVector([x, y, z])
    }

    pub fn unit(axis: usize) -> Self {
        let mut v = [0.0; 3];
        v[axis] = 1.0;
        BlochVector(v)
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn dot(&self, other: &BlochVector) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn cross(&self, o: &BlochVector) -> BlochVector {
        let [a1, a2, a3] = self.0;
        let [b1, b2, b3] = o.0;
        BlochVector([a2 * b3 - a3 * b2, a3 * b1 - a1 * b3, a1 * b2 - a2 * b1])
    }

    pub fn scale(&self, s: f64) -> BlochVector {
        BlochVector(self.0.map(|x| x * s))
    }

    pub fn add(&self, o: &BlochVector) -> BlochVector {
        BlochVector([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }

    pub fn sub(&self, o: &BlochVector) -> BlochVector {
        self.add(&o.scale(-1.0))
    }

    pub fn normalized(&self) -> Option<BlochVector> {
        let n = self.norm();
        (n > 0.0).then(|| self.scale(1.0 / n))
    }

    pub fn distance(&self, o: &BlochVector) -> f64 {
        self.sub(o).norm()
    }

    /// Angle between the lines spanned by two vectors, in `[0, π/2]`.
    pub fn axis_angle(&self, o: &BlochVector) -> f64 {
        let cos = (self.dot(o) / (self.norm() * o.norm())).abs().min(1.0);
        cos.acos()
    }
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    mat: CMat,
}

impl DensityMatrix {
    pub fn new(mat: CMat) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::InvalidState(format!(
                "{}x{} matrix is not square",
                mat.nrows(),
                mat.ncols()
            )));
        }
        let herm = linalg::hermitian_residual(&mat);
        if herm > HERMITIAN_TOL {
            return Err(Error::NotHermitian(herm));
        }
        let tr = linalg::trace(&mat);
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        let min_eig = linalg::min_eigenvalue(&mat);
        if min_eig < -PSD_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(DensityMatrix { mat })
    }

    pub(crate) fn new_unchecked(mat: CMat) -> Self {
        DensityMatrix { mat }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        DensityMatrix { mat: linalg::identity(d).scale(1.0 / d as f64) }
    }

    /// `|ψ⟩⟨ψ|` for a vector normalized on the way in.
    pub fn pure(psi: &CVec) -> Result<Self> {
        let n = psi.norm();
        if n == 0.0 {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        Ok(DensityMatrix { mat: linalg::projector(&psi.unscale(n)) })
    }

    pub fn from_bloch(theta: &BlochVector) -> Result<Self> {
        bloch_to_density(theta)
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn to_bloch(&self) -> Result<BlochVector> {
        density_to_bloch(self)
    }
}

/// `ρ = ½(I + Σ θᵢσᵢ)`.
pub fn bloch_to_density(theta: &BlochVector) -> Result<DensityMatrix> {
    let n = theta.norm();
    if n.is_nan() || n > 1.0 + BLOCH_NORM_TOL {
        return Err(Error::InvalidState(format!("Bloch vector norm {n} exceeds 1")));
    }
    Ok(DensityMatrix { mat: bloch_operator(1.0, theta) })
}

/// `½(a₀ I + Σ aᵢσᵢ)` for real coefficients; not validated.
pub fn bloch_operator(a0: f64, a: &BlochVector) -> CMat {
    let [x, y, z] = a.0;
    CMat::from_row_slice(
        2,
        2,
        &[c(0.5 * (a0 + z), 0.0), c(0.5 * x, -0.5 * y), c(0.5 * x, 0.5 * y), c(0.5 * (a0 - z), 0.0)],
    )
}

/// Pauli coordinates `θᵢ = tr(ρ σᵢ)` of a qubit state.
pub fn density_to_bloch(rho: &DensityMatrix) -> Result<BlochVector> {
    if rho.dim() != 2 {
        return Err(Error::Dimension { expected: 2, got: rho.dim() });
    }
    Ok(operator_to_bloch(rho.matrix()))
}

/// `tr(A σᵢ)` for any 2×2 matrix, real parts only.
pub fn operator_to_bloch(a: &CMat) -> BlochVector {
    BlochVector([1, 2, 3].map(|i| linalg::trace_of_product(a, &linalg::pauli(i)).re))
}

/// A complete set of `u` mutually unbiased orthonormal bases of `C^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mub {
    dim: usize,
    bases: Vec<Vec<CVec>>,
}

/// Basis order of the qutrit MUB relative to the natural construction
/// (computational basis followed by the three quadratic-phase bases
/// `(ω^{j m² + k m})_m / √3`, `j = 0, 1, 2`). Entry `i` is the natural index of
/// basis `i`. Frozen from [`crate::channel::fit_qutrit_basis_order`], so that channel parameter
/// `λᵢ` lines up with [`crate::channel::qutrit_choi_template`].
pub const QUTRIT_BASIS_ORDER: [usize; 4] = [1, 0, 3, 2];

impl Mub {
    pub fn new(dim: usize, bases: Vec<Vec<CVec>>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::UnsupportedDimension(dim));
        }
        for basis in &bases {
            if basis.len() != dim {
                return Err(Error::Dimension { expected: dim, got: basis.len() });
            }
            for v in basis {
                if v.len() != dim {
                    return Err(Error::Dimension { expected: dim, got: v.len() });
                }
            }
        }
        let mub = Mub { dim, bases };
        let (ortho, unbiased) = mub.residuals();
        if ortho > 1e-10 || unbiased > 1e-10 {
            return Err(Error::InvalidState(format!(
                "bases are not mutually unbiased (orthonormality {ortho:.2e}, overlap {unbiased:.2e})"
            )));
        }
        Ok(mub)
    }

    /// Pauli eigenbases for `d = 2`; the qutrit MUB in template order for `d = 3`.
    pub fn standard(d: usize) -> Result<Self> {
        match d {
            2 => Ok(Mub { dim: 2, bases: pauli_eigenbases() }),
            3 => {
                let natural = natural_qutrit_bases();
                let bases = QUTRIT_BASIS_ORDER.iter().map(|&i| natural[i].clone()).collect();
                Ok(Mub { dim: 3, bases })
            }
            _ => Err(Error::UnsupportedDimension(d)),
        }
    }

    /// Qubit MUB whose first vectors have the given Bloch vectors.
    ///
    /// Basis `i` is the eigenbasis of `vᵢ·σ`, `+1` eigenvector first.
    pub fn from_bloch_directions(dirs: &[BlochVector; 3]) -> Result<Self> {
        let mut bases = Vec::with_capacity(3);
        for v in dirs {
            let v = v
                .normalized()
                .ok_or_else(|| Error::InvalidState("zero channel direction".into()))?;
            let (_, vecs) = linalg::eigh(&bloch_operator(0.0, &v));
            bases.push(vec![vecs.column(1).into_owned(), vecs.column(0).into_owned()]);
        }
        Mub::new(2, bases)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_bases(&self) -> usize {
        self.bases.len()
    }

    pub fn bases(&self) -> &[Vec<CVec>] {
        &self.bases
    }

    pub fn vector(&self, i: usize, k: usize) -> &CVec {
        &self.bases[i][k]
    }

    pub fn projector(&self, i: usize, k: usize) -> CMat {
        linalg::projector(&self.bases[i][k])
    }

    /// Bloch vectors of the first vector in each basis (qubit only).
    pub fn bloch_directions(&self) -> Result<Vec<BlochVector>> {
        if self.dim != 2 {
            return Err(Error::Dimension { expected: 2, got: self.dim });
        }
        Ok((0..self.bases.len())
            .map(|i| operator_to_bloch(&self.projector(i, 0)))
            .collect())
    }

    /// Worst orthonormality and unbiasedness deviations.
    pub fn residuals(&self) -> (f64, f64) {
        let target = 1.0 / self.dim as f64;
        let mut ortho: f64 = 0.0;
        let mut unbiased: f64 = 0.0;
        for (i, bi) in self.bases.iter().enumerate() {
            for (j, bj) in self.bases.iter().enumerate() {
                for (k, u) in bi.iter().enumerate() {
                    for (l, v) in bj.iter().enumerate() {
                        let ov = u.dotc(v).norm_sqr();
                        if i == j {
                            let want = if k == l { 1.0 } else { 0.0 };
                            ortho = ortho.max((ov - want).abs());
                        } else {
                            unbiased = unbiased.max((ov - target).abs());
                        }
                    }
                }
            }
        }
        (ortho, unbiased)
    }
}

/// Free-function form of [`Mub::standard`].
pub fn standard_mub(d: usize) -> Result<Mub> {
    Mub::standard(d)
}

fn pauli_eigenbases() -> Vec<Vec<CVec>> {
    let h = FRAC_1_SQRT_2;
    vec![
        vec![CVec::from_vec(vec![c(h, 0.0), c(h, 0.0)]), CVec::from_vec(vec![c(h, 0.0), c(-h, 0.0)])],
        vec![CVec::from_vec(vec![c(h, 0.0), c(0.0, h)]), CVec::from_vec(vec![c(h, 0.0), c(0.0, -h)])],
        vec![CVec::from_vec(vec![c(1.0, 0.0), c(0.0, 0.0)]), CVec::from_vec(vec![c(0.0, 0.0), c(1.0, 0.0)])],
    ]
}

/// Computational basis plus the bases `(ω^{j m² + k m})_m / √3`, `j = 0, 1, 2`.
pub fn natural_qutrit_bases() -> Vec<Vec<CVec>> {
    let omega = |p: usize| {
        let a = 2.0 * PI * (p % 3) as f64 / 3.0;
        c(a.cos(), a.sin())
    };
    let s = 1.0 / 3f64.sqrt();
    let mut bases = vec![(0..3)
        .map(|k| CVec::from_fn(3, |m, _| if m == k { c(1.0, 0.0) } else { c(0.0, 0.0) }))
        .collect::<Vec<_>>()];
    for j in 0..3 {
        bases.push(
            (0..3)
                .map(|k| CVec::from_fn(3, |m, _| omega(j * m * m + k * m) * s))
                .collect(),
        );
    }
    bases
}

/// Positive operator-valued measure.
#[derive(Clone, Debug, PartialEq)]
pub struct Povm {
    dim: usize,
    elements: Vec<CMat>,
    labels: Vec<String>,
}

impl Povm {
    pub fn new(elements: Vec<CMat>, labels: Option<Vec<String>>) -> Result<Self> {
        let first = elements
            .first()
            .ok_or_else(|| Error::InvalidMeasurement("POVM has no elements".into()))?;
        let dim = first.nrows();
        let mut sum = CMat::zeros(dim, dim);
        for m in &elements {
            if m.nrows() != dim || m.ncols() != dim {
                return Err(Error::Dimension { expected: dim, got: m.nrows() });
            }
            let herm = linalg::hermitian_residual(m);
            if herm > POVM_TOL {
                return Err(Error::NotHermitian(herm));
            }
            let min_eig = linalg::min_eigenvalue(m);
            if min_eig < -POVM_TOL {
                return Err(Error::InvalidMeasurement(format!(
                    "element has negative eigenvalue {min_eig:.3e}"
                )));
            }
            sum += m;
        }
        let closure = linalg::max_abs_diff(&sum, &linalg::identity(dim));
        if closure > POVM_TOL {
            return Err(Error::InvalidMeasurement(format!(
                "elements sum to identity only within {closure:.3e}"
            )));
        }
        let labels = match labels {
            Some(l) if l.len() == elements.len() => l,
            Some(l) => {
                return Err(Error::Dimension { expected: elements.len(), got: l.len() });
            }
            None => (0..elements.len()).map(|i| i.to_string()).collect(),
        };
        Ok(Povm { dim, elements, labels })
    }

    /// Projective measurement along the unit Bloch vector `m`, outcomes `+` then `-`.
    pub fn projective(m: &BlochVector) -> Result<Self> {
        projective_povm(m)
    }

    /// Measurement in basis `i` of a MUB.
    pub fn basis(mub: &Mub, i: usize) -> Result<Self> {
        if i >= mub.num_bases() {
            return Err(Error::IndexOutOfRange { index: i, len: mub.num_bases() });
        }
        let elements = (0..mub.dim()).map(|k| mub.projector(i, k)).collect();
        let labels = (1..=mub.dim()).map(|k| k.to_string()).collect();
        Povm::new(elements, Some(labels))
    }

    /// Measurement in the orthonormal basis given by the columns of `u`.
    pub fn from_unitary(u: &CMat) -> Result<Self> {
        let elements = (0..u.ncols())
            .map(|k| linalg::projector(&u.column(k).into_owned()))
            .collect();
        Povm::new(elements, None)
    }

    /// Symmetric informationally complete qubit POVM `{¼(I + tₖ·σ)}` with
    /// tetrahedron vertices `tₖ`.
    pub fn tetrahedron() -> Self {
        let s = 1.0 / 3f64.sqrt();
        let verts = [
            BlochVector::new(s, s, s),
            BlochVector::new(s, -s, -s),
            BlochVector::new(-s, s, -s),
            BlochVector::new(-s, -s, s),
        ];
        let elements = verts.iter().map(|t| bloch_operator(0.5, &t.scale(0.5))).collect();
        Povm::new(elements, None).expect("tetrahedron POVM is valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[CMat] {
        &self.elements
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }
}

pub fn projective_povm(m: &BlochVector) -> Result<Povm> {
    if (m.norm() - 1.0).abs() > POVM_TOL {
        return Err(Error::InvalidMeasurement(format!(
            "measurement direction has norm {}",
            m.norm()
        )));
    }
    Povm::new(
        vec![bloch_operator(1.0, m), bloch_operator(1.0, &m.scale(-1.0))],
        Some(vec!["+".into(), "-".into()]),
    )
}

/// Born-rule probabilities `tr(ρ M_α)`.
pub fn outcome_probs(rho: &DensityMatrix, povm: &Povm) -> Result<Vec<f64>> {
    if rho.dim() != povm.dim() {
        return Err(Error::Dimension { expected: povm.dim(), got: rho.dim() });
    }
    let raw: Vec<f64> = povm
        .elements()
        .iter()
        .map(|m| linalg::trace_of_product(rho.matrix(), m).re)
        .collect();
    clip_probabilities(&raw)
}

/// Clips roundoff excursions out of `[0, 1]`; anything larger is an error.
pub fn clip_probabilities(raw: &[f64]) -> Result<Vec<f64>> {
    raw.iter()
        .map(|&p| {
            if !(-PROB_CLIP_TOL..=1.0 + PROB_CLIP_TOL).contains(&p) {
                Err(Error::InvalidState(format!("probability {p} outside [0, 1]")))
            } else {
                Ok(p.clamp(0.0, 1.0))
            }
        })
        .collect()
}

/// Outcome counts of one configuration.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecordEntry {
    pub counts: Vec<u64>,
    pub shots: u64,
}

impl RecordEntry {
    pub fn new(counts: Vec<u64>) -> Result<Self> {
        let shots = counts.iter().sum();
        if shots == 0 {
            return Err(Error::InsufficientData("configuration has zero shots".into()));
        }
        Ok(RecordEntry { counts, shots })
    }
}

/// Counts `c_{α,γ}` for every configuration `γ`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub entries: Vec<RecordEntry>,
}

impl MeasurementRecord {
    pub fn new(entries: Vec<RecordEntry>) -> Result<Self> {
        for e in &entries {
            let total: u64 = e.counts.iter().sum();
            if total != e.shots {
                return Err(Error::InsufficientData(format!(
                    "counts sum to {total} but shots = {}",
                    e.shots
                )));
            }
        }
        Ok(MeasurementRecord { entries })
    }

    pub fn total_shots(&self) -> u64 {
        self.entries.iter().map(|e| e.shots).sum()
    }
}

/// Multinomial draw of `n` shots.
///
/// Each shot maps one uniform variate through the cumulative distribution, so
/// for a fixed generator state the counts move monotonically with the
/// probabilities (common random numbers across parameter sweeps).
pub fn sample_counts<R: Rng + ?Sized>(probs: &[f64], n: u64, rng: &mut R) -> Result<RecordEntry> {
    if n == 0 {
        return Err(Error::InsufficientData("number of shots must be positive".into()));
    }
    let probs = clip_probabilities(probs)?;
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > POVM_TOL {
        return Err(Error::InvalidState(format!("probabilities sum to {total}")));
    }
    let mut cdf = Vec::with_capacity(probs.len());
    let mut acc = 0.0;
    for p in &probs {
        acc += p / total;
        cdf.push(acc);
    }
    let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1);
    let mut counts = vec![0u64; probs.len()];
    for _ in 0..n {
        let u: f64 = rng.random();
        let k = cdf[..last].iter().position(|&f| u < f).unwrap_or(last);
        counts[k] += 1;
    }
    Ok(RecordEntry { counts, shots: n })
}

/// [`sample_counts`] with a fresh generator seeded by `seed`.
pub fn sample_record(probs: &[f64], n: u64, seed: u64) -> Result<RecordEntry> {
    sample_counts(probs, n, &mut rng_from_seed(seed))
}

/// `C = ρᵀ ⊗ M`, so that `tr(C X_E) = tr(E(ρ) M)` for the Choi matrix `X_E`.
pub fn config_matrix(rho: &DensityMatrix, m: &CMat) -> Result<CMat> {
    if m.nrows() != rho.dim() || m.ncols() != rho.dim() {
        return Err(Error::Dimension { expected: rho.dim(), got: m.nrows() });
    }
    Ok(linalg::kron(&rho.matrix().transpose(), m))
}

/// Uniform point on the unit sphere.
pub fn random_unit_bloch<R: Rng + ?Sized>(rng: &mut R) -> BlochVector {
    loop {
        let v = BlochVector([0; 3].map(|_| rng.sample::<f64, _>(StandardNormal)));
        if let Some(u) = v.normalized() {
            return u;
        }
    }
}

/// Uniform point in the unit ball.
pub fn random_bloch<R: Rng + ?Sized>(rng: &mut R) -> BlochVector {
    let r: f64 = rng.random::<f64>().cbrt();
    random_unit_bloch(rng).scale(r)
}

/// Haar-random pure state vector in `C^d`.
pub fn random_pure_vector<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CVec {
    let v = CVec::from_fn(d, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let n = v.norm();
    v.unscale(n)
}

/// Random mixed state: normalized `G G†` with complex Gaussian `G`.
pub fn random_density<R: Rng + ?Sized>(d: usize, rng: &mut R) -> DensityMatrix {
    let g = CMat::from_fn(d, d, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    let m = &g * g.adjoint();
    let tr = linalg::trace(&m).re;
    DensityMatrix::new_unchecked(linalg::symmetrize(&m.unscale(tr)))
}

/// Haar-ish random unitary from the QR decomposition of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMat {
    let g = CMat::from_fn(d, d, |_, _| c(rng.sample(StandardNormal), rng.sample(StandardNormal)));
    g.qr().q()
}
