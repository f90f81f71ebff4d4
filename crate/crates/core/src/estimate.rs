//! Channel parameter estimation from measurement records and the iterative
//! search for the directions of an unknown qubit Pauli channel.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::channel::{AffineBasis, ChoiMatrix};
use crate::error::{Error, Result};
use crate::linalg::{self, CMat};
use crate::qstate::{config_matrix, random_unit_bloch, BlochVector, DensityMatrix, MeasurementRecord, Povm};
use crate::solver::{self, ChoiLsSolution, LinearInequalitySet, Quadratic, SolverSettings};

/// An input state, a POVM and the number of shots spent on the pair.
#[derive(Clone, Debug, PartialEq)]
pub struct TomographyConfiguration {
    pub input: DensityMatrix,
    pub povm: Povm,
    pub shots: u64,
}

impl TomographyConfiguration {
    pub fn new(input: DensityMatrix, povm: Povm, shots: u64) -> Result<Self> {
        if input.dim() != povm.dim() {
            return Err(Error::Dimension { expected: povm.dim(), got: input.dim() });
        }
        if shots == 0 {
            return Err(Error::InsufficientData("configuration needs at least one shot".into()));
        }
        Ok(TomographyConfiguration { input, povm, shots })
    }

    /// Qubit configuration: input state with Bloch vector `b`, projective
    /// measurement along unit vector `m`.
    pub fn qubit(b: &BlochVector, m: &BlochVector, shots: u64) -> Result<Self> {
        Self::new(DensityMatrix::from_bloch(b)?, Povm::projective(m)?, shots)
    }

    pub fn dim(&self) -> usize {
        self.input.dim()
    }

    /// `C_α = ρᵀ ⊗ M_α` for every outcome.
    pub fn config_matrices(&self) -> Vec<CMat> {
        self.povm
            .elements()
            .iter()
            .map(|m| config_matrix(&self.input, m).expect("dimensions checked at construction"))
            .collect()
    }

    /// Outcome probabilities `tr(C_α X)` under the channel with Choi matrix `x`.
    pub fn probabilities(&self, x: &ChoiMatrix) -> Result<Vec<f64>> {
        if x.dim() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: x.dim() });
        }
        let raw: Vec<f64> = self
            .config_matrices()
            .iter()
            .map(|cm| linalg::trace_of_product(cm, x.matrix()).re)
            .collect();
        crate::qstate::clip_probabilities(&raw)
    }
}

/// `p̂_{α,γ} = c_{α,γ} / n_γ`.
pub fn relative_freqs(record: &MeasurementRecord) -> Result<Vec<Vec<f64>>> {
    record
        .entries
        .iter()
        .map(|e| {
            if e.shots == 0 {
                return Err(Error::InsufficientData("configuration has zero shots".into()));
            }
            Ok(e.counts.iter().map(|&c| c as f64 / e.shots as f64).collect())
        })
        .collect()
}

/// Pairs every outcome's configuration matrix with its relative frequency.
fn flatten(configs: &[TomographyConfiguration], freqs: &[Vec<f64>]) -> Result<(Vec<CMat>, Vec<f64>)> {
    if configs.len() != freqs.len() {
        return Err(Error::Dimension { expected: configs.len(), got: freqs.len() });
    }
    let mut mats = Vec::new();
    let mut flat = Vec::new();
    for (cfg, f) in configs.iter().zip(freqs) {
        if f.len() != cfg.povm.len() {
            return Err(Error::Dimension { expected: cfg.povm.len(), got: f.len() });
        }
        mats.extend(cfg.config_matrices());
        flat.extend(f);
    }
    Ok((mats, flat))
}

/// Unrestricted least-squares Choi estimate over all CPTP maps.
pub fn estimate_choi(
    configs: &[TomographyConfiguration],
    record: &MeasurementRecord,
    s: &SolverSettings,
) -> Result<ChoiLsSolution> {
    estimate_choi_freqs(configs, &relative_freqs(record)?, s)
}

/// [`estimate_choi`] from outcome frequencies (or exact probabilities).
pub fn estimate_choi_freqs(configs: &[TomographyConfiguration], freqs: &[Vec<f64>], s: &SolverSettings) -> Result<ChoiLsSolution> {
    let d = configs.first().map(|c| c.dim()).ok_or_else(|| Error::InsufficientData("no configurations".into()))?;
    let (mats, flat) = flatten(configs, freqs)?;
    solver::pgd_choi_ls(&mats, &flat, d, s)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineEstimate {
    pub lambda: Vec<f64>,
    /// Residual sum of squares of the fitted probabilities.
    pub residual: f64,
    pub iterations: usize,
}

/// Least squares over the parameters of an affine Choi family
/// `H₀ + Σ λₖ Hₖ`, constrained by `ineq`.
pub fn estimate_affine(
    basis: &AffineBasis,
    ineq: &LinearInequalitySet,
    configs: &[TomographyConfiguration],
    record: &MeasurementRecord,
    s: &SolverSettings,
) -> Result<AffineEstimate> {
    estimate_affine_freqs(basis, ineq, configs, &relative_freqs(record)?, s)
}

/// [`estimate_affine`] from outcome frequencies (or exact probabilities).
pub fn estimate_affine_freqs(
    basis: &AffineBasis,
    ineq: &LinearInequalitySet,
    configs: &[TomographyConfiguration],
    freqs: &[Vec<f64>],
    s: &SolverSettings,
) -> Result<AffineEstimate> {
    if let Some(cfg) = configs.iter().find(|c| c.dim() != basis.dim) {
        return Err(Error::Dimension { expected: basis.dim, got: cfg.dim() });
    }
    if ineq.num_vars() != basis.num_params() {
        return Err(Error::Dimension { expected: basis.num_params(), got: ineq.num_vars() });
    }
    let (mats, flat) = flatten(configs, freqs)?;
    let m = basis.num_params();
    let a = DMatrix::from_fn(mats.len(), m, |r, k| linalg::trace_of_product(&mats[r], &basis.hk[k]).re);
    let r = DVector::from_fn(mats.len(), |i, _| flat[i] - linalg::trace_of_product(&mats[i], &basis.h0).re);
    let quad = Quadratic::new((a.transpose() * &a) * 2.0, -(a.transpose() * &r) * 2.0)?;
    let sol = solver::pgd_ls(&quad, ineq, s)?;
    let residual = (&a * &sol.x - &r).norm_squared();
    Ok(AffineEstimate { lambda: sol.x.iter().copied().collect(), residual, iterations: sol.iterations })
}

/// `λ̂ = p̂₊ - p̂₋` for the three optimal qubit configurations.
pub fn estimate_optimal_closed_form(p_plus: &[f64; 3], p_minus: &[f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| p_plus[i] - p_minus[i])
}

/// Surrogate for qubit state tomography with `n` measurements: component
/// `θᵢ` becomes `θᵢ + ξᵢ √((1 - θᵢ)/n)`, then the result is pulled back into
/// the unit ball.
pub fn simulate_state_tomography<R: Rng + ?Sized>(b: &BlochVector, n: u64, rng: &mut R) -> BlochVector {
    let nf = n.max(1) as f64;
    let out = BlochVector(b.0.map(|t| {
        let xi: f64 = rng.sample(StandardNormal);
        t + xi * ((1.0 - t).max(0.0) / nf).sqrt()
    }));
    let norm = out.norm();
    if norm > 1.0 {
        out.scale(1.0 / norm)
    } else {
        out
    }
}

/// Normalizes `b`, projects it onto the orthogonal complement of `dirs` and
/// normalizes again.
pub fn normalize_project(b: &BlochVector, dirs: &[BlochVector]) -> Result<BlochVector> {
    let mut v = b.normalized().ok_or(Error::DegenerateIterate)?;
    for d in dirs {
        v = v.sub(&d.scale(v.dot(d)));
    }
    match v.normalized() {
        Some(u) if v.norm() > 1e-12 => Ok(u),
        _ => Err(Error::DegenerateIterate),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "mode")]
pub enum TomographyMode {
    /// Channel outputs are observed exactly; `tol` replaces the noise-derived
    /// stopping threshold.
    Exact { tol: f64 },
    /// Outputs are perturbed as by tomography with `shots` measurements.
    Noisy { shots: u64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DirectionSettings {
    pub mode: TomographyMode,
    /// Number of channel uses cascaded per step.
    pub cascade: u32,
    pub tau_scale: f64,
    pub max_steps: usize,
    pub max_restarts: usize,
}

impl Default for DirectionSettings {
    fn default() -> Self {
        DirectionSettings {
            mode: TomographyMode::Noisy { shots: 5000 },
            cascade: 1,
            tau_scale: 2.0,
            max_steps: 50,
            max_restarts: 5,
        }
    }
}

impl DirectionSettings {
    pub fn exact() -> Self {
        DirectionSettings { mode: TomographyMode::Exact { tol: 1e-10 }, ..Default::default() }
    }

    /// Stopping threshold: `τ_scale · √(3/N)` in noisy mode.
    pub fn threshold(&self) -> f64 {
        match self.mode {
            TomographyMode::Exact { tol } => tol,
            TomographyMode::Noisy { shots } => self.tau_scale * (3.0 / shots.max(1) as f64).sqrt(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.cascade == 0 || self.max_steps == 0 {
            return Err(Error::InvalidSpec("cascade depth and max_steps must be positive".into()));
        }
        if let TomographyMode::Noisy { shots: 0 } = self.mode {
            return Err(Error::InvalidSpec("tomography needs at least one shot".into()));
        }
        Ok(())
    }
}

/// Result of a direction search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DirectionEstimate {
    /// Orthonormal directions in the order found.
    pub directions: Vec<BlochVector>,
    /// Normalized inputs `b̃⁽⁰⁾, b̃⁽¹⁾, …` of the accepted search for each
    /// searched direction.
    pub iterates: Vec<Vec<BlochVector>>,
    /// `(‖b_out‖/‖b_in‖)^(1/k)` at the last step of each search: a rough `|λ|`.
    pub lambda_first_pass: Vec<f64>,
    pub restarts: usize,
}

enum SearchOutcome {
    Found(Vec<BlochVector>, f64),
    Restart(Vec<BlochVector>),
}

fn search_one<R: Rng + ?Sized>(
    oracle: &dyn Fn(&BlochVector) -> BlochVector,
    found: &[BlochVector],
    st: &DirectionSettings,
    rng: &mut R,
) -> SearchOutcome {
    let start = loop {
        if let Ok(b) = normalize_project(&random_unit_bloch(rng), found) {
            break b;
        }
    };
    let tau = st.threshold();
    let mut b = start;
    let mut log = vec![b];
    for _ in 0..st.max_steps {
        let mut out = b;
        for _ in 0..st.cascade {
            out = oracle(&out);
        }
        let observed = match st.mode {
            TomographyMode::Exact { .. } => out,
            TomographyMode::Noisy { shots } => simulate_state_tomography(&out, shots, rng),
        };
        let rate = observed.norm().powf(1.0 / st.cascade as f64);
        let mut next = match normalize_project(&observed, found) {
            Ok(v) => v,
            Err(_) => return SearchOutcome::Restart(log),
        };
        // A negative parameter flips the output; keep the iterate on one side.
        if next.dot(&b) < 0.0 {
            next = next.scale(-1.0);
        }
        log.push(next);
        if next.distance(&b) <= tau {
            return SearchOutcome::Found(log, rate);
        }
        b = next;
    }
    SearchOutcome::Restart(log)
}

/// Flips `v` so that its first non-negligible component is positive.
pub fn canonical_sign(v: &BlochVector) -> BlochVector {
    match v.0.iter().find(|x| x.abs() > 1e-12) {
        Some(&x) if x < 0.0 => v.scale(-1.0),
        _ => *v,
    }
}

/// Iterative direction search for a qubit Pauli channel seen only through
/// `oracle` (one channel use per call, Bloch vector in and out).
///
/// Each search feeds a normalized state through `k` cascaded channel uses,
/// observes the output through (simulated) tomography, normalizes it and
/// projects it away from the directions already found, until consecutive
/// inputs are within the stopping threshold. The third direction is the cross
/// product of the first two.
pub fn estimate_directions<R: Rng + ?Sized>(
    oracle: &dyn Fn(&BlochVector) -> BlochVector,
    st: &DirectionSettings,
    rng: &mut R,
) -> Result<DirectionEstimate> {
    st.validate()?;
    let mut est = DirectionEstimate { directions: Vec::new(), iterates: Vec::new(), lambda_first_pass: Vec::new(), restarts: 0 };
    for _ in 0..2 {
        let mut attempts = 0;
        loop {
            match search_one(oracle, &est.directions, st, rng) {
                SearchOutcome::Found(log, rate) => {
                    est.directions.push(*log.last().expect("non-empty log"));
                    est.iterates.push(log);
                    est.lambda_first_pass.push(rate);
                    break;
                }
                SearchOutcome::Restart(log) => {
                    attempts += 1;
                    if attempts > st.max_restarts {
                        est.iterates.push(log);
                        est.restarts += attempts - 1;
                        return Err(Error::DirectionSearch {
                            steps: st.max_steps,
                            restarts: st.max_restarts,
                            partial: Box::new(est),
                        });
                    }
                }
            }
        }
        est.restarts += attempts;
    }
    let third = est.directions[0].cross(&est.directions[1]);
    est.directions.push(third.normalized().ok_or(Error::DegenerateIterate)?);
    est.directions = est.directions.iter().map(canonical_sign).collect();
    Ok(est)
}
