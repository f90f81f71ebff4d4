//! Fisher information of channel parameters and the search for
//! informative tomography configurations.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{affine_basis_from_mub, AffineBasis, GenPauliChannel};
use crate::error::{Error, Result};
use crate::estimate::TomographyConfiguration;
use crate::linalg::{self, c, CMat, CVec};
use crate::qstate::{BlochVector, DensityMatrix, Mub, Povm};

/// Outcomes whose model probability is below this carry no information.
pub const PROB_FLOOR: f64 = 1e-12;
/// Derivative magnitude treated as zero on a zero-probability outcome.
const DERIV_FLOOR: f64 = 1e-9;

/// Fisher information matrix over the parameters of an affine family.
#[derive(Clone, Debug, PartialEq)]
pub struct FisherMatrix {
    pub entries: DMatrix<f64>,
    /// Number of configurations summed into `entries`.
    pub configs_used: usize,
}

impl FisherMatrix {
    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries.row_iter().map(|r| r.iter().copied().collect()).collect()
    }
}

/// Adds the contribution of one outcome; `g` holds `tr(C Hᵢ)`.
fn accumulate(f: &mut DMatrix<f64>, p: f64, g: &[f64]) -> Result<()> {
    if p < PROB_FLOOR {
        if g.iter().all(|x| x.abs() <= DERIV_FLOOR) {
            return Ok(());
        }
        return Err(Error::SingularConfiguration(format!(
            "outcome with probability {p:.3e} has non-zero parameter derivative"
        )));
    }
    for i in 0..g.len() {
        for j in 0..g.len() {
            f[(i, j)] += g[i] * g[j] / p;
        }
    }
    Ok(())
}

fn check_lambda(basis: &AffineBasis, lambda: &[f64]) -> Result<()> {
    if lambda.len() != basis.num_params() {
        return Err(Error::Dimension { expected: basis.num_params(), got: lambda.len() });
    }
    Ok(())
}

/// `F_ij = Σ_α tr(C_α Hᵢ) tr(C_α Hⱼ) / tr(C_α X_λ)` over the given outcome
/// configuration matrices.
pub fn fisher_matrix_from_matrices(basis: &AffineBasis, lambda: &[f64], mats: &[CMat]) -> Result<DMatrix<f64>> {
    check_lambda(basis, lambda)?;
    let x = basis.evaluate(lambda);
    let m = basis.num_params();
    let mut f = DMatrix::zeros(m, m);
    let mut g = vec![0.0; m];
    for cm in mats {
        if cm.nrows() != x.nrows() {
            return Err(Error::Dimension { expected: x.nrows(), got: cm.nrows() });
        }
        let p = linalg::trace_of_product(cm, &x).re;
        for (gk, h) in g.iter_mut().zip(&basis.hk) {
            *gk = linalg::trace_of_product(cm, h).re;
        }
        accumulate(&mut f, p, &g)?;
    }
    Ok(f)
}

fn outcome_matrices(configs: &[TomographyConfiguration]) -> Vec<CMat> {
    configs.iter().flat_map(|c| c.config_matrices()).collect()
}

pub fn fisher_matrix(basis: &AffineBasis, lambda: &[f64], configs: &[TomographyConfiguration]) -> Result<FisherMatrix> {
    let entries = fisher_matrix_from_matrices(basis, lambda, &outcome_matrices(configs))?;
    Ok(FisherMatrix { entries, configs_used: configs.len() })
}

/// `F̃ = tr F`.
pub fn fisher_trace(basis: &AffineBasis, lambda: &[f64], configs: &[TomographyConfiguration]) -> Result<f64> {
    fisher_matrix(basis, lambda, configs).map(|f| f.trace())
}

/// [`fisher_trace`] on raw outcome configuration matrices.
pub fn fisher_trace_from_matrices(basis: &AffineBasis, lambda: &[f64], mats: &[CMat]) -> Result<f64> {
    fisher_matrix_from_matrices(basis, lambda, mats).map(|f| f.trace())
}

/// `cᵢ = mᵢ bᵢ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConfigVector(pub [f64; 3]);

impl ConfigVector {
    pub fn new(b: &BlochVector, m: &BlochVector) -> Self {
        ConfigVector([0, 1, 2].map(|i| b.0[i] * m.0[i]))
    }

    pub fn l1_norm(&self) -> f64 {
        self.0.iter().map(|x| x.abs()).sum()
    }
}

/// Qubit Pauli channel in the standard directions, input Bloch vector `b`,
/// projective measurement along `m`:
/// `F̃ = Σ cᵢ² / (1 - (Σ cᵢλᵢ)²)` with `c = m ∘ b`.
pub fn fisher_qubit(b: &BlochVector, m: &BlochVector, lambda: &[f64; 3]) -> Result<f64> {
    let cv = ConfigVector::new(b, m).0;
    let num = cv[0] * cv[0] + cv[1] * cv[1] + cv[2] * cv[2];
    let s = cv[0] * lambda[0] + cv[1] * lambda[1] + cv[2] * lambda[2];
    let den = 1.0 - s * s;
    if den <= 1e-12 {
        if num == 0.0 {
            return Ok(0.0);
        }
        return Err(Error::SingularConfiguration(format!("deterministic outcome (1 - (c·λ)² = {den:.3e})")));
    }
    Ok(num / den)
}

/// Ordering of parameter indices by descending `|λᵢ|`, ties by index.
pub fn optimal_order(lambda: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..lambda.len()).collect();
    idx.sort_by(|&a, &b| lambda[b].abs().total_cmp(&lambda[a].abs()).then(a.cmp(&b)));
    idx
}

/// The three optimal qubit configurations: input `φᵢ₁` and measurement in
/// basis `i`, ordered by descending `|λᵢ|`.
pub fn optimal_configs_qubit(directions: &Mub, lambda: &[f64; 3], shots: u64) -> Result<Vec<TomographyConfiguration>> {
    if directions.dim() != 2 || directions.num_bases() != 3 {
        return Err(Error::Dimension { expected: 2, got: directions.dim() });
    }
    optimal_order(lambda)
        .into_iter()
        .map(|i| {
            let rho = DensityMatrix::pure(directions.vector(i, 0))?;
            TomographyConfiguration::new(rho, Povm::basis(directions, i)?, shots)
        })
        .collect()
}

/// A configuration found by [`search_optimal_configs`].
#[derive(Clone, Debug, PartialEq)]
pub struct FoundConfig {
    pub input: CVec,
    /// Columns are the measurement basis.
    pub basis: CMat,
    pub objective: f64,
    /// Index of the MUB basis for aligned baselines.
    pub aligned_with: Option<usize>,
}

impl FoundConfig {
    pub fn to_configuration(&self, shots: u64) -> Result<TomographyConfiguration> {
        TomographyConfiguration::new(DensityMatrix::pure(&self.input)?, Povm::from_unitary(&self.basis)?, shots)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DesignSearch {
    /// Best aligned configuration for each MUB basis.
    pub baselines: Vec<FoundConfig>,
    /// Best configuration of each restart.
    pub restarts: Vec<FoundConfig>,
    /// Whether an aligned baseline reaches the best objective found (to 1e-6).
    pub aligned_attains_max: bool,
}

impl DesignSearch {
    pub fn best(&self) -> &FoundConfig {
        self.baselines
            .iter()
            .chain(&self.restarts)
            .max_by(|a, b| a.objective.total_cmp(&b.objective))
            .expect("at least one baseline")
    }
}

/// Fisher trace of a pure input `ψ` measured in the orthonormal basis given by
/// the columns of `u`.
pub fn config_objective(basis: &AffineBasis, lambda: &[f64], psi: &CVec, u: &CMat) -> Result<f64> {
    let rho_t = (psi * psi.adjoint()).transpose();
    let mats: Vec<CMat> = (0..u.ncols())
        .map(|k| {
            let col = u.column(k).into_owned();
            linalg::kron(&rho_t, &linalg::projector(&col))
        })
        .collect();
    fisher_trace_from_matrices(basis, lambda, &mats)
}

/// Pure state from `2d - 2` angles: `d - 1` hyperspherical amplitudes followed
/// by `d - 1` relative phases.
fn state_from_angles(d: usize, a: &[f64]) -> CVec {
    let mut amps = vec![0.0; d];
    let mut rem = 1.0;
    for k in 0..d - 1 {
        amps[k] = rem * a[k].cos();
        rem *= a[k].sin();
    }
    amps[d - 1] = rem;
    CVec::from_fn(d, |k, _| {
        let phase = if k == 0 { 0.0 } else { a[d - 1 + k - 1] };
        c(amps[k] * phase.cos(), amps[k] * phase.sin())
    })
}

/// `exp(iH)` for the Hermitian `H` with `d²` real coordinates.
fn unitary_from_params(d: usize, p: &[f64]) -> CMat {
    let mut h = CMat::zeros(d, d);
    let mut k = 0;
    for i in 0..d {
        h[(i, i)] = c(p[k], 0.0);
        k += 1;
    }
    for i in 0..d {
        for j in i + 1..d {
            h[(i, j)] = c(p[k], p[k + 1]);
            h[(j, i)] = c(p[k], -p[k + 1]);
            k += 2;
        }
    }
    let (vals, vecs) = linalg::eigh(&h);
    let phases = nalgebra::DVector::from_iterator(d, vals.iter().map(|&v| c(v.cos(), v.sin())));
    &vecs * CMat::from_diagonal(&phases) * vecs.adjoint()
}

/// Golden-section maximization of `f` on `[lo, hi]`.
fn golden_max<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - r * (hi - lo);
    let mut x2 = lo + r * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..iters {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + r * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - r * (hi - lo);
            f1 = f(x1);
        }
    }
    if f1 > f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Coordinate sweeps per restart.
pub const SEARCH_SWEEPS: usize = 200;

/// Random-restart coordinate ascent of the Fisher trace over pure inputs and
/// projective measurements. `restarts = 0` evaluates only the MUB-aligned
/// baselines (input in basis `i`, measurement in basis `i`).
pub fn search_optimal_configs<R: Rng + ?Sized>(channel: &GenPauliChannel, restarts: usize, rng: &mut R) -> Result<DesignSearch> {
    let d = channel.dim();
    let basis = affine_basis_from_mub(channel.mub());
    let lambda = channel.lambda();
    let mut baselines = Vec::new();
    for i in 0..channel.mub().num_bases() {
        let u = CMat::from_fn(d, d, |r, k| channel.mub().vector(i, k)[r]);
        let mut best: Option<FoundConfig> = None;
        for k in 0..d {
            let psi = channel.mub().vector(i, k).clone();
            let obj = config_objective(&basis, lambda, &psi, &u)?;
            if best.as_ref().is_none_or(|b| obj > b.objective) {
                best = Some(FoundConfig { input: psi, basis: u.clone(), objective: obj, aligned_with: Some(i) });
            }
        }
        baselines.push(best.expect("d ≥ 1"));
    }

    let n_state = 2 * d - 2;
    let n_coords = n_state + d * d;
    let eval = |x: &[f64]| -> f64 {
        let psi = state_from_angles(d, &x[..n_state]);
        let u = unitary_from_params(d, &x[n_state..]);
        // Singular configurations are boundary points; treat them as unattractive.
        config_objective(&basis, lambda, &psi, &u).unwrap_or(f64::NEG_INFINITY)
    };
    let mut found = Vec::with_capacity(restarts);
    for _ in 0..restarts {
        let mut x: Vec<f64> = (0..n_coords).map(|_| rng.random_range(-std::f64::consts::PI..std::f64::consts::PI)).collect();
        let mut fx = eval(&x);
        let mut width = std::f64::consts::FRAC_PI_2;
        for _ in 0..SEARCH_SWEEPS {
            let before = fx;
            for k in 0..n_coords {
                let centre = x[k];
                let mut trial = x.clone();
                let (arg, val) = golden_max(
                    |t| {
                        trial[k] = t;
                        eval(&trial)
                    },
                    centre - width,
                    centre + width,
                    40,
                );
                if val > fx {
                    x[k] = arg;
                    fx = val;
                }
            }
            if fx - before <= 1e-13 * fx.abs().max(1.0) {
                if width < 1e-3 {
                    break;
                }
                width *= 0.5;
            }
        }
        found.push(FoundConfig {
            input: state_from_angles(d, &x[..n_state]),
            basis: unitary_from_params(d, &x[n_state..]),
            objective: fx,
            aligned_with: None,
        });
    }
    let best_aligned = baselines.iter().map(|b| b.objective).fold(f64::NEG_INFINITY, f64::max);
    let best_found = found.iter().map(|b| b.objective).fold(f64::NEG_INFINITY, f64::max);
    Ok(DesignSearch { aligned_attains_max: best_aligned >= best_found - 1e-6, baselines, restarts: found })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{affine_basis_qubit, affine_basis_qutrit, PauliChannel};
    use crate::qstate::{random_bloch, random_pure_vector, random_unit_bloch, random_unitary, standard_mub};
    use crate::rng::rng_from_seed;
    use proptest::prelude::*;

    const LAMBDA: [f64; 3] = [0.3, -0.1, 0.1];

    fn qubit_config(b: &BlochVector, m: &BlochVector) -> TomographyConfiguration {
        TomographyConfiguration::qubit(b, m, 1).unwrap()
    }

    /// Central-difference Fisher matrix from outcome probabilities.
    fn finite_difference_fisher(basis: &AffineBasis, lambda: &[f64], mats: &[CMat]) -> DMatrix<f64> {
        let h = 1e-5;
        let m = lambda.len();
        let prob = |l: &[f64], cm: &CMat| linalg::trace_of_product(cm, &basis.evaluate(l)).re;
        let mut f = DMatrix::zeros(m, m);
        for cm in mats {
            let p = prob(lambda, cm);
            let grad: Vec<f64> = (0..m)
                .map(|i| {
                    let mut up = lambda.to_vec();
                    let mut dn = lambda.to_vec();
                    up[i] += h;
                    dn[i] -= h;
                    (prob(&up, cm) - prob(&dn, cm)) / (2.0 * h)
                })
                .collect();
            for i in 0..m {
                for j in 0..m {
                    f[(i, j)] += grad[i] * grad[j] / p;
                }
            }
        }
        f
    }

    #[test]
    fn single_optimal_config() {
        let basis = affine_basis_qubit();
        let cfg = qubit_config(&BlochVector::unit(0), &BlochVector::unit(0));
        let f = fisher_matrix(&basis, &LAMBDA, std::slice::from_ref(&cfg)).unwrap();
        let mut expected = DMatrix::zeros(3, 3);
        expected[(0, 0)] = 1.0 / 0.91;
        assert!((&f.entries - expected).amax() < 1e-12);
        assert!((fisher_trace(&basis, &LAMBDA, &[cfg]).unwrap() - 1.0 / 0.91).abs() < 1e-12);
    }

    #[test]
    fn three_optimal_configs_are_diagonal() {
        let basis = affine_basis_qubit();
        let configs = optimal_configs_qubit(&standard_mub(2).unwrap(), &LAMBDA, 1).unwrap();
        let f = fisher_matrix(&basis, &LAMBDA, &configs).unwrap();
        let fd = finite_difference_fisher(&basis, &LAMBDA, &outcome_matrices(&configs));
        assert!((&f.entries - &fd).amax() < 1e-6);
        for i in 0..3 {
            assert!((f.entries[(i, i)] - 1.0 / (1.0 - LAMBDA[i] * LAMBDA[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn mixed_input_carries_no_information() {
        let basis = affine_basis_qubit();
        let cfg = qubit_config(&BlochVector::ZERO, &BlochVector::unit(2));
        assert_eq!(fisher_trace(&basis, &LAMBDA, &[cfg]).unwrap(), 0.0);
        assert_eq!(fisher_qubit(&BlochVector::ZERO, &BlochVector::unit(2), &LAMBDA).unwrap(), 0.0);
    }

    #[test]
    fn fisher_qubit_examples() {
        let x = BlochVector::unit(0);
        assert!((fisher_qubit(&x, &x, &LAMBDA).unwrap() - 1.0 / 0.91).abs() < 1e-12);
        let s = 1.0 / 3f64.sqrt();
        let diag = BlochVector::new(s, s, s);
        let v = fisher_qubit(&diag, &diag, &LAMBDA).unwrap();
        assert!((v - (1.0 / 3.0) / 0.99).abs() < 1e-12);
        let t = fisher_trace(&affine_basis_qubit(), &LAMBDA, &[qubit_config(&diag, &diag)]).unwrap();
        assert!((v - t).abs() < 1e-10);
        assert!(matches!(fisher_qubit(&x, &x, &[1.0, 0.0, 0.0]), Err(Error::SingularConfiguration(_))));
    }

    #[test]
    fn zero_probability_outcome_is_singular() {
        // Identity channel, pure input along x: the "-" outcome never occurs
        // but its probability depends on λ₁.
        let basis = affine_basis_qubit();
        let cfg = qubit_config(&BlochVector::unit(0), &BlochVector::unit(0));
        assert!(matches!(fisher_trace(&basis, &[1.0, 1.0, 1.0], &[cfg]), Err(Error::SingularConfiguration(_))));
    }

    #[test]
    fn optimal_ordering() {
        let mub = standard_mub(2).unwrap();
        assert_eq!(optimal_order(&LAMBDA), vec![0, 1, 2]);
        assert_eq!(optimal_order(&[0.1, 0.6, 0.3]), vec![1, 2, 0]);
        let configs = optimal_configs_qubit(&mub, &[0.1, 0.6, 0.3], 10).unwrap();
        let b0 = configs[0].input.to_bloch().unwrap();
        assert!(b0.distance(&BlochVector::unit(1)) < 1e-12);
        let basis = affine_basis_qubit();
        for (cfg, i) in configs.iter().zip([1, 2, 0]) {
            let l = [0.1, 0.6, 0.3];
            let t = fisher_trace(&basis, &l, std::slice::from_ref(cfg)).unwrap();
            assert!((t - 1.0 / (1.0 - l[i] * l[i])).abs() < 1e-12);
        }
    }

    #[test]
    fn qubit_search_reaches_closed_form() {
        let ch = PauliChannel::standard(LAMBDA).unwrap().as_gen();
        let res = search_optimal_configs(&ch, 3, &mut rng_from_seed(1)).unwrap();
        let best = res.best().objective;
        assert!((best - 1.0 / 0.91).abs() < 1e-6, "{best}");
        assert!(res.aligned_attains_max);
        let none = search_optimal_configs(&ch, 0, &mut rng_from_seed(1)).unwrap();
        assert!(none.restarts.is_empty() && none.baselines.len() == 3);
    }

    #[test]
    fn qutrit_aligned_beats_random_configs() {
        let mub = standard_mub(3).unwrap();
        let lambda = [-0.3, -0.2, -0.1, 0.1];
        let ch = GenPauliChannel::new(mub.clone(), lambda.to_vec()).unwrap();
        let res = search_optimal_configs(&ch, 0, &mut rng_from_seed(0)).unwrap();
        let aligned = res.best().objective;
        // Aligned objective on basis i: (4/3)/(1 + 2λᵢ) + (2/3)/(1 - λᵢ).
        for (b, &l) in res.baselines.iter().zip(&lambda) {
            let expected = (4.0 / 3.0) / (1.0 + 2.0 * l) + (2.0 / 3.0) / (1.0 - l);
            assert!((b.objective - expected).abs() < 1e-10, "{} vs {expected}", b.objective);
        }
        let basis = affine_basis_qutrit(&mub).unwrap();
        let mut rng = rng_from_seed(42);
        for _ in 0..200 {
            let psi = random_pure_vector(3, &mut rng);
            let u = random_unitary(3, &mut rng);
            let v = config_objective(&basis, &lambda, &psi, &u).unwrap();
            assert!(v <= aligned + 1e-9);
        }
    }

    #[test]
    fn qutrit_search_does_not_beat_aligned() {
        let ch = GenPauliChannel::new(standard_mub(3).unwrap(), vec![-0.3, -0.2, -0.1, 0.1]).unwrap();
        let res = search_optimal_configs(&ch, 3, &mut rng_from_seed(9)).unwrap();
        assert_eq!(res.restarts.len(), 3);
        assert!(res.aligned_attains_max, "{:?}", res.restarts.iter().map(|r| r.objective).collect::<Vec<_>>());
        assert_eq!(res.best().aligned_with, Some(0));
    }

    #[test]
    fn parametrizations_are_valid() {
        let s = state_from_angles(3, &[0.3, 1.2, -0.4, 2.0]);
        assert!((s.norm() - 1.0).abs() < 1e-14);
        let u = unitary_from_params(3, &[0.1, 0.2, 0.3, 0.4, -0.5, 0.6, 0.7, -0.8, 0.9]);
        assert!(linalg::max_abs_diff(&(u.adjoint() * &u), &linalg::identity(3)) < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        #[test]
        fn qubit_formula_matches_trace(seed in any::<u64>()) {
            let mut rng = rng_from_seed(seed);
            let b = random_bloch(&mut rng);
            let m = random_unit_bloch(&mut rng);
            let direct = fisher_qubit(&b, &m, &LAMBDA).unwrap();
            let trace = fisher_trace(&affine_basis_qubit(), &LAMBDA, &[qubit_config(&b, &m)]).unwrap();
            prop_assert!((direct - trace).abs() < 1e-10);
            prop_assert!(ConfigVector::new(&b, &m).l1_norm() <= 1.0 + 1e-12);
        }

        #[test]
        fn fisher_matches_finite_differences(seed in any::<u64>()) {
            let mut rng = rng_from_seed(seed);
            let basis = affine_basis_qutrit(&standard_mub(3).unwrap()).unwrap();
            let lambda = [-0.3, -0.2, -0.1, 0.1];
            let psi = random_pure_vector(3, &mut rng);
            let rho = DensityMatrix::pure(&psi).unwrap();
            let povm = Povm::from_unitary(&random_unitary(3, &mut rng)).unwrap();
            let cfg = TomographyConfiguration::new(rho, povm, 1).unwrap();
            let f = fisher_matrix(&basis, &lambda, std::slice::from_ref(&cfg)).unwrap();
            let fd = finite_difference_fisher(&basis, &lambda, &cfg.config_matrices());
            let scale = 1.0 + f.entries.amax();
            prop_assert!((&f.entries - fd).amax() < 1e-6 * scale);
            let ev = nalgebra::SymmetricEigen::new(f.entries.clone()).eigenvalues;
            prop_assert!(ev.iter().all(|&e| e > -1e-10));
        }

        #[test]
        fn fisher_is_additive(seed in any::<u64>()) {
            let mut rng = rng_from_seed(seed);
            let basis = affine_basis_qubit();
            let configs: Vec<_> = (0..3).map(|_| qubit_config(&random_bloch(&mut rng), &random_unit_bloch(&mut rng))).collect();
            let total = fisher_matrix(&basis, &LAMBDA, &configs).unwrap().entries;
            let sum = configs.iter().fold(DMatrix::zeros(3, 3), |acc, c| acc + fisher_matrix(&basis, &LAMBDA, std::slice::from_ref(c)).unwrap().entries);
            prop_assert!((total - sum).amax() < 1e-12);
        }
    }

    #[test]
    fn fisher_trace_is_convex_in_configuration() {
        let basis = affine_basis_qubit();
        let mut rng = rng_from_seed(2024);
        for _ in 0..200 {
            let c0 = qubit_config(&random_bloch(&mut rng), &random_unit_bloch(&mut rng)).config_matrices();
            let c1 = qubit_config(&random_bloch(&mut rng), &random_unit_bloch(&mut rng)).config_matrices();
            let f0 = fisher_trace_from_matrices(&basis, &LAMBDA, &c0).unwrap();
            let f1 = fisher_trace_from_matrices(&basis, &LAMBDA, &c1).unwrap();
            for t in [0.25, 0.5, 0.75] {
                let mix: Vec<CMat> = c0.iter().zip(&c1).map(|(a, b)| b.scale(t) + a.scale(1.0 - t)).collect();
                let fm = fisher_trace_from_matrices(&basis, &LAMBDA, &mix).unwrap();
                assert!(fm <= t * f1 + (1.0 - t) * f0 + 1e-9);
            }
        }
    }
}
