//! Dense complex matrix helpers shared by the state, channel and solver code.
//!
//! Matrices on a bipartite space `H_in ⊗ H_out` use the Kronecker ordering of
//! `nalgebra`: the row index of `A ⊗ B` is `i * dim(B) + a`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Eigenvalues with magnitude below this are treated as zero in rank decisions.
pub const RANK_EPS: f64 = 1e-12;

#[inline]
pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn identity(d: usize) -> CMat {
    CMat::identity(d, d)
}

/// Pauli matrix `σ_i` for `i ∈ {1, 2, 3}`; `i = 0` gives the identity.
pub fn pauli(i: usize) -> CMat {
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    match i {
        0 => identity(2),
        1 => CMat::from_row_slice(2, 2, &[z, one, one, z]),
        2 => CMat::from_row_slice(2, 2, &[z, c(0.0, -1.0), c(0.0, 1.0), z]),
        3 => CMat::from_row_slice(2, 2, &[one, z, z, -one]),
        _ => panic!("pauli index {i} out of range"),
    }
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// `|v⟩⟨v|`
pub fn projector(v: &CVec) -> CMat {
    v * v.adjoint()
}

/// Trace over the second tensor factor of a `d_in·d_out` square matrix.
pub fn partial_trace_second(x: &CMat, d_in: usize) -> CMat {
    let d_out = x.nrows() / d_in;
    CMat::from_fn(d_in, d_in, |i, j| {
        (0..d_out).map(|a| x[(i * d_out + a, j * d_out + a)]).sum()
    })
}

/// Largest entrywise modulus of `m - m†`.
pub fn hermitian_residual(m: &CMat) -> f64 {
    let n = m.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn symmetrize(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let eig = SymmetricEigen::new(symmetrize(m));
    let n = m.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMat::from_fn(n, n, |r, col| eig.eigenvectors[(r, order[col])]);
    (values, vectors)
}

pub fn min_eigenvalue(m: &CMat) -> f64 {
    eigh(m).0[0]
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Real Frobenius inner product `Re tr(a† b)`.
pub fn inner(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// `tr(a b)` without forming the product.
pub fn trace_of_product(a: &CMat, b: &CMat) -> Complex64 {
    let n = a.nrows();
    let mut acc = c(0.0, 0.0);
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub fn trace(m: &CMat) -> Complex64 {
    m.diagonal().iter().sum()
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
