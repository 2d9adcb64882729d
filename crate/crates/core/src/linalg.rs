//! Small dense linear-algebra helpers on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Size above which `spectral_radius` switches from a dense eigensolver to power iteration.
pub const DENSE_EIGEN_LIMIT: usize = 512;
pub const POWER_ITER_TOL: f64 = 1e-10;
pub const POWER_ITER_MAX: usize = 10_000;

/// `C = A B` for column-major buffers, `A: m×k`, `B: k×n`.
pub(crate) fn matmul_colmajor<T: Scalar>(a: &[T], b: &[T], m: usize, k: usize, n: usize) -> Vec<T> {
    let mut c = vec![T::zero(); m * n];
    for j in 0..n {
        let cj = &mut c[m * j..m * (j + 1)];
        for p in 0..k {
            let bpj = b[p + k * j];
            if bpj == T::zero() {
                continue;
            }
            for (ci, &ai) in cj.iter_mut().zip(&a[m * p..m * (p + 1)]) {
                *ci += ai * bpj;
            }
        }
    }
    c
}

/// Largest eigenvalue modulus of a square matrix.
pub fn spectral_radius(m: &DMatrix<f64>) -> f64 {
    assert!(m.is_square(), "spectral radius of a non-square matrix");
    if m.nrows() == 0 {
        return 0.0;
    }
    if m.nrows() <= DENSE_EIGEN_LIMIT {
        m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
    } else {
        power_iteration_radius(m, POWER_ITER_TOL, POWER_ITER_MAX)
    }
}

/// Spectral radius from the asymptotic growth rate of `‖A^k x‖`.
///
/// The estimate is the geometric mean of the per-step growth over the second half of
/// the iterations so far, which also settles for dominant complex pairs.
pub fn power_iteration_radius(m: &DMatrix<f64>, tol: f64, max_iter: usize) -> f64 {
    let n = m.nrows();
    // deterministic start with all components excited
    let mut x = DVector::from_fn(n, |i, _| 1.0 + 0.5 * ((i as f64 * 0.618_033_988_7).fract() - 0.5));
    x /= x.norm();
    let mut log_growth = Vec::with_capacity(max_iter);
    let mut last = f64::NAN;
    for it in 0..max_iter {
        let y = m * &x;
        let g = y.norm();
        if g == 0.0 || !g.is_finite() {
            return if g == 0.0 { 0.0 } else { f64::INFINITY };
        }
        log_growth.push(g.ln());
        x = y / g;
        if it >= 20 && it % 10 == 0 {
            let half = log_growth.len() / 2;
            let tail = &log_growth[half..];
            let est = (tail.iter().sum::<f64>() / tail.len() as f64).exp();
            if (est - last).abs() <= tol * est.max(1e-300) {
                return est;
            }
            last = est;
        }
    }
    let half = log_growth.len() / 2;
    let tail = &log_growth[half..];
    (tail.iter().sum::<f64>() / tail.len() as f64).exp()
}

pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// `M_k ⊗ … ⊗ M_1` for `mats = [M_1, …, M_k]` (reversed mode order).
pub fn kron_reversed(mats: &[DMatrix<f64>]) -> DMatrix<f64> {
    let mut out = DMatrix::from_element(1, 1, 1.0);
    for m in mats {
        out = m.kronecker(&out);
    }
    out
}

pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    m.is_square()
        && (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() <= tol * (1.0 + m[(i, j)].abs())))
}

/// Lower Cholesky factor; `what` names the matrix in the error.
pub fn cholesky_lower(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::domain(format!("{what} is not square")));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::numerical(format!("{what} has non-finite entries")));
    }
    m.clone()
        .cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::numerical(format!("{what} is not positive definite")))
}

/// Validates symmetry (1e-10) and positive definiteness, returning the Cholesky factor.
pub fn check_spd(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    if !is_symmetric(m, 1e-10) {
        return Err(Error::domain(format!("{what} is not symmetric")));
    }
    cholesky_lower(m, what)
}

pub fn spd_inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::numerical(format!("{what} has non-finite entries")));
    }
    let chol = m
        .clone()
        .cholesky()
        .ok_or_else(|| Error::numerical(format!("{what} is not positive definite")))?;
    let inv = chol.inverse();
    Ok(symmetrize(&inv))
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// `log|M|` from a lower Cholesky factor.
pub fn log_det_from_chol(l: &DMatrix<f64>) -> f64 {
    2.0 * l.diagonal().iter().map(|d| d.ln()).sum::<f64>()
}

/// A factor `F` with `F F' = M` for symmetric positive semidefinite `M`: the Cholesky
/// factor when it exists, otherwise `V diag(sqrt(max(λ, 0)))` from the eigendecomposition.
pub fn psd_factor(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    if let Some(c) = m.clone().cholesky() {
        return Ok(c.l());
    }
    if !is_symmetric(m, 1e-10) {
        return Err(Error::domain(format!("{what} is not symmetric")));
    }
    let eig = m.clone().symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs())).max(1.0);
    if eig.eigenvalues.iter().any(|&l| l < -1e-10 * scale) {
        return Err(Error::numerical(format!("{what} is not positive semidefinite")));
    }
    let mut f = eig.eigenvectors.clone();
    for (j, &l) in eig.eigenvalues.iter().enumerate() {
        let s = l.max(0.0).sqrt();
        f.column_mut(j).scale_mut(s);
    }
    Ok(f)
}

pub fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows() + b.nrows();
    let m = a.ncols() + b.ncols();
    let mut out = DMatrix::zeros(n, m);
    out.view_mut((0, 0), a.shape()).copy_from(a);
    out.view_mut((a.nrows(), a.ncols()), b.shape()).copy_from(b);
    out
}
