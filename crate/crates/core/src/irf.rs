//! Block-Cholesky (orthogonalized) and block-generalized impulse responses.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gibbs::{quantile_sorted, Trace};
use crate::linalg::{block_diag, cholesky_lower, is_symmetric, kron_reversed};
use crate::model::ArtModel;

/// Block decomposition of `Σ = [[A, B], [B', C]]` with leading block of size `n`.
#[derive(Clone, Debug, PartialEq)]
pub struct BlockFactors {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    /// Schur complement `C - B'A^{-1}B`.
    pub s: DMatrix<f64>,
    /// Unit lower block triangular, lower-left block `B'A^{-1}`.
    pub l: DMatrix<f64>,
    /// `blockdiag(A, S) = L^{-1} Σ L'^{-1}`.
    pub d: DMatrix<f64>,
    /// `L · blockdiag(chol(A), chol(S))`, so `P P' = Σ`.
    pub p: DMatrix<f64>,
}

pub fn block_factors(sigma: &DMatrix<f64>, n: usize) -> Result<BlockFactors> {
    let m = sigma.nrows();
    if !sigma.is_square() || m == 0 {
        return Err(Error::domain("covariance must be a nonempty square matrix"));
    }
    if n == 0 || n > m {
        return Err(Error::domain(format!("block size {n} outside 1..={m}")));
    }
    if !is_symmetric(sigma, 1e-10) {
        return Err(Error::domain("covariance is not symmetric"));
    }
    let a = sigma.view((0, 0), (n, n)).into_owned();
    let b = sigma.view((0, n), (n, m - n)).into_owned();
    let c = sigma.view((n, n), (m - n, m - n)).into_owned();
    let la = cholesky_lower(&a, "leading block A")?;
    // B'A^{-1} = (A^{-1}B)' via the factor of A
    let a_inv_b = la
        .solve_lower_triangular(&b)
        .and_then(|x| la.transpose().solve_upper_triangular(&x))
        .ok_or_else(|| Error::numerical("leading block A is singular"))?;
    let lower = a_inv_b.transpose();
    let s = &c - &b.transpose() * &a_inv_b;
    let s = (&s + s.transpose()) * 0.5;
    let ls = if m > n { cholesky_lower(&s, "Schur complement S")? } else { DMatrix::zeros(0, 0) };
    let mut l = DMatrix::identity(m, m);
    l.view_mut((n, 0), (m - n, n)).copy_from(&lower);
    let d = block_diag(&a, &s);
    let p = &l * block_diag(&la, &ls);
    Ok(BlockFactors { a, b, c, s, l, d, p })
}

/// Which variables are shocked and by how much.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShockSpec {
    /// Permutation of `0..I*` listing the shocked variables first.
    pub ordering: Vec<usize>,
    /// `δ*`, one entry per shocked variable.
    pub delta: Vec<f64>,
}

impl ShockSpec {
    /// Shock of size `magnitude` to variable `index`; the others keep their order.
    pub fn single(index: usize, magnitude: f64, total: usize) -> Result<Self> {
        ShockSpec::block(&[index], vec![magnitude], total)
    }

    /// Joint shock `delta` to `indices`, which lead the ordering in the given order.
    pub fn block(indices: &[usize], delta: Vec<f64>, total: usize) -> Result<Self> {
        let mut ordering = indices.to_vec();
        ordering.extend((0..total).filter(|i| !indices.contains(i)));
        let spec = ShockSpec { ordering, delta };
        spec.validate(total)?;
        Ok(spec)
    }

    pub fn size(&self) -> usize {
        self.delta.len()
    }

    pub fn validate(&self, total: usize) -> Result<()> {
        if self.delta.is_empty() || self.delta.len() > total {
            return Err(Error::domain(format!("shock size {} outside 1..={total}", self.delta.len())));
        }
        if self.delta.iter().any(|d| !d.is_finite()) {
            return Err(Error::domain("shock vector must be finite"));
        }
        let mut seen = vec![false; total];
        if self.ordering.len() != total || self.ordering.iter().any(|&i| i >= total || std::mem::replace(&mut seen[i], true)) {
            return Err(Error::domain(format!("ordering is not a permutation of 0..{total}")));
        }
        Ok(())
    }

    /// `Π` with `(Π y)_k = y_{ordering[k]}`.
    pub fn permutation(&self) -> DMatrix<f64> {
        let m = self.ordering.len();
        let mut pi = DMatrix::zeros(m, m);
        for (k, &i) in self.ordering.iter().enumerate() {
            pi[(k, i)] = 1.0;
        }
        pi
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IrfMethod {
    Girf,
    Oirf,
}

impl IrfMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            IrfMethod::Girf => "girf",
            IrfMethod::Oirf => "oirf",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrfResult {
    pub method: IrfMethod,
    pub dims: Vec<usize>,
    /// `responses[h]` is the vectorized response at horizon `h`.
    pub responses: Vec<Vec<f64>>,
}

impl IrfResult {
    pub fn horizon(&self) -> usize {
        self.responses.len().saturating_sub(1)
    }

    pub fn response_tensor(&self, h: usize) -> Result<crate::Tensor> {
        let r = self.responses.get(h).ok_or_else(|| Error::domain(format!("horizon {h} beyond {}", self.horizon())))?;
        crate::Tensor::new(self.dims.clone(), r.clone())
    }
}

/// Impact vector in the original ordering for a unit of `δ*`.
fn impact(method: IrfMethod, sigma: &DMatrix<f64>, shock: &ShockSpec) -> Result<DMatrix<f64>> {
    let m = sigma.nrows();
    shock.validate(m)?;
    let n = shock.size();
    let pi = shock.permutation();
    let sp = &pi * sigma * pi.transpose();
    let f = block_factors(&sp, n)?;
    let cols = match method {
        // P E_n
        IrfMethod::Oirf => f.p.columns(0, n).into_owned(),
        // L D E_n A^{-1} = Σ_π E_n A^{-1}
        IrfMethod::Girf => {
            let ai = f.a.clone().cholesky().expect("checked in block_factors").inverse();
            sp.columns(0, n) * ai
        }
    };
    Ok(pi.transpose() * cols)
}

/// `Ψ_h Π' P E_n δ*` or `Ψ_h Π' L D E_n A^{-1} δ*` for `h = 0..=H`, from MA matrices.
pub fn irf_from_parts(
    method: IrfMethod,
    dims: &[usize],
    psi: &[DMatrix<f64>],
    sigma: &DMatrix<f64>,
    shock: &ShockSpec,
) -> Result<IrfResult> {
    let total: usize = dims.iter().product();
    if sigma.nrows() != total || psi.iter().any(|p| p.shape() != (total, total)) {
        return Err(Error::domain("MA or covariance matrices do not match the response dims"));
    }
    let base = impact(method, sigma, shock)? * DVector::from_column_slice(&shock.delta);
    let responses = psi.iter().map(|p| (p * &base).as_slice().to_vec()).collect();
    Ok(IrfResult { method, dims: dims.to_vec(), responses })
}

pub fn oirf(model: &ArtModel, shock: &ShockSpec, horizon: usize) -> Result<IrfResult> {
    irf_from_parts(IrfMethod::Oirf, model.dims(), &model.ma_coefficients(horizon), &model.vec_covariance(), shock)
}

pub fn girf(model: &ArtModel, shock: &ShockSpec, horizon: usize) -> Result<IrfResult> {
    irf_from_parts(IrfMethod::Girf, model.dims(), &model.ma_coefficients(horizon), &model.vec_covariance(), shock)
}

pub fn irf(method: IrfMethod, model: &ArtModel, shock: &ShockSpec, horizon: usize) -> Result<IrfResult> {
    match method {
        IrfMethod::Girf => girf(model, shock, horizon),
        IrfMethod::Oirf => oirf(model, shock, horizon),
    }
}

/// Per-pair responses: entry `(i, k)` of the `h`-th matrix is the response of
/// variable `i` to shocked variable `ordering[k]` alone, scaled by `δ*_k`.
/// For the generalized form the column is `Σ_π e_k / D_kk`.
pub fn pairwise_irf(method: IrfMethod, psi: &[DMatrix<f64>], sigma: &DMatrix<f64>, shock: &ShockSpec) -> Result<Vec<DMatrix<f64>>> {
    let m = sigma.nrows();
    shock.validate(m)?;
    let n = shock.size();
    let pi = shock.permutation();
    let sp = &pi * sigma * pi.transpose();
    let f = block_factors(&sp, n)?;
    let mut cols = match method {
        IrfMethod::Oirf => f.p.columns(0, n).into_owned(),
        IrfMethod::Girf => {
            let mut c = sp.columns(0, n).into_owned();
            for k in 0..n {
                let dkk = f.d[(k, k)];
                c.column_mut(k).scale_mut(1.0 / dkk);
            }
            c
        }
    };
    for k in 0..n {
        cols.column_mut(k).scale_mut(shock.delta[k]);
    }
    let back = pi.transpose() * cols;
    Ok(psi.iter().map(|p| p * &back).collect())
}

/// Pointwise posterior summary of an IRF.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IrfSummary {
    pub method: IrfMethod,
    pub dims: Vec<usize>,
    pub draws: usize,
    /// Indexed `[h][i]`.
    pub median: Vec<Vec<f64>>,
    pub q05: Vec<Vec<f64>>,
    pub q16: Vec<Vec<f64>>,
    pub q84: Vec<Vec<f64>>,
    pub q95: Vec<Vec<f64>>,
    /// The 90% band excludes zero.
    pub significant: Vec<Vec<bool>>,
}

/// IRF of one retained draw, built from `vec(ℬ)` and the `Σ_j` directly.
pub fn draw_irf(method: IrfMethod, dims: &[usize], coefficient: &[f64], sigma: &[DMatrix<f64>], shock: &ShockSpec, horizon: usize) -> Result<IrfResult> {
    let total: usize = dims.iter().product();
    if coefficient.len() != total * total {
        return Err(Error::domain("coefficient length does not match the dims"));
    }
    let a = DMatrix::from_column_slice(total, total, coefficient);
    let mut psi = Vec::with_capacity(horizon + 1);
    psi.push(DMatrix::identity(total, total));
    for h in 1..=horizon {
        psi.push(&a * &psi[h - 1]);
    }
    irf_from_parts(method, dims, &psi, &kron_reversed(sigma), shock)
}

/// Median and equal-tailed 68%/90% bands across the draws of one or more traces.
pub fn irf_summarize_over_trace(traces: &[Trace], method: IrfMethod, shock: &ShockSpec, horizon: usize) -> Result<IrfSummary> {
    let draws: Vec<_> = traces.iter().flat_map(|t| &t.draws).collect();
    let first = traces.first().ok_or_else(|| Error::domain("no traces"))?;
    if draws.is_empty() {
        return Err(Error::domain("cannot summarize IRFs over an empty trace"));
    }
    let dims = first.dims().to_vec();
    let irfs = draws
        .iter()
        .map(|d| draw_irf(method, &dims, &d.coefficient, &d.sigma, shock, horizon))
        .collect::<Result<Vec<_>>>()?;
    summarize_irfs(method, &dims, &irfs)
}

/// Pointwise quantiles of a set of IRFs with equal shape.
pub fn summarize_irfs(method: IrfMethod, dims: &[usize], irfs: &[IrfResult]) -> Result<IrfSummary> {
    let first = irfs.first().ok_or_else(|| Error::domain("no IRFs to summarize"))?;
    let hs = first.responses.len();
    let total: usize = dims.iter().product();
    if irfs.iter().any(|r| r.responses.len() != hs || r.responses.iter().any(|v| v.len() != total)) {
        return Err(Error::domain("IRFs differ in shape"));
    }
    let grid = || vec![vec![0.0; total]; hs];
    let mut s = IrfSummary {
        method,
        dims: dims.to_vec(),
        draws: irfs.len(),
        median: grid(),
        q05: grid(),
        q16: grid(),
        q84: grid(),
        q95: grid(),
        significant: vec![vec![false; total]; hs],
    };
    let mut col = Vec::with_capacity(irfs.len());
    for h in 0..hs {
        for i in 0..total {
            col.clear();
            col.extend(irfs.iter().map(|r| r.responses[h][i]));
            col.sort_by(f64::total_cmp);
            s.median[h][i] = quantile_sorted(&col, 0.5);
            s.q05[h][i] = quantile_sorted(&col, 0.05);
            s.q16[h][i] = quantile_sorted(&col, 0.16);
            s.q84[h][i] = quantile_sorted(&col, 0.84);
            s.q95[h][i] = quantile_sorted(&col, 0.95);
            s.significant[h][i] = s.q05[h][i] > 0.0 || s.q95[h][i] < 0.0;
        }
    }
    Ok(s)
}
