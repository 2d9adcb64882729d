//! Full-conditional updates of the three sampler blocks.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::hmc::{LogTauHmc, LogTauTarget};
use super::prior::PriorConfig;
use super::state::{Cache, McmcState, Regression};
use crate::distributions::{gamma_sample, inverse_wishart_sample, standard_normal_vec, Gig};
use crate::error::{Error, Result};
use crate::linalg::{spd_inverse, symmetrize};
use crate::parafac::outer_vec;
use crate::tensor::DenseTensor;

/// How the global scale `τ` is refreshed in the first block.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
#[derive(Default)]
pub enum TauUpdate {
    /// Exact draw from the GiG full conditional.
    #[default]
    Gig,
    /// HMC move on `log τ` targeting the same conditional.
    Hmc { leapfrog_steps: usize, target_accept: f64 },
}


/// Per-chain state of the `τ` update.
#[derive(Clone, Debug)]
pub struct TauKernel {
    hmc: Option<LogTauHmc>,
}

impl TauKernel {
    pub fn new(update: TauUpdate) -> Self {
        TauKernel {
            hmc: match update {
                TauUpdate::Gig => None,
                TauUpdate::Hmc { leapfrog_steps, target_accept } => Some(LogTauHmc::new(leapfrog_steps, target_accept)),
            },
        }
    }

    pub fn end_adaptation(&mut self) {
        if let Some(h) = &mut self.hmc {
            h.end_adaptation();
        }
    }

    pub fn acceptance_rate(&self) -> Option<f64> {
        self.hmc.as_ref().and_then(LogTauHmc::acceptance_rate)
    }

    pub fn step_size(&self) -> Option<f64> {
        self.hmc.as_ref().and_then(LogTauHmc::step_size)
    }
}

const PHI_FLOOR: f64 = 1e-300;

fn check_finite(what: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::numerical(format!("{what} is not finite")))
    }
}

/// `C_r = Σ_j β_j⁽ʳ⁾' W_{j,r}^{-1} β_j⁽ʳ⁾`.
pub fn component_scales(state: &McmcState) -> Vec<f64> {
    (0..state.rank())
        .map(|r| {
            state.w[r]
                .iter()
                .enumerate()
                .map(|(j, wj)| state.coef.marginal(r, j).iter().zip(wj).map(|(b, w)| b * b / w).sum::<f64>())
                .sum()
        })
        .collect()
}

/// Block I: `ψ_r ~ GiG(α - I_0/2, 2b_τ, C_r)`, `φ = ψ/Σψ`, then `τ ~ GiG(a_τ - R I_0/2, 2b_τ, Σ_r C_r/φ_r)`.
pub fn step_global_scales<R: Rng + ?Sized>(
    priors: &PriorConfig,
    state: &mut McmcState,
    tau_kernel: &mut TauKernel,
    rng: &mut R,
) -> Result<()> {
    let c = component_scales(state);
    for (r, &cr) in c.iter().enumerate() {
        check_finite(&format!("C_{}", r + 1), cr)?;
    }
    let i0: usize = state.coef.dims().iter().sum();
    let rank = state.rank() as f64;
    let order = priors.alpha - i0 as f64 / 2.0;
    let psi = c
        .iter()
        .map(|&cr| {
            let g = Gig::new(order, 2.0 * priors.b_tau, cr)
                .map_err(|e| Error::numerical(format!("global scale draw degenerate: {e}")))?;
            Ok(g.sample(rng))
        })
        .collect::<Result<Vec<f64>>>()?;
    let total: f64 = psi.iter().sum();
    check_finite("sum of ψ", total)?;
    state.phi = psi.iter().map(|&p| (p / total).max(PHI_FLOOR)).collect();
    let s: f64 = state.phi.iter().sum();
    state.phi.iter_mut().for_each(|p| *p /= s);

    let k: f64 = c.iter().zip(&state.phi).map(|(cr, p)| cr / p).sum();
    check_finite("Σ C_r/φ_r", k)?;
    let tau_order = priors.a_tau - rank * i0 as f64 / 2.0;
    state.tau = match &mut tau_kernel.hmc {
        None => Gig::new(tau_order, 2.0 * priors.b_tau, k)
            .map_err(|e| Error::numerical(format!("τ draw degenerate: {e}")))?
            .sample(rng),
        Some(hmc) => {
            let target = LogTauTarget { k: tau_order, b: priors.b_tau, c: k / 2.0 };
            hmc.transition(state.tau.ln(), &target, rng).exp()
        }
    };
    check_finite("τ", state.tau)?;
    if !(state.tau > 0.0) {
        return Err(Error::numerical("τ underflowed to zero"));
    }
    Ok(())
}

fn beta_conditional_cached(
    reg: &Regression,
    state: &McmcState,
    cache: &Cache,
    r: usize,
    j: usize,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let n_modes = reg.dims.len();
    let prec = &cache.precisions;
    let (u, v) = (&cache.u[r], &cache.v[r]);
    let g: Vec<DVector<f64>> = (0..n_modes)
        .map(|i| &prec[i] * DVector::from_column_slice(state.coef.marginal(r, i)))
        .collect();
    let q: Vec<f64> = (0..n_modes).map(|i| g[i].dot(&DVector::from_column_slice(state.coef.marginal(r, i)))).collect();
    let (s, m) = if j < n_modes {
        // G = Σ_t u_t E_t^{(-r)} with E^{(-r)} = resid + v u'
        let gt = &cache.resid * u + v * u.dot(u);
        let mut t = DenseTensor::new(reg.dims.clone(), gt.as_slice().to_vec())?;
        for i in (0..n_modes).rev() {
            if i != j {
                t = t.mode_n_product(g[i].as_slice(), i)?;
            }
        }
        let e = DVector::from_column_slice(t.as_slice());
        let scale: f64 = u.dot(u) * (0..n_modes).filter(|&i| i != j).map(|i| q[i]).product::<f64>();
        (&prec[j] * scale, &prec[j] * e)
    } else {
        let refs: Vec<&[f64]> = g.iter().map(|x| x.as_slice()).collect();
        let h = DVector::from_vec(outer_vec(&refs));
        let proj = cache.resid.tr_mul(&h) + u * v.dot(&h);
        let scale: f64 = q.iter().product();
        (&reg.xx * scale, &reg.x * proj)
    };
    let mut precision = s;
    let tp = state.tau * state.phi[r];
    for (p, w) in state.w[r][j].iter().enumerate() {
        precision[(p, p)] += 1.0 / (tp * w);
    }
    let precision = symmetrize(&precision);
    let chol = precision.clone().cholesky().ok_or_else(|| {
        Error::numerical(format!("posterior precision of β_{}^({}) is not positive definite", j + 1, r + 1))
    })?;
    Ok((chol.solve(&m), precision))
}

/// Mean and precision of the Gaussian full conditional of `β_j⁽ʳ⁾` (zero-based `r`, `j`).
pub fn beta_conditional(reg: &Regression, state: &McmcState, r: usize, j: usize) -> Result<(DVector<f64>, DMatrix<f64>)> {
    if r >= state.rank() || j > reg.dims.len() {
        return Err(Error::domain(format!("no marginal ({r}, {j})")));
    }
    let cache = Cache::new(reg, state)?;
    beta_conditional_cached(reg, state, &cache, r, j)
}

/// Block II: for `r = 1..R`, `j = 1..J`, draw `λ_{j,r}`, then `W_{j,r}`, then `β_j⁽ʳ⁾`.
pub fn step_local_scales_and_marginals<R: Rng + ?Sized>(
    reg: &Regression,
    priors: &PriorConfig,
    state: &mut McmcState,
    rng: &mut R,
) -> Result<()> {
    let mut cache = Cache::new(reg, state)?;
    step_local_cached(reg, priors, state, &mut cache, rng)
}

pub(crate) fn step_local_cached<R: Rng + ?Sized>(
    reg: &Regression,
    priors: &PriorConfig,
    state: &mut McmcState,
    cache: &mut Cache,
    rng: &mut R,
) -> Result<()> {
    let modes = reg.dims.len() + 1;
    for r in 0..state.rank() {
        for j in 0..modes {
            let tp = state.tau * state.phi[r];
            let beta = state.coef.marginal(r, j).to_vec();
            let l1: f64 = beta.iter().map(|b| b.abs()).sum();
            let lambda = gamma_sample(priors.a_lambda + beta.len() as f64, priors.b_lambda + l1 / tp.sqrt(), rng)?;
            state.lambda[r][j] = lambda;
            for (p, b) in beta.iter().enumerate() {
                let g = Gig::new(0.5, lambda * lambda, b * b / tp)
                    .map_err(|e| Error::numerical(format!("local scale draw degenerate: {e}")))?;
                let w = g.sample(rng);
                if !(w > 0.0 && w.is_finite()) {
                    return Err(Error::numerical(format!("local scale w_{},{},{} = {w}", j + 1, r + 1, p + 1)));
                }
                state.w[r][j][p] = w;
            }
            let (mean, precision) = beta_conditional_cached(reg, state, cache, r, j)?;
            let l = precision.cholesky().expect("checked in the conditional").l();
            let z = DVector::from_vec(standard_normal_vec(mean.len(), rng));
            let dev = l
                .transpose()
                .solve_upper_triangular(&z)
                .ok_or_else(|| Error::numerical("singular posterior precision factor"))?;
            let draw = mean + dev;
            if draw.iter().any(|x| !x.is_finite()) {
                return Err(Error::numerical(format!("non-finite draw of β_{}^({})", j + 1, r + 1)));
            }
            state.coef.set_marginal(r, j, draw.as_slice().to_vec())?;
            cache.refresh_component(reg, state, r);
        }
    }
    Ok(())
}

/// `S_j = Σ_t E_(j),t (⊗_{i≠j} Σ_i^{-1}) E_(j),t'` for the residuals in `resid`.
pub(crate) fn scatter(reg: &Regression, precisions: &[DMatrix<f64>], resid: &DMatrix<f64>, j: usize) -> Result<DMatrix<f64>> {
    let d = reg.dims[j];
    let mut s = DMatrix::zeros(d, d);
    for col in resid.column_iter() {
        let e = DenseTensor::new(reg.dims.clone(), col.iter().copied().collect())?;
        let mut et = e.clone();
        for (i, p) in precisions.iter().enumerate() {
            if i != j {
                et = et.mode_n_matrix_product(p, i)?;
            }
        }
        s += e.mode_n_matricize(j)? * et.mode_n_matricize(j)?.transpose();
    }
    Ok(symmetrize(&s))
}

/// Block III: `Σ_j ~ IW(ν_j + n I*/I_j, γΨ_j + S_j)` in turn, then
/// `γ ~ Ga(a_γ + ½Σ ν_j I_j, b_γ + ½Σ tr(Ψ_j Σ_j^{-1}))`.
pub fn step_covariances<R: Rng + ?Sized>(
    reg: &Regression,
    priors: &PriorConfig,
    state: &mut McmcState,
    rng: &mut R,
) -> Result<()> {
    let mut cache = Cache::new(reg, state)?;
    step_covariances_cached(reg, priors, state, &mut cache, rng)
}

pub(crate) fn step_covariances_cached<R: Rng + ?Sized>(
    reg: &Regression,
    priors: &PriorConfig,
    state: &mut McmcState,
    cache: &mut Cache,
    rng: &mut R,
) -> Result<()> {
    let n = reg.pairs() as f64;
    let total = reg.total_dim() as f64;
    for j in 0..reg.dims.len() {
        let s = scatter(reg, &cache.precisions, &cache.resid, j)?;
        let df = priors.nu[j] + n * total / reg.dims[j] as f64;
        let scale = &priors.psi[j] * state.gamma + s;
        let sigma = inverse_wishart_sample(df, &scale, rng)
            .map_err(|e| Error::numerical(format!("Σ_{} draw failed: {e}", j + 1)))?;
        cache.precisions[j] = spd_inverse(&sigma, &format!("Σ_{}", j + 1))?;
        state.sigma[j] = sigma;
    }
    let shape = priors.a_gamma + 0.5 * priors.nu.iter().zip(&reg.dims).map(|(nu, &d)| nu * d as f64).sum::<f64>();
    let rate = priors.b_gamma
        + 0.5 * priors.psi.iter().zip(&cache.precisions).map(|(psi, p)| (psi * p).trace()).sum::<f64>();
    state.gamma = gamma_sample(shape, rate, rng)?;
    Ok(())
}

/// One cycle of blocks I, II and III.
pub fn sweep<R: Rng + ?Sized>(
    reg: &Regression,
    priors: &PriorConfig,
    state: &mut McmcState,
    tau_kernel: &mut TauKernel,
    rng: &mut R,
) -> Result<()> {
    step_global_scales(priors, state, tau_kernel, rng)?;
    let mut cache = Cache::new(reg, state)?;
    step_local_cached(reg, priors, state, &mut cache, rng)?;
    step_covariances_cached(reg, priors, state, &mut cache, rng)
}
