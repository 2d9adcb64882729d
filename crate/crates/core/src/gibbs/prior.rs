use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::state::McmcState;
use crate::distributions::{
    dirichlet_sample, exponential_sample, gamma_sample, inverse_wishart_sample, standard_normal,
};
use crate::error::{Error, Result};
use crate::linalg::check_spd;
use crate::matrix_serde;
use crate::parafac::ParafacCoefficient;

/// Hyperparameters of the shrinkage prior on the marginals and of the covariance prior.
///
/// `φ ~ Dir(α 1_R)`, `τ ~ Ga(a_τ, b_τ)`, `λ_{j,r} ~ Ga(a_λ, b_λ)`,
/// `w_{j,r,p} | λ ~ Exp(λ²/2)`, `β_j⁽ʳ⁾ ~ N(0, τ φ_r W_{j,r})`,
/// `γ ~ Ga(a_γ, b_γ)`, `Σ_j | γ ~ IW(ν_j, γ Ψ_j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorConfig {
    pub rank: usize,
    pub alpha: f64,
    pub a_tau: f64,
    pub b_tau: f64,
    pub a_lambda: f64,
    pub b_lambda: f64,
    pub nu: Vec<f64>,
    #[serde(with = "matrix_serde::matrices")]
    pub psi: Vec<DMatrix<f64>>,
    pub a_gamma: f64,
    pub b_gamma: f64,
}

impl PriorConfig {
    /// Defaults for response dims `dims`: `α = 1`, `a_τ = αR`, `b_τ = αR^{1/J}`,
    /// `a_λ = 3`, `b_λ = a_λ^{1/(2J)}`, `ν_j = I_j + 2`, `Ψ_j = I`, `a_γ = b_γ = 1`.
    pub fn default_for(dims: &[usize], rank: usize) -> Self {
        let modes = dims.len() as f64 + 1.0;
        let alpha = 1.0;
        let a_lambda = 3.0;
        PriorConfig {
            rank,
            alpha,
            a_tau: alpha * rank as f64,
            b_tau: alpha * (rank as f64).powf(1.0 / modes),
            a_lambda,
            b_lambda: a_lambda.powf(1.0 / (2.0 * modes)),
            nu: dims.iter().map(|&d| d as f64 + 2.0).collect(),
            psi: dims.iter().map(|&d| DMatrix::identity(d, d)).collect(),
            a_gamma: 1.0,
            b_gamma: 1.0,
        }
    }

    /// Sets `α` and the tied `a_τ = αR`, `b_τ = αR^{1/J}` for `J` coefficient modes.
    pub fn with_alpha(mut self, alpha: f64, modes: usize) -> Self {
        self.alpha = alpha;
        self.a_tau = alpha * self.rank as f64;
        self.b_tau = alpha * (self.rank as f64).powf(1.0 / modes as f64);
        self
    }

    pub fn validate(&self, dims: &[usize]) -> Result<()> {
        if self.rank == 0 {
            return Err(Error::domain("rank must be positive"));
        }
        let positive = [
            ("alpha", self.alpha),
            ("a_tau", self.a_tau),
            ("b_tau", self.b_tau),
            ("a_lambda", self.a_lambda),
            ("b_lambda", self.b_lambda),
            ("a_gamma", self.a_gamma),
            ("b_gamma", self.b_gamma),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::domain(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.nu.len() != dims.len() || self.psi.len() != dims.len() {
            return Err(Error::domain(format!(
                "need {} values of nu and psi, got {} and {}",
                dims.len(),
                self.nu.len(),
                self.psi.len()
            )));
        }
        for (j, ((&nu, psi), &d)) in self.nu.iter().zip(&self.psi).zip(dims).enumerate() {
            if !(nu > d as f64 - 1.0) {
                return Err(Error::domain(format!("nu_{} = {nu} must exceed I_{} - 1 = {}", j + 1, j + 1, d - 1)));
            }
            if psi.shape() != (d, d) {
                return Err(Error::domain(format!("psi_{} is {:?}, mode size is {d}", j + 1, psi.shape())));
            }
            check_spd(psi, &format!("psi_{}", j + 1)).map_err(|e| Error::domain(e.to_string()))?;
        }
        Ok(())
    }

    /// Whether the collapsed draw of `φ` is exact; it is when `a_τ = αR`.
    pub fn tau_is_tied(&self) -> bool {
        (self.a_tau - self.alpha * self.rank as f64).abs() <= 1e-12 * self.a_tau
    }

    /// A joint draw of every parameter from the prior.
    pub fn sample_state<R: Rng + ?Sized>(&self, dims: &[usize], rng: &mut R) -> Result<McmcState> {
        self.validate(dims)?;
        let gamma = gamma_sample(self.a_gamma, self.b_gamma, rng)?;
        let sigma = self
            .nu
            .iter()
            .zip(&self.psi)
            .map(|(&nu, psi)| inverse_wishart_sample(nu, &(psi * gamma), rng))
            .collect::<Result<Vec<_>>>()?;
        let draw = self.sample_marginals(dims, rng)?;
        Ok(McmcState {
            coef: draw.coef,
            phi: draw.phi,
            tau: draw.tau,
            lambda: draw.lambda,
            w: draw.w,
            sigma,
            gamma,
        })
    }

    /// Prior draw of the coefficient alone (its marginals and their scales).
    pub fn sample_coefficient<R: Rng + ?Sized>(&self, dims: &[usize], rng: &mut R) -> Result<ParafacCoefficient<f64>> {
        self.validate(dims)?;
        Ok(self.sample_marginals(dims, rng)?.coef)
    }

    fn sample_marginals<R: Rng + ?Sized>(&self, dims: &[usize], rng: &mut R) -> Result<MarginalDraw> {
        let total: usize = dims.iter().product();
        let mut coef_dims = dims.to_vec();
        coef_dims.push(total);
        let phi = dirichlet_sample(&vec![self.alpha; self.rank], rng)?;
        let tau = gamma_sample(self.a_tau, self.b_tau, rng)?;
        let mut lambda = Vec::with_capacity(self.rank);
        let mut w = Vec::with_capacity(self.rank);
        let mut comps = Vec::with_capacity(self.rank);
        for &phi_r in &phi {
            let mut lr = Vec::with_capacity(coef_dims.len());
            let mut wr = Vec::with_capacity(coef_dims.len());
            let mut cr = Vec::with_capacity(coef_dims.len());
            for &d in &coef_dims {
                let l = gamma_sample(self.a_lambda, self.b_lambda, rng)?;
                let wj: Vec<f64> = (0..d).map(|_| exponential_sample(l * l / 2.0, rng)).collect::<Result<_>>()?;
                let bj: Vec<f64> = wj.iter().map(|&wp| (tau * phi_r * wp).sqrt() * standard_normal(rng)).collect();
                lr.push(l);
                wr.push(wj);
                cr.push(bj);
            }
            lambda.push(lr);
            w.push(wr);
            comps.push(cr);
        }
        Ok(MarginalDraw { coef: ParafacCoefficient::new(comps)?, phi, tau, lambda, w })
    }
}

struct MarginalDraw {
    coef: ParafacCoefficient<f64>,
    phi: Vec<f64>,
    tau: f64,
    lambda: Vec<Vec<f64>>,
    w: Vec<Vec<Vec<f64>>>,
}
