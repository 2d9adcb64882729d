use std::sync::atomic::{AtomicBool, Ordering};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::prior::PriorConfig;
use super::state::{McmcState, Regression};
use super::steps::{sweep, TauKernel, TauUpdate};
use crate::distributions::standard_normal;
use crate::error::{Error, Result};
use crate::matrix_serde;
use crate::model::{ArtModel, Coefficient, TensorSeries};
use crate::parafac::ParafacCoefficient;
use crate::rng::{stream, ChainRng, Purpose};
use crate::tensor::DenseTensor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Total iterations including burn-in.
    pub iters: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    #[serde(default)]
    pub chain: u64,
    #[serde(default)]
    pub tau_update: TauUpdate,
    /// Also record the (unidentified) marginals with every draw.
    #[serde(default)]
    pub store_marginals: bool,
}

impl SamplerConfig {
    pub fn new(iters: usize, burn_in: usize, thin: usize, seed: u64) -> Self {
        SamplerConfig { iters, burn_in, thin, seed, chain: 0, tau_update: TauUpdate::Gig, store_marginals: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iters == 0 {
            return Err(Error::domain("iters must be positive"));
        }
        if self.thin == 0 {
            return Err(Error::domain("thin must be at least 1"));
        }
        if self.burn_in > self.iters {
            return Err(Error::domain(format!("burn_in {} exceeds iters {}", self.burn_in, self.iters)));
        }
        if let TauUpdate::Hmc { leapfrog_steps, target_accept } = self.tau_update {
            if leapfrog_steps == 0 || !(target_accept > 0.0 && target_accept < 1.0) {
                return Err(Error::domain("HMC needs leapfrog_steps >= 1 and 0 < target_accept < 1"));
            }
        }
        Ok(())
    }

    pub fn retained(&self) -> usize {
        retained_draws(self.iters, self.burn_in, self.thin)
    }

    /// Whether 1-based iteration `i` is kept.
    pub fn keeps(&self, i: usize) -> bool {
        i > self.burn_in && (i - self.burn_in).is_multiple_of(self.thin)
    }
}

/// `⌊(iters - burn_in) / thin⌋`, the number of draws a run keeps.
pub fn retained_draws(iters: usize, burn_in: usize, thin: usize) -> usize {
    if thin == 0 {
        return 0;
    }
    iters.saturating_sub(burn_in) / thin
}

/// One retained draw.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    pub iteration: usize,
    /// `vec(ℬ)` of the reconstructed coefficient.
    pub coefficient: Vec<f64>,
    #[serde(with = "matrix_serde::matrices")]
    pub sigma: Vec<DMatrix<f64>>,
    pub tau: f64,
    pub phi: Vec<f64>,
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub marginals: Option<ParafacCoefficient<f64>>,
}

impl Draw {
    pub fn from_state(iteration: usize, state: &McmcState, store_marginals: bool) -> Self {
        Draw {
            iteration,
            coefficient: state.coef.reconstruct().into_vec(),
            sigma: state.sigma.clone(),
            tau: state.tau,
            phi: state.phi.clone(),
            gamma: state.gamma,
            marginals: store_marginals.then(|| state.coef.clone()),
        }
    }

    /// The ART(1) model this draw represents.
    pub fn model(&self, dims: &[usize]) -> Result<ArtModel> {
        let total: usize = dims.iter().product();
        let mut coef_dims = dims.to_vec();
        coef_dims.push(total);
        let coef = DenseTensor::new(coef_dims, self.coefficient.clone())?;
        ArtModel::new(dims.to_vec(), vec![Coefficient::Dense(coef)], self.sigma.clone())
    }

    /// `A = mat_{N+1}(ℬ)'`.
    pub fn var_matrix(&self) -> DMatrix<f64> {
        let n = (self.coefficient.len() as f64).sqrt().round() as usize;
        DMatrix::from_column_slice(n, n, &self.coefficient)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceMeta {
    pub dims: Vec<usize>,
    pub rank: usize,
    pub seed: u64,
    pub chain: u64,
    pub iters: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub tau_update: TauUpdate,
    pub retained: usize,
    #[serde(default)]
    pub hmc_acceptance: Option<f64>,
    #[serde(default)]
    pub hmc_step_size: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Trace {
    pub meta: TraceMeta,
    pub draws: Vec<Draw>,
}

impl Trace {
    pub fn dims(&self) -> &[usize] {
        &self.meta.dims
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }
}

/// A single chain of the three-block Gibbs sampler.
pub struct Sampler {
    reg: Regression,
    priors: PriorConfig,
    config: SamplerConfig,
    state: McmcState,
    tau: TauKernel,
    rng: ChainRng,
    iteration: usize,
}

impl Sampler {
    pub fn new(series: &TensorSeries, priors: PriorConfig, config: SamplerConfig) -> Result<Self> {
        let mut init_rng = stream(config.seed, config.chain, Purpose::Initialization);
        let state = initial_state(series.dims(), &priors, &mut init_rng)?;
        Sampler::with_state(series, priors, config, state)
    }

    pub fn with_state(series: &TensorSeries, priors: PriorConfig, config: SamplerConfig, state: McmcState) -> Result<Self> {
        config.validate()?;
        priors.validate(series.dims())?;
        state.validate()?;
        if state.dims() != series.dims() || state.rank() != priors.rank {
            return Err(Error::domain("initial state does not match the data dims or prior rank"));
        }
        let reg = Regression::new(series)?;
        Ok(Sampler {
            reg,
            tau: TauKernel::new(config.tau_update),
            rng: stream(config.seed, config.chain, Purpose::Sampler),
            priors,
            config,
            state,
            iteration: 0,
        })
    }

    pub fn state(&self) -> &McmcState {
        &self.state
    }

    pub fn regression(&self) -> &Regression {
        &self.reg
    }

    pub fn config(&self) -> &SamplerConfig {
        &self.config
    }

    /// Runs one sweep, advancing the iteration counter.
    pub fn step(&mut self) -> Result<()> {
        self.iteration += 1;
        let i = self.iteration;
        sweep(&self.reg, &self.priors, &mut self.state, &mut self.tau, &mut self.rng).map_err(|e| e.at_iteration(i))?;
        if i == self.config.burn_in {
            self.tau.end_adaptation();
        }
        Ok(())
    }

    /// Runs all iterations, handing every retained draw to `sink`. The abort flag is
    /// checked between iterations.
    pub fn run_with<F>(&mut self, abort: Option<&AtomicBool>, mut sink: F) -> Result<TraceMeta>
    where
        F: FnMut(&Draw) -> Result<()>,
    {
        if self.config.burn_in == 0 {
            self.tau.end_adaptation();
        }
        while self.iteration < self.config.iters {
            if abort.is_some_and(|a| a.load(Ordering::SeqCst)) {
                return Err(Error::Aborted);
            }
            self.step()?;
            if self.config.keeps(self.iteration) {
                sink(&Draw::from_state(self.iteration, &self.state, self.config.store_marginals))?;
            }
        }
        Ok(self.meta())
    }

    pub fn meta(&self) -> TraceMeta {
        TraceMeta {
            dims: self.reg.dims().to_vec(),
            rank: self.priors.rank,
            seed: self.config.seed,
            chain: self.config.chain,
            iters: self.config.iters,
            burn_in: self.config.burn_in,
            thin: self.config.thin,
            tau_update: self.config.tau_update,
            retained: self.config.retained(),
            hmc_acceptance: self.tau.acceptance_rate(),
            hmc_step_size: self.tau.step_size(),
        }
    }
}

/// Runs one chain and collects its draws.
pub fn run_sampler(series: &TensorSeries, priors: PriorConfig, config: SamplerConfig) -> Result<Trace> {
    let mut sampler = Sampler::new(series, priors, config)?;
    let mut draws = Vec::with_capacity(sampler.config.retained());
    let meta = sampler.run_with(None, |d| {
        draws.push(d.clone());
        Ok(())
    })?;
    Ok(Trace { meta, draws })
}

/// Starting point: `φ = 1/R`, `τ = λ = w = γ = 1`, `Σ_j = I`, and small random
/// marginals so that no component starts exactly at zero.
pub fn initial_state<R: rand::Rng + ?Sized>(dims: &[usize], priors: &PriorConfig, rng: &mut R) -> Result<McmcState> {
    priors.validate(dims)?;
    let rank = priors.rank;
    let total: usize = dims.iter().product();
    let mut coef_dims = dims.to_vec();
    coef_dims.push(total);
    let modes = coef_dims.len() as f64;
    let s = (0.01 / (rank * total) as f64).powf(1.0 / (2.0 * modes));
    let comps = (0..rank)
        .map(|_| coef_dims.iter().map(|&d| (0..d).map(|_| s * standard_normal(rng)).collect()).collect())
        .collect();
    Ok(McmcState {
        coef: ParafacCoefficient::new(comps)?,
        phi: vec![1.0 / rank as f64; rank],
        tau: 1.0,
        lambda: vec![vec![1.0; coef_dims.len()]; rank],
        w: (0..rank).map(|_| coef_dims.iter().map(|&d| vec![1.0; d]).collect()).collect(),
        sigma: dims.iter().map(|&d| DMatrix::identity(d, d)).collect(),
        gamma: 1.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn retained_draw_arithmetic() {
        assert_eq!(retained_draws(100_000, 30_000, 2), 35_000);
        assert_eq!(retained_draws(10, 10, 1), 0);
        assert_eq!(retained_draws(11, 0, 3), 3);
        let c = SamplerConfig::new(11, 2, 3, 0);
        let kept: Vec<usize> = (1..=11).filter(|&i| c.keeps(i)).collect();
        assert_eq!(kept, vec![5, 8, 11]);
        assert_eq!(kept.len(), c.retained());
    }

    #[test]
    fn config_validation() {
        assert!(SamplerConfig::new(10, 11, 1, 0).validate().is_err());
        assert!(SamplerConfig::new(10, 1, 0, 0).validate().is_err());
        assert!(SamplerConfig::new(0, 0, 1, 0).validate().is_err());
        let mut c = SamplerConfig::new(10, 1, 1, 0);
        c.tau_update = TauUpdate::Hmc { leapfrog_steps: 10, target_accept: 1.5 };
        assert!(c.validate().is_err());
    }
}
