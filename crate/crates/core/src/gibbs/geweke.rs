//! Joint-distribution check of the sampler: the marginal-conditional simulator
//! (prior draw, then data) and the successive-conditional simulator (Gibbs
//! transition, then data) must agree on the moments of test functions.

use rand::Rng;

use super::prior::PriorConfig;
use super::sampler::Draw;
use super::state::{McmcState, Regression};
use super::steps::{sweep, TauKernel, TauUpdate};
use super::summary::effective_sample_size;
use crate::error::Result;
use crate::model::{TensorSeries, DEFAULT_BURN_IN};
use crate::rng::{stream, Purpose};
use crate::tensor::DenseTensor;

#[derive(Clone, Debug)]
pub struct GewekeConfig {
    pub dims: Vec<usize>,
    pub priors: PriorConfig,
    /// Observations after the fixed zero starting value.
    pub len: usize,
    pub cycles: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GewekeStat {
    pub name: String,
    pub marginal_mean: f64,
    pub successive_mean: f64,
    /// Difference over its standard error.
    pub z: f64,
}

fn test_functions(state: &McmcState) -> Vec<(String, f64)> {
    let coef = state.coef.reconstruct();
    let mut out = Vec::with_capacity(2 * coef.len() + 1 + state.sigma[0].nrows());
    for (i, &b) in coef.as_slice().iter().enumerate() {
        out.push((format!("B[{i}]"), b));
        out.push((format!("B[{i}]^2"), b * b));
    }
    out.push(("log_tau".into(), state.tau.ln()));
    for i in 0..state.sigma[0].nrows() {
        out.push((format!("Sigma1[{i},{i}]"), state.sigma[0][(i, i)]));
    }
    out
}

fn simulate_data<R: Rng + ?Sized>(state: &McmcState, dims: &[usize], len: usize, rng: &mut R) -> Result<TensorSeries> {
    let model = Draw::from_state(0, state, false).model(dims)?;
    let zero = DenseTensor::zeros(dims);
    let path = model.simulate(len, std::slice::from_ref(&zero), rng)?;
    let mut obs = vec![zero];
    obs.extend(path.into_observations());
    TensorSeries::new(dims.to_vec(), obs)
}

/// Runs both simulators for `cycles` steps each and compares the means of every
/// test function: entries of `ℬ` and their squares, `log τ`, and the diagonal of `Σ_1`.
pub fn geweke_test(config: &GewekeConfig) -> Result<Vec<GewekeStat>> {
    let dims = &config.dims;
    config.priors.validate(dims)?;

    let mut rng = stream(config.seed, 0, Purpose::ModelGeneration);
    let mut marginal: Vec<Vec<f64>> = Vec::new();
    let mut names = Vec::new();
    for _ in 0..config.cycles {
        let state = config.priors.sample_state(dims, &mut rng)?;
        let f = test_functions(&state);
        if names.is_empty() {
            names = f.iter().map(|(n, _)| n.clone()).collect();
            marginal = vec![Vec::with_capacity(config.cycles); f.len()];
        }
        for (k, (_, v)) in f.into_iter().enumerate() {
            marginal[k].push(v);
        }
    }

    let mut rng = stream(config.seed, 1, Purpose::Sampler);
    let mut state = config.priors.sample_state(dims, &mut rng)?;
    let mut kernel = TauKernel::new(TauUpdate::Gig);
    let mut successive: Vec<Vec<f64>> = vec![Vec::with_capacity(config.cycles); names.len()];
    let warmup = DEFAULT_BURN_IN.min(config.cycles / 10);
    for c in 0..config.cycles + warmup {
        let series = simulate_data(&state, dims, config.len, &mut rng)?;
        let reg = Regression::new(&series)?;
        sweep(&reg, &config.priors, &mut state, &mut kernel, &mut rng).map_err(|e| e.at_iteration(c + 1))?;
        if c >= warmup {
            for (k, (_, v)) in test_functions(&state).into_iter().enumerate() {
                successive[k].push(v);
            }
        }
    }

    Ok(names
        .into_iter()
        .zip(marginal.iter().zip(&successive))
        .map(|(name, (m, s))| {
            let (mm, mv) = mean_var(m);
            let (sm, sv) = mean_var(s);
            let ess = effective_sample_size(&[s]).min(s.len() as f64);
            let se = (mv / m.len() as f64 + sv / ess).sqrt();
            GewekeStat { name, marginal_mean: mm, successive_mean: sm, z: (mm - sm) / se }
        })
        .collect())
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    (m, x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1.0))
}
