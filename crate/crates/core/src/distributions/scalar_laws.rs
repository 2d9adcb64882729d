use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma, StandardNormal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

pub fn standard_normal_vec<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

/// `Gamma(shape, rate)`, density `∝ x^{shape-1} e^{-rate x}`.
pub fn gamma_sample<R: Rng + ?Sized>(shape: f64, rate: f64, rng: &mut R) -> Result<f64> {
    if !(shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite()) {
        return Err(Error::domain(format!("gamma needs positive finite shape and rate, got ({shape}, {rate})")));
    }
    let g = Gamma::new(shape, 1.0 / rate).map_err(|e| Error::domain(format!("gamma: {e}")))?;
    Ok(g.sample(rng))
}

pub fn gamma_logpdf(x: f64, shape: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

/// Density of `1/X` with `X ~ Gamma(shape, rate)`.
pub fn inverse_gamma_logpdf(x: f64, shape: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        return f64::NEG_INFINITY;
    }
    shape * rate.ln() - ln_gamma(shape) - (shape + 1.0) * x.ln() - rate / x
}

pub fn exponential_sample<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> Result<f64> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::domain(format!("exponential rate must be positive, got {rate}")));
    }
    let e = Exp::new(rate).map_err(|e| Error::domain(format!("exponential: {e}")))?;
    Ok(e.sample(rng))
}

pub fn exponential_logpdf(x: f64, rate: f64) -> f64 {
    if x < 0.0 {
        return f64::NEG_INFINITY;
    }
    rate.ln() - rate * x
}

/// Dirichlet draw by normalizing independent `Gamma(α_r, 1)` variates.
pub fn dirichlet_sample<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    if alpha.is_empty() {
        return Err(Error::domain("dirichlet needs at least one concentration"));
    }
    let g: Vec<f64> = alpha.iter().map(|&a| gamma_sample(a, 1.0, rng)).collect::<Result<_>>()?;
    let s: f64 = g.iter().sum();
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::numerical("dirichlet normalizer underflowed"));
    }
    Ok(g.into_iter().map(|x| x / s).collect())
}
