use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::sampler::{Draw, Trace};
use crate::error::{Error, Result};
use crate::linalg::spectral_radius;

/// Linear-interpolation quantile of sorted data (type 7).
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sample_var(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let m = mean(x);
    x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (x.len() - 1) as f64
}

fn autocov(x: &[f64], m: f64, lag: usize) -> f64 {
    let n = x.len();
    x[..n - lag].iter().zip(&x[lag..]).map(|(a, b)| (a - m) * (b - m)).sum::<f64>() / n as f64
}

/// Multi-chain effective sample size with Geyer's initial monotone sequence
/// truncation. All chains must have the same length.
pub fn effective_sample_size(chains: &[&[f64]]) -> f64 {
    let m = chains.len();
    let n = chains.first().map_or(0, |c| c.len());
    if m == 0 || n < 4 || chains.iter().any(|c| c.len() != n) {
        return (m * n) as f64;
    }
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let w = chains.iter().map(|c| sample_var(c)).sum::<f64>() / m as f64;
    let b_over_n = if m > 1 { sample_var(&means) } else { 0.0 };
    let var_plus = (n - 1) as f64 / n as f64 * w + b_over_n;
    if var_plus <= 0.0 || !var_plus.is_finite() {
        return (m * n) as f64;
    }
    let rho = |t: usize| {
        let acov = chains.iter().zip(&means).map(|(c, &mu)| autocov(c, mu, t)).sum::<f64>() / m as f64;
        1.0 - (w - acov) / var_plus
    };
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut t = 0;
    while t + 1 < n {
        let mut pair = rho(t) + rho(t + 1);
        if t == 0 {
            // rho(0) differs from one only by the (n-1)/n bias of the variance estimate
            pair = 1.0 + rho(1);
        }
        if pair < 0.0 {
            break;
        }
        pair = pair.min(prev);
        prev = pair;
        sum += pair;
        t += 2;
    }
    let tau = (2.0 * sum - 1.0).max(1.0 / ((m * n) as f64).log10().max(1.0));
    (m * n) as f64 / tau
}

/// Split-R̂: each chain is halved and the Gelman-Rubin ratio computed over the halves.
pub fn split_rhat(chains: &[&[f64]]) -> f64 {
    let half = chains.iter().map(|c| c.len() / 2).min().unwrap_or(0);
    if half < 2 {
        return f64::NAN;
    }
    let mut parts: Vec<&[f64]> = Vec::with_capacity(2 * chains.len());
    for c in chains {
        parts.push(&c[..half]);
        parts.push(&c[c.len() - half..]);
    }
    let means: Vec<f64> = parts.iter().map(|p| mean(p)).collect();
    let w = parts.iter().map(|p| sample_var(p)).sum::<f64>() / parts.len() as f64;
    let b = half as f64 * sample_var(&means);
    if w <= 0.0 {
        return if b <= 0.0 { 1.0 } else { f64::INFINITY };
    }
    let var_plus = (half - 1) as f64 / half as f64 * w + b / half as f64;
    (var_plus / w).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EntrySummary {
    pub mean: Vec<f64>,
    pub sd: Vec<f64>,
    pub median: Vec<f64>,
    pub q05: Vec<f64>,
    pub q16: Vec<f64>,
    pub q84: Vec<f64>,
    pub q95: Vec<f64>,
}

impl EntrySummary {
    /// Summaries of each column of `draws[k][entry]`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let width = rows.first().map_or(0, |r| r.len());
        let mut s = EntrySummary {
            mean: Vec::with_capacity(width),
            sd: Vec::with_capacity(width),
            median: Vec::with_capacity(width),
            q05: Vec::with_capacity(width),
            q16: Vec::with_capacity(width),
            q84: Vec::with_capacity(width),
            q95: Vec::with_capacity(width),
        };
        let mut col = Vec::with_capacity(rows.len());
        for e in 0..width {
            col.clear();
            col.extend(rows.iter().map(|r| r[e]));
            s.mean.push(mean(&col));
            s.sd.push(sample_var(&col).sqrt());
            col.sort_by(f64::total_cmp);
            s.median.push(quantile_sorted(&col, 0.5));
            s.q05.push(quantile_sorted(&col, 0.05));
            s.q16.push(quantile_sorted(&col, 0.16));
            s.q84.push(quantile_sorted(&col, 0.84));
            s.q95.push(quantile_sorted(&col, 0.95));
        }
        s
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalarDiagnostics {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub ess: f64,
    /// Not defined for fewer than four draws per chain.
    pub rhat: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub dims: Vec<usize>,
    pub chains: usize,
    pub draws: usize,
    /// Entrywise summary of `vec(ℬ)`.
    pub coefficient: EntrySummary,
    /// Entrywise summaries of `vec(Σ_j)`, scale-normalized so `Σ_{j,11} = 1` for `j ≥ 2`.
    pub sigma: Vec<EntrySummary>,
    /// Spectral radius of the posterior-mean coefficient as a VAR matrix.
    pub rho_posterior_mean: f64,
    pub diagnostics: Vec<ScalarDiagnostics>,
}

impl PosteriorSummary {
    pub fn coefficient_mean_matrix(&self) -> DMatrix<f64> {
        let n: usize = self.dims.iter().product();
        DMatrix::from_column_slice(n, n, &self.coefficient.mean)
    }
}

/// `Σ_j` with the scale of modes `2..N` moved into `Σ_1`.
pub fn normalized_sigma(sigma: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
    let mut out: Vec<DMatrix<f64>> = sigma.to_vec();
    let mut carry = 1.0;
    for s in out.iter_mut().skip(1) {
        let c = s[(0, 0)];
        if c > 0.0 {
            *s /= c;
            carry *= c;
        }
    }
    if let Some(first) = out.first_mut() {
        *first *= carry;
    }
    out
}

fn monitored(d: &Draw) -> [(&'static str, f64); 4] {
    let norm = d.coefficient.iter().map(|x| x * x).sum::<f64>().sqrt();
    [
        ("log_tau", d.tau.ln()),
        ("log_gamma", d.gamma.ln()),
        ("coefficient_norm", norm),
        ("spectral_radius", spectral_radius(&d.var_matrix())),
    ]
}

/// Posterior summary pooled over one or more chains of identical shape.
pub fn posterior_summary(traces: &[Trace]) -> Result<PosteriorSummary> {
    let first = traces.first().ok_or_else(|| Error::domain("no traces to summarize"))?;
    if traces.iter().any(|t| t.is_empty()) {
        return Err(Error::domain("cannot summarize an empty trace"));
    }
    let dims = first.dims().to_vec();
    if traces.iter().any(|t| t.dims() != dims) {
        return Err(Error::domain("traces have different dims"));
    }
    let all: Vec<&Draw> = traces.iter().flat_map(|t| &t.draws).collect();
    let total: usize = dims.iter().product();
    if all.iter().any(|d| d.coefficient.len() != total * total || d.sigma.len() != dims.len()) {
        return Err(Error::domain("draw shapes do not match the trace dims"));
    }

    let coef_rows: Vec<Vec<f64>> = all.iter().map(|d| d.coefficient.clone()).collect();
    let coefficient = EntrySummary::from_rows(&coef_rows);
    let normalized: Vec<Vec<DMatrix<f64>>> = all.iter().map(|d| normalized_sigma(&d.sigma)).collect();
    let sigma = (0..dims.len())
        .map(|j| {
            let rows: Vec<Vec<f64>> = normalized.iter().map(|s| s[j].as_slice().to_vec()).collect();
            EntrySummary::from_rows(&rows)
        })
        .collect();
    let mean_a = DMatrix::from_column_slice(total, total, &coefficient.mean);

    // per-chain series of the monitored scalars, truncated to a common length
    let len = traces.iter().map(|t| t.len()).min().unwrap_or(0);
    let series: Vec<Vec<[(&'static str, f64); 4]>> =
        traces.iter().map(|t| t.draws[..len].iter().map(monitored).collect()).collect();
    let diagnostics = (0..4)
        .map(|k| {
            let per_chain: Vec<Vec<f64>> = series.iter().map(|c| c.iter().map(|m| m[k].1).collect()).collect();
            let refs: Vec<&[f64]> = per_chain.iter().map(|c| c.as_slice()).collect();
            let pooled: Vec<f64> = per_chain.concat();
            let rhat = split_rhat(&refs);
            ScalarDiagnostics {
                name: series[0][0][k].0.to_string(),
                mean: mean(&pooled),
                sd: sample_var(&pooled).sqrt(),
                ess: effective_sample_size(&refs),
                rhat: rhat.is_finite().then_some(rhat),
            }
        })
        .collect();

    Ok(PosteriorSummary {
        dims,
        chains: traces.len(),
        draws: all.len(),
        coefficient,
        sigma,
        rho_posterior_mean: spectral_radius(&mean_a),
        diagnostics,
    })
}
