//! Run configuration: a single JSON document with a `schema_version` field.
//! Relative paths are resolved against the directory holding the config file.

use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use tensor_art::gibbs::{PriorConfig, SamplerConfig, TauUpdate};
use tensor_art::irf::IrfMethod;

use crate::error::{CliError, Result};
use crate::formats::SeriesFormat;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    /// Response dims `(I_1, …, I_N)`.
    pub dims: Vec<usize>,
    /// Lag order; estimation supports 1.
    #[serde(default = "default_lags")]
    pub lags: usize,
    /// PARAFAC rank; required by `fit` and by `simulate` without a model file.
    #[serde(default)]
    pub rank: Option<usize>,
    #[serde(default)]
    pub priors: PriorOverrides,
    #[serde(default)]
    pub sampler: SamplerSection,
    #[serde(default)]
    pub data: Option<DataSection>,
    #[serde(default)]
    pub simulate: SimulateSection,
    #[serde(default)]
    pub irf: IrfSection,
    #[serde(default)]
    pub summarize: SummarizeSection,
    #[serde(default)]
    pub output: OutputSection,
}

fn default_lags() -> usize {
    1
}

/// Optional overrides of the default hyperparameters. Setting `alpha` alone also
/// moves `a_tau` and `b_tau`; explicit values win.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PriorOverrides {
    pub alpha: Option<f64>,
    pub a_tau: Option<f64>,
    pub b_tau: Option<f64>,
    pub a_lambda: Option<f64>,
    pub b_lambda: Option<f64>,
    pub nu: Option<Vec<f64>>,
    /// One row-major matrix per mode.
    pub psi: Option<Vec<Vec<Vec<f64>>>>,
    pub a_gamma: Option<f64>,
    pub b_gamma: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SamplerSection {
    pub iters: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub seed: u64,
    pub chains: usize,
    pub hmc_enabled: bool,
    pub leapfrog_steps: usize,
    pub target_accept: f64,
    pub store_marginals: bool,
}

impl Default for SamplerSection {
    fn default() -> Self {
        SamplerSection {
            iters: 100_000,
            burn_in: 30_000,
            thin: 2,
            seed: 0,
            chains: 1,
            hmc_enabled: false,
            leapfrog_steps: 10,
            target_accept: 0.7,
            store_marginals: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub path: PathBuf,
    /// Inferred from the extension when absent.
    #[serde(default)]
    pub format: Option<SeriesFormat>,
}

impl DataSection {
    pub fn format(&self) -> SeriesFormat {
        self.format.unwrap_or_else(|| SeriesFormat::from_path(&self.path))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimulateSection {
    pub length: usize,
    pub burn_in: usize,
    /// Random models are redrawn until their spectral radius is below this bound.
    pub rho_bound: f64,
    /// Use this model instead of drawing one.
    pub model: Option<PathBuf>,
    /// Mode covariances for random models (row-major); identity when absent.
    pub covariances: Option<Vec<Vec<Vec<f64>>>>,
    pub format: SeriesFormat,
}

impl Default for SimulateSection {
    fn default() -> Self {
        SimulateSection {
            length: 200,
            burn_in: tensor_art::model::DEFAULT_BURN_IN,
            rho_bound: 0.95,
            model: None,
            covariances: None,
            format: SeriesFormat::CsvLong,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IrfSection {
    /// Point IRFs of this model; otherwise the posterior over `traces`.
    pub model: Option<PathBuf>,
    /// Trace files; defaults to every `trace-*.ndjson` in the output directory.
    pub traces: Option<Vec<PathBuf>>,
    pub methods: Vec<IrfMethod>,
    pub horizon: usize,
    pub shock: ShockSection,
}

impl Default for IrfSection {
    fn default() -> Self {
        IrfSection {
            model: None,
            traces: None,
            methods: vec![IrfMethod::Girf, IrfMethod::Oirf],
            horizon: 10,
            shock: ShockSection::default(),
        }
    }
}

/// Jointly shocked cells (1-based multi-indices, leading the ordering in the
/// given order) and their shock sizes; sizes default to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
#[derive(Default)]
pub struct ShockSection {
    pub cells: Vec<Vec<usize>>,
    #[serde(default)]
    pub delta: Option<Vec<f64>>,
}


#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SummarizeSection {
    pub traces: Option<Vec<PathBuf>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("out") }
    }
}

fn rows_to_matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return Err(CliError::validation(format!("{what} must be a square matrix given as rows")));
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| CliError::validation(format!("config: {e}")))?;
        if cfg.schema_version != SCHEMA_VERSION {
            return Err(CliError::validation(format!(
                "config: unsupported schema_version {} (expected {SCHEMA_VERSION})",
                cfg.schema_version
            )));
        }
        if cfg.dims.is_empty() || cfg.dims.contains(&0) {
            return Err(CliError::validation(format!("config: dims {:?} must be nonempty and positive", cfg.dims)));
        }
        Ok(cfg)
    }

    /// Reads a config and resolves its relative paths against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::at_path(path, e))?;
        let mut cfg = RunConfig::from_json(&text)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.resolve_paths(&base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(d) = &mut self.data {
            fix(&mut d.path);
        }
        if let Some(m) = &mut self.simulate.model {
            fix(m);
        }
        if let Some(m) = &mut self.irf.model {
            fix(m);
        }
        for list in [&mut self.irf.traces, &mut self.summarize.traces].into_iter().flatten() {
            list.iter_mut().for_each(fix);
        }
        fix(&mut self.output.dir);
    }

    pub fn total_dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn rank(&self) -> Result<usize> {
        match self.rank {
            Some(r) if r > 0 => Ok(r),
            Some(_) => Err(CliError::validation("config: rank must be positive")),
            None => Err(CliError::validation("config: rank is required")),
        }
    }

    pub fn prior_config(&self) -> Result<PriorConfig> {
        let rank = self.rank()?;
        let o = &self.priors;
        let mut p = PriorConfig::default_for(&self.dims, rank);
        if let Some(alpha) = o.alpha {
            p = p.with_alpha(alpha, self.dims.len() + 1);
        }
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut p.a_tau, o.a_tau);
        set(&mut p.b_tau, o.b_tau);
        set(&mut p.a_lambda, o.a_lambda);
        set(&mut p.b_lambda, o.b_lambda);
        set(&mut p.a_gamma, o.a_gamma);
        set(&mut p.b_gamma, o.b_gamma);
        if let Some(nu) = &o.nu {
            p.nu = nu.clone();
        }
        if let Some(psi) = &o.psi {
            p.psi = psi
                .iter()
                .enumerate()
                .map(|(j, rows)| rows_to_matrix(rows, &format!("priors.psi[{j}]")))
                .collect::<Result<_>>()?;
        }
        p.validate(&self.dims).map_err(|e| CliError::validation(format!("priors: {e}")))?;
        Ok(p)
    }

    pub fn sampler_config(&self, chain: u64) -> Result<SamplerConfig> {
        let s = &self.sampler;
        let mut c = SamplerConfig::new(s.iters, s.burn_in, s.thin, s.seed);
        c.chain = chain;
        c.store_marginals = s.store_marginals;
        if s.hmc_enabled {
            c.tau_update = TauUpdate::Hmc { leapfrog_steps: s.leapfrog_steps, target_accept: s.target_accept };
        }
        c.validate().map_err(|e| CliError::validation(format!("sampler: {e}")))?;
        if s.chains == 0 {
            return Err(CliError::validation("sampler: chains must be at least 1"));
        }
        Ok(c)
    }

    pub fn simulate_covariances(&self) -> Result<Vec<DMatrix<f64>>> {
        match &self.simulate.covariances {
            None => Ok(self.dims.iter().map(|&d| DMatrix::identity(d, d)).collect()),
            Some(list) => {
                if list.len() != self.dims.len() {
                    return Err(CliError::validation(format!(
                        "simulate.covariances: {} matrices for {} modes",
                        list.len(),
                        self.dims.len()
                    )));
                }
                list.iter()
                    .enumerate()
                    .map(|(j, rows)| rows_to_matrix(rows, &format!("simulate.covariances[{j}]")))
                    .collect()
            }
        }
    }

    /// Flat zero-based indices of the shocked cells.
    pub fn shock_indices(&self) -> Result<Vec<usize>> {
        let cells = &self.irf.shock.cells;
        if cells.is_empty() {
            return Err(CliError::validation("irf.shock.cells must list at least one cell"));
        }
        let mut out = Vec::with_capacity(cells.len());
        for cell in cells {
            if cell.len() != self.dims.len() || cell.iter().zip(&self.dims).any(|(&i, &d)| i == 0 || i > d) {
                return Err(CliError::validation(format!(
                    "irf.shock cell {cell:?} is outside dims {:?} (indices are 1-based)",
                    self.dims
                )));
            }
            let flat = cell.iter().zip(&self.dims).rev().fold(0, |acc, (&i, &d)| acc * d + (i - 1));
            if out.contains(&flat) {
                return Err(CliError::validation(format!("irf.shock cell {cell:?} listed twice")));
            }
            out.push(flat);
        }
        Ok(out)
    }

    pub fn shock_delta(&self) -> Result<Vec<f64>> {
        let n = self.irf.shock.cells.len();
        match &self.irf.shock.delta {
            None => Ok(vec![1.0; n]),
            Some(d) if d.len() == n && d.iter().all(|v| v.is_finite()) => Ok(d.clone()),
            Some(d) => Err(CliError::validation(format!(
                "irf.shock.delta has {} finite values required for {n} cells, got {d:?}",
                n
            ))),
        }
    }
}
