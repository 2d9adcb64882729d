//! The four subcommands. Each reads a validated [`RunConfig`] and writes its
//! outputs atomically into the output directory.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::AtomicBool;

use rayon::prelude::*;
use tensor_art::gibbs::{posterior_summary, PosteriorSummary, Sampler, Trace};
use tensor_art::irf::{draw_irf, irf, summarize_irfs, IrfSummary, ShockSpec};
use tensor_art::rng::{stream, Purpose};
use tensor_art::{ArtModel, TensorSeries};

use crate::atomic::write_json;
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::formats::{
    find_traces, load_model, load_tensor_series, load_trace, save_model, trace_path, write_irf_csv, write_series,
    TraceWriter,
};

pub const THREADS_ENV: &str = "TENSORART_THREADS";

/// Shared by all commands.
pub struct Context<'a> {
    pub quiet: bool,
    pub abort: Option<&'a AtomicBool>,
}

impl Context<'_> {
    fn note(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

/// Worker count: `TENSORART_THREADS` if set, otherwise the available parallelism.
pub fn worker_count() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::validation(format!("{THREADS_ENV} must be a positive integer, got {v:?}"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn pool(jobs: usize) -> Result<rayon::ThreadPool> {
    let n = worker_count()?.min(jobs.max(1));
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| CliError::validation(format!("cannot start worker pool: {e}")))
}

pub struct SimulateOutput {
    pub series: PathBuf,
    pub model: PathBuf,
    pub rho: f64,
}

/// Draws (or loads) a model and simulates a stationary path from it.
pub fn simulate(cfg: &RunConfig, ctx: &Context) -> Result<SimulateOutput> {
    let sim = &cfg.simulate;
    let seed = cfg.sampler.seed;
    if sim.length == 0 {
        return Err(CliError::validation("simulate.length must be positive"));
    }
    let model = match &sim.model {
        Some(path) => {
            let m = load_model(path)?;
            if m.dims() != cfg.dims.as_slice() {
                return Err(CliError::validation(format!(
                    "{}: model dims {:?} differ from config dims {:?}",
                    path.display(),
                    m.dims(),
                    cfg.dims
                )));
            }
            m
        }
        None => {
            if cfg.lags != 1 {
                return Err(CliError::validation("random model generation supports lags = 1 only"));
            }
            let rank = cfg.rank()?;
            let mut rng = stream(seed, 0, Purpose::ModelGeneration);
            ArtModel::random_stable(&cfg.dims, rank, sim.rho_bound, cfg.simulate_covariances()?, &mut rng)?.0
        }
    };
    let mut rng = stream(seed, 0, Purpose::Simulation);
    let series = model.simulate_stationary(sim.length, sim.burn_in, &mut rng)?;
    let ext = match sim.format {
        crate::formats::SeriesFormat::CsvLong => "csv",
        crate::formats::SeriesFormat::Ndjson => "ndjson",
    };
    let out = SimulateOutput {
        series: cfg.output.dir.join(format!("series.{ext}")),
        model: cfg.output.dir.join("model.json"),
        rho: model.check_stationarity().rho,
    };
    write_series(&out.series, sim.format, &series)?;
    save_model(&out.model, &model)?;
    ctx.note(format!(
        "simulated {} observations of dims {:?} (rho = {:.4}) into {}",
        series.len(),
        cfg.dims,
        out.rho,
        cfg.output.dir.display()
    ));
    Ok(out)
}

fn load_data(cfg: &RunConfig) -> Result<TensorSeries> {
    let data = cfg.data.as_ref().ok_or_else(|| CliError::validation("config: data.path is required"))?;
    let series = load_tensor_series(&data.path, data.format(), None)?;
    if series.dims() != cfg.dims.as_slice() {
        return Err(CliError::validation(format!(
            "{}: data dims {:?} differ from config dims {:?}",
            data.path.display(),
            series.dims(),
            cfg.dims
        )));
    }
    if series.len() < 2 {
        return Err(CliError::validation(format!("{}: need at least two observations", data.path.display())));
    }
    Ok(series)
}

pub struct FitOutput {
    pub traces: Vec<PathBuf>,
    pub summary: PathBuf,
    pub posterior: PosteriorSummary,
}

/// Runs `sampler.chains` chains in parallel; chain `k` writes `trace-k.ndjson`.
pub fn fit(cfg: &RunConfig, ctx: &Context) -> Result<FitOutput> {
    if cfg.lags != 1 {
        return Err(CliError::validation("estimation supports lags = 1 only"));
    }
    let priors = cfg.prior_config()?;
    let configs = (0..cfg.sampler.chains as u64).map(|k| cfg.sampler_config(k)).collect::<Result<Vec<_>>>()?;
    let series = load_data(cfg)?;
    let dir = &cfg.output.dir;
    let run_chain = |sc: tensor_art::gibbs::SamplerConfig| -> Result<(PathBuf, Trace)> {
        let path = trace_path(dir, sc.chain);
        let mut sampler = Sampler::new(&series, priors.clone(), sc)?;
        let mut writer = TraceWriter::create(&path)?;
        let mut draws = Vec::new();
        let meta = sampler.run_with(ctx.abort, |d| {
            writer.write(d).map_err(|e| tensor_art::Error::Domain(e.to_string()))?;
            draws.push(d.clone());
            Ok(())
        })?;
        writer.finish(&meta)?;
        ctx.note(format!("chain {} done: {} draws", meta.chain, draws.len()));
        Ok((path, Trace { meta, draws }))
    };
    let results: Vec<(PathBuf, Trace)> =
        pool(configs.len())?.install(|| configs.into_par_iter().map(run_chain).collect::<Result<Vec<_>>>())?;
    let (paths, traces): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let posterior = posterior_summary(&traces)?;
    let summary = dir.join("summary.json");
    write_json(&summary, &posterior)?;
    ctx.note(format!("rho(posterior mean) = {:.4}; summary in {}", posterior.rho_posterior_mean, summary.display()));
    Ok(FitOutput { traces: paths, summary, posterior })
}

fn load_traces(paths: Option<&Vec<PathBuf>>, dir: &Path) -> Result<Vec<Trace>> {
    let paths = match paths {
        Some(p) if !p.is_empty() => p.clone(),
        _ => find_traces(dir)?,
    };
    let traces = paths.iter().map(|p| load_trace(p)).collect::<Result<Vec<_>>>()?;
    if let Some(first) = traces.first() {
        if let Some((p, t)) = paths.iter().zip(&traces).find(|(_, t)| t.dims() != first.dims()) {
            return Err(CliError::validation(format!("{}: dims {:?} differ from {:?}", p.display(), t.dims(), first.dims())));
        }
    }
    Ok(traces)
}

/// Writes `irf.csv` with one row per method, horizon and response cell.
pub fn irf_command(cfg: &RunConfig, ctx: &Context) -> Result<(PathBuf, Vec<IrfSummary>)> {
    let spec = &cfg.irf;
    if spec.methods.is_empty() {
        return Err(CliError::validation("irf.methods must not be empty"));
    }
    let shock = ShockSpec::block(&cfg.shock_indices()?, cfg.shock_delta()?, cfg.total_dim())
        .map_err(|e| CliError::validation(format!("irf.shock: {e}")))?;
    let h = spec.horizon;
    let summaries = match &spec.model {
        Some(path) => {
            let model = load_model(path)?;
            if model.dims() != cfg.dims.as_slice() {
                return Err(CliError::validation(format!(
                    "{}: model dims {:?} differ from config dims {:?}",
                    path.display(),
                    model.dims(),
                    cfg.dims
                )));
            }
            spec.methods
                .iter()
                .map(|&m| Ok(summarize_irfs(m, &cfg.dims, &[irf(m, &model, &shock, h)?])?))
                .collect::<Result<Vec<_>>>()?
        }
        None => {
            let traces = load_traces(spec.traces.as_ref(), &cfg.output.dir)?;
            let dims = traces[0].dims().to_vec();
            if dims != cfg.dims {
                return Err(CliError::validation(format!("trace dims {dims:?} differ from config dims {:?}", cfg.dims)));
            }
            let draws: Vec<_> = traces.iter().flat_map(|t| &t.draws).collect();
            if draws.is_empty() {
                return Err(CliError::validation("traces contain no draws"));
            }
            let workers = pool(draws.len())?;
            let mut out = Vec::with_capacity(spec.methods.len());
            for &m in &spec.methods {
                let irfs = workers.install(|| {
                    draws
                        .par_iter()
                        .map(|d| draw_irf(m, &dims, &d.coefficient, &d.sigma, &shock, h))
                        .collect::<tensor_art::Result<Vec<_>>>()
                })?;
                out.push(summarize_irfs(m, &dims, &irfs)?);
            }
            out
        }
    };
    let path = cfg.output.dir.join("irf.csv");
    write_irf_csv(&path, &summaries)?;
    ctx.note(format!("wrote {}", path.display()));
    Ok((path, summaries))
}

/// Pools existing traces into `summary.json`.
pub fn summarize(cfg: &RunConfig, ctx: &Context) -> Result<(PathBuf, PosteriorSummary)> {
    let traces = load_traces(cfg.summarize.traces.as_ref(), &cfg.output.dir)?;
    let posterior = posterior_summary(&traces)?;
    let path = cfg.output.dir.join("summary.json");
    write_json(&path, &posterior)?;
    if !ctx.quiet {
        let mut out = std::io::stdout().lock();
        print_table(&mut out, &posterior).map_err(|e| CliError::io("stdout", e))?;
    }
    Ok((path, posterior))
}

pub fn print_table(w: &mut dyn Write, s: &PosteriorSummary) -> std::io::Result<()> {
    writeln!(w, "dims {:?}, {} chain(s), {} draws", s.dims, s.chains, s.draws)?;
    writeln!(w, "rho(posterior mean) {:.4}", s.rho_posterior_mean)?;
    writeln!(w, "{:<18} {:>12} {:>12} {:>10} {:>8}", "scalar", "mean", "sd", "ess", "rhat")?;
    for d in &s.diagnostics {
        let rhat = d.rhat.map_or_else(|| "-".to_string(), |r| format!("{r:.3}"));
        writeln!(w, "{:<18} {:>12.5} {:>12.5} {:>10.1} {:>8}", d.name, d.mean, d.sd, d.ess, rhat)?;
    }
    Ok(())
}
