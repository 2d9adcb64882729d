use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicBool, Ordering};

use clap::{Args, Parser, Subcommand};
use tensor_art_cli::commands::{self, Context};
use tensor_art_cli::error::{CliError, EXIT_OK};
use tensor_art_cli::RunConfig;

static ABORT: AtomicBool = AtomicBool::new(false);

#[derive(Parser)]
#[command(name = "tensorart", version, about = "Tensor autoregressive models: simulate, fit, impulse responses")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Draw or load a model and simulate a series from it
    Simulate(Common),
    /// Run the Gibbs sampler on a data set
    Fit(Common),
    /// Impulse responses from a model file or posterior traces
    Irf(Common),
    /// Summarize existing traces
    Summarize(Common),
}

#[derive(Args)]
struct Common {
    /// JSON run configuration
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the number of chains
    #[arg(long)]
    chains: Option<usize>,
    /// Suppress progress messages
    #[arg(long)]
    quiet: bool,
}

impl Common {
    fn load(&self) -> Result<RunConfig, CliError> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.sampler.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.output.dir = out.clone();
        }
        if let Some(chains) = self.chains {
            cfg.sampler.chains = chains;
        }
        Ok(cfg)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let common = match &cli.command {
        Command::Simulate(c) | Command::Fit(c) | Command::Irf(c) | Command::Summarize(c) => c,
    };
    let cfg = common.load()?;
    let ctx = Context { quiet: common.quiet, abort: Some(&ABORT) };
    match cli.command {
        Command::Simulate(_) => commands::simulate(&cfg, &ctx).map(drop),
        Command::Fit(_) => commands::fit(&cfg, &ctx).map(drop),
        Command::Irf(_) => commands::irf_command(&cfg, &ctx).map(drop),
        Command::Summarize(_) => commands::summarize(&cfg, &ctx).map(drop),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let _ = ctrlc::set_handler(|| ABORT.store(true, Ordering::SeqCst));
    match run(cli) {
        Ok(()) => ExitCode::from(EXIT_OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
