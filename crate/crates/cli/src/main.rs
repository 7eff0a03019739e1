use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use netlb::network::Algorithm;
use netlb::sim::{TraceLevel, WindowChoice};
use netlb::{ConfigError, SimError};

mod cmd;
mod output;
mod table;

#[derive(Debug, Parser)]
#[command(name = "netlb", version, about = "Throughput-optimal load-balancing experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one scenario; writes metrics, traces and a manifest.
    Run(RunArgs),
    /// Run several algorithms over several seeds and tabulate the results.
    Compare(CompareArgs),
    /// Vary one parameter and write a long-format CSV.
    Sweep(SweepArgs),
    /// Lint a scenario file.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Push one link state through the allocator and print each step.
    AllocDebug(AllocArgs),
}

#[derive(Debug, Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    /// Output directory.
    #[arg(long, env = "NETLB_OUT_DIR", default_value = "netlb-out")]
    out: PathBuf,
    /// Averaging window for per-queue backlogs.
    #[arg(long, value_enum, default_value_t = Window::Warmup)]
    window: Window,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Window {
    Warmup,
    Converged,
}

impl From<Window> for WindowChoice {
    fn from(w: Window) -> Self {
        match w {
            Window::Warmup => WindowChoice::Warmup,
            Window::Converged => WindowChoice::Converged,
        }
    }
}

#[derive(Debug, Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    seed: Option<u64>,
    /// Override the configured algorithm.
    #[arg(long)]
    algorithm: Option<Algorithm>,
    /// none, decimated[:N] or full
    #[arg(long, default_value = "none")]
    trace: TraceLevel,
}

#[derive(Debug, Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', required = true)]
    algorithms: Vec<Algorithm>,
    #[arg(long, value_delimiter = ',', default_values_t = [1u64, 2, 3, 4, 5])]
    seeds: Vec<u64>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// T, K, arrival_scale or alpha
    #[arg(long)]
    param: String,
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    values: Vec<String>,
    /// Defaults to the configured algorithm.
    #[arg(long, value_delimiter = ',')]
    algorithms: Vec<Algorithm>,
    #[arg(long, value_delimiter = ',', default_values_t = [1u64, 2, 3, 4, 5])]
    seeds: Vec<u64>,
}

#[derive(Debug, Args)]
struct AllocArgs {
    /// commodity:q_local:q_next:prev, repeatable
    #[arg(long = "demand", required = true)]
    demands: Vec<String>,
    /// Interval budget T * c.
    #[arg(long)]
    budget: u64,
    #[arg(long, default_value_t = 10.0)]
    k_max: f64,
    #[arg(long, default_value = "algorithm1")]
    algorithm: Algorithm,
    /// Also run the exhaustive oracle.
    #[arg(long)]
    oracle: bool,
    /// Print the allocation as JSON instead of the step log.
    #[arg(long)]
    json: bool,
}

fn dispatch(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Run(a) => cmd::run(&a.common, a.seed, a.algorithm, a.trace),
        Command::Compare(a) => cmd::compare(&a.common, &a.algorithms, &a.seeds),
        Command::Sweep(a) => cmd::sweep(&a.common, &a.param, &a.values, &a.algorithms, &a.seeds),
        Command::Validate { config } => cmd::validate(&config),
        Command::AllocDebug(a) => cmd::alloc_debug(&a),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<cmd::Usage>() || cause.is::<ConfigError>() {
            return 2;
        }
        if let Some(SimError::Config(_) | SimError::Unsupported(_)) = cause.downcast_ref::<SimError>() {
            return 2;
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
