use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use htm::{execute, CliError, Command, ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(name = "htm", version, about = "Singular Trudinger-Moser experiments on the Heisenberg group")]
struct Cli {
    #[command(subcommand)]
    command: Sub,

    /// JSON experiment config; flags override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    alpha: Option<f64>,
    #[arg(long, global = true)]
    beta: Option<f64>,
    #[arg(long, global = true)]
    tau: Option<f64>,
    /// Covering radius for `glue`.
    #[arg(long, global = true)]
    r: Option<f64>,
    /// Largest Moser index for `moser-scan`.
    #[arg(long, global = true)]
    kmax: Option<u64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// Group-law, gauge, gradient and commutator property sweep.
    GeometryCheck,
    /// Greedy nets: separation, covering and multiplicity.
    Covering,
    /// Gradient bound, plateau and support of the ball cutoffs.
    CutoffCheck,
    /// The functional on a preset field.
    Functional,
    /// Bounded/growing classification along the Moser family.
    MoserScan,
    /// Local-to-global assembly on a preset field.
    Glue,
}

fn command(s: Sub) -> Command {
    match s {
        Sub::GeometryCheck => Command::GeometryCheck,
        Sub::Covering => Command::Covering,
        Sub::CutoffCheck => Command::CutoffCheck,
        Sub::Functional => Command::Functional,
        Sub::MoserScan => Command::MoserScan,
        Sub::Glue => Command::Glue,
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(w) = cli.workers {
        if w == 0 {
            return Err(CliError::Config("--workers must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build_global()
            .map_err(|e| CliError::Config(format!("cannot start {w} workers: {e}")))?;
    }
    let mut config = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    config.apply(&Overrides {
        out: cli.out,
        seed: cli.seed,
        alpha: cli.alpha,
        beta: cli.beta,
        tau: cli.tau,
        r: cli.r,
        kmax: cli.kmax,
    });
    execute(command(cli.command), &config)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(3);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
