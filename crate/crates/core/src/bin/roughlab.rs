use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rough_sparse::lab::{self, ExperimentConfig, SweepResult};

#[derive(Parser)]
#[command(name = "roughlab", about = "Numerical experiments for rough singular integrals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Weak-type norm of the lambda-maximal truncation across lambda.
    LambdaSweep(Common),
    /// Operator norm of the rough-minus-mollified split across epsilon.
    EpsSplit(Common),
    /// Sparse domination on random function pairs.
    SparseCheck(Common),
    /// Empirical weak (1,1) quotients.
    WeakNorm(Common),
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

fn run(cli: Cli) -> rough_sparse::Result<SweepResult> {
    let (runner, common): (lab::Runner, Common) = match cli.command {
        Command::LambdaSweep(c) => (lab::run_lambda_sweep, c),
        Command::EpsSplit(c) => (lab::run_eps_split, c),
        Command::SparseCheck(c) => (lab::run_sparse_check, c),
        Command::WeakNorm(c) => (lab::run_weak_norm, c),
    };
    if common.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(common.threads).build_global().ok();
    }
    let cfg = ExperimentConfig::load(&common.config)?;
    let result = runner(&cfg, common.seed)?;
    result.write(&common.out)?;
    Ok(result)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(result) => {
            for c in &result.checks {
                let status = match (c.passed, c.asserted) {
                    (_, false) => "INFO",
                    (true, _) => "PASS",
                    (false, _) => "FAIL",
                };
                println!("{status} {}: {}", c.name, c.detail);
            }
            if result.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
