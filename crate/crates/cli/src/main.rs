//! `stochfix run <config>` and `stochfix validate <config>`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use stochfix::experiment::{run_experiment, validate_only, ExperimentConfig};
use stochfix::Error;

const THREADS_ENV: &str = "STOCHFIX_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "stochfix",
    version,
    about = "Stochastic Halpern and KM fixed-point experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the ensemble and write <prefix>_trace.csv and <prefix>_summary.txt.
    Run {
        config: PathBuf,
        /// Override the number of trials.
        #[arg(long)]
        trials: Option<usize>,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the output prefix.
        #[arg(long)]
        out: Option<String>,
    },
    /// Check the schedule conditions and preview the theorem constants.
    Validate { config: PathBuf },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::OracleFailed(_) | Error::SingularSystem(_) => 2,
        Error::Diverged { .. } => 3,
        _ => 1,
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| format!("{THREADS_ENV}={raw:?} is not a thread count"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| format!("cannot start {n} worker threads: {e}"))
}

fn load(path: &Path) -> Result<ExperimentConfig, ExitCode> {
    ExperimentConfig::load(path).map_err(|e| {
        eprintln!("error: {e}");
        ExitCode::from(exit_code(&e))
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(1);
    }
    match cli.command {
        Command::Run {
            config,
            trials,
            seed,
            out,
        } => {
            let mut cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            if let Some(t) = trials {
                if let Err(e) = cfg.set_trials(t) {
                    eprintln!("error: {e}");
                    return ExitCode::from(1);
                }
            }
            if let Some(s) = seed {
                cfg.set_seed(s);
            }
            if let Some(o) = out {
                cfg.set_prefix(o);
            }
            let outcome = match run_experiment(&cfg) {
                Ok(o) => o,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(exit_code(&e));
                }
            };
            match outcome.write(&cfg.prefix()) {
                Ok((trace, summary)) => {
                    println!("wrote {}", trace.display());
                    println!("wrote {}", summary.display());
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            }
        }
        Command::Validate { config } => {
            let cfg = match load(&config) {
                Ok(c) => c,
                Err(code) => return code,
            };
            match validate_only(&cfg) {
                Ok(v) => {
                    print!("{}", v.render());
                    if v.conditions_hold {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(4)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(exit_code(&e))
                }
            }
        }
    }
}
