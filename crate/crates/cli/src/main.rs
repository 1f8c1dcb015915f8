use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use plap_core::io::{self, ExperimentConfig, Outcome, RunConfig, RunOptions, Summary};
use plap_core::Error;

/// Nonlocal p-Laplacian evolution experiments.
#[derive(Parser)]
#[command(name = "plap", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a configuration file.
    Run {
        config: PathBuf,
        /// Output directory (default: config, then $PLAP_OUT_DIR, then ./plap-out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads.
        #[arg(long)]
        jobs: Option<usize>,
        /// Seed for randomized experiments (overrides the config).
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Parse a configuration file and print the effective configuration.
    Validate { config: PathBuf },
    /// Run a sweep configuration.
    Sweep {
        config: PathBuf,
        /// Worker threads.
        #[arg(long)]
        jobs: Option<usize>,
    },
}

fn load(path: &Path) -> Result<RunConfig, Error> {
    let text =
        std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    io::parse_config(&text)
}

fn exit(code: i32) -> ExitCode {
    ExitCode::from(code as u8)
}

fn config_failure(err: &Error, out: Option<&Path>) -> ExitCode {
    eprintln!("error: {err}");
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(io::OUT_DIR_ENV).map(PathBuf::from));
    if let Some(dir) = dir {
        let summary = Summary::config_error(err);
        let _ = std::fs::create_dir_all(&dir)
            .and_then(|_| std::fs::write(dir.join("summary.json"), summary.to_json()));
    }
    exit(Outcome::ConfigError.exit_code())
}

fn execute(config: &RunConfig, options: &RunOptions) -> ExitCode {
    match io::run(config, options) {
        Ok(summary) => {
            let dir = io::resolve_out_dir(config, options.out_dir.as_deref());
            println!(
                "{}: {} (exit {}) -> {}",
                summary.experiment,
                outcome_label(summary.outcome),
                summary.exit_code,
                dir.display()
            );
            if let Some(err) = &summary.error {
                eprintln!("error: {err}");
            }
            exit(summary.exit_code)
        }
        Err(err) => {
            eprintln!("error: {err}");
            exit(Outcome::ConfigError.exit_code())
        }
    }
}

fn outcome_label(outcome: Outcome) -> &'static str {
    match outcome {
        Outcome::Completed => "completed",
        Outcome::Pass => "pass",
        Outcome::ProbeFail => "probe-fail",
        Outcome::BlewUp => "blew-up",
        Outcome::Failed => "failed",
        Outcome::ConfigError => "config-error",
    }
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run {
            config,
            out,
            jobs,
            seed,
        } => match load(&config) {
            Ok(cfg) => execute(
                &cfg,
                &RunOptions {
                    out_dir: out,
                    jobs,
                    seed,
                },
            ),
            Err(err) => config_failure(&err, out.as_deref()),
        },
        Command::Validate { config } => match load(&config) {
            Ok(cfg) => {
                println!("{}", cfg.to_json());
                ExitCode::SUCCESS
            }
            Err(err) => {
                eprintln!("error: {err}");
                exit(Outcome::ConfigError.exit_code())
            }
        },
        Command::Sweep { config, jobs } => match load(&config) {
            Ok(cfg) if matches!(cfg.experiment, ExperimentConfig::Sweep { .. }) => execute(
                &cfg,
                &RunOptions {
                    jobs,
                    ..RunOptions::default()
                },
            ),
            Ok(cfg) => config_failure(
                &Error::Config(format!(
                    "`sweep` needs a sweep experiment, found `{}`",
                    cfg.experiment.name()
                )),
                None,
            ),
            Err(err) => config_failure(&err, None),
        },
    }
}
