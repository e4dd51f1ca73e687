use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use trapnls::lab::experiment::{self, ExperimentReport};
use trapnls::lab::{ExperimentConfig, ExperimentKind};
use trapnls::Error;

#[derive(Parser)]
#[command(
    name = "trapnls",
    version,
    about = "Radial NLS in a harmonic trap: ground states, evolution, experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML experiment config.
    #[arg(long, short)]
    config: PathBuf,
    /// Overrides `output_dir` from the config.
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve for the ground state; writes phi.csv and groundstate.json.
    Groundstate(Common),
    /// Evolve the configured initial data; writes diagnostics.csv.
    Evolve(Common),
    /// Place the initial data in A+, A- or neither.
    Classify(Common),
    /// Run the experiment named by `kind` in the config.
    Experiment {
        #[command(flatten)]
        common: Common,
        /// Dilation for the instability experiment.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Audit the structural conditions on the nonlinearity.
    CheckConditions(Common),
}

fn load(common: &Common) -> Result<ExperimentConfig, Error> {
    let mut cfg = ExperimentConfig::load(&common.config)?;
    if let Some(dir) = &common.output_dir {
        cfg.output_dir = dir.clone();
    }
    Ok(cfg)
}

fn run(command: &Command) -> Result<(&'static str, ExperimentReport), Error> {
    Ok(match command {
        Command::Groundstate(c) => ("groundstate", experiment::run_groundstate(&load(c)?)?),
        Command::Evolve(c) => ("evolve", experiment::run_evolve(&load(c)?)?),
        Command::Classify(c) => ("classify", experiment::run_classify(&load(c)?)?),
        Command::CheckConditions(c) => (
            "check-conditions",
            experiment::run_check_conditions(&load(c)?)?,
        ),
        Command::Experiment { common, lambda } => {
            let cfg = load(common)?;
            let report = match (cfg.kind, lambda) {
                (ExperimentKind::Instability, Some(l)) => {
                    experiment::run_instability(&cfg, Some(*l))?
                }
                _ => experiment::run_experiment(&cfg)?,
            };
            ("experiment", report)
        }
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli.command) {
        Ok((name, report)) => {
            let line = json!({
                "command": name,
                "kind": report.kind,
                "summary": report.summary,
                "files": report.files,
            });
            println!("{line}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            log::debug!("{e:?}");
            eprintln!("error: {e}");
            let code = if e.is_numerical() { 3 } else { 2 };
            println!("{}", json!({ "error": e.to_string(), "exit_code": code }));
            ExitCode::from(code)
        }
    }
}
