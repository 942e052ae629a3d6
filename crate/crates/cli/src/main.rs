//! `firerisk`: command-line pipeline from raw incident tables to occurrence
//! models, consequence classifiers, evaluation reports and attributions.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use firerisk::targets::TargetKind;

use config::RunConfig;

#[derive(Parser)]
#[command(name = "firerisk", version, about = "Fire occurrence and consequence modeling pipeline")]
struct Cli {
    /// TOML run configuration.
    #[arg(short, long, global = true, default_value = "firerisk.toml")]
    config: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic corpus into <output>/data.
    Synth,
    /// Load, filter and join the incident tables.
    Ingest {
        /// Generate the synthetic corpus first and ingest it.
        #[arg(long)]
        synthetic: bool,
    },
    /// Split train/test and derive spread, injury and loss labels.
    Targets,
    /// County-month incidence rates per 100,000 building units.
    Rates,
    /// Fit national, seasonal and regional occurrence GAMs.
    FitGam {
        /// Rates CSV; defaults to <output>/rates/rates.csv.
        #[arg(long)]
        rates: Option<PathBuf>,
    },
    /// Fit FireCat and the baseline, and evaluate both on the test split.
    FitFirecat {
        #[arg(long, value_parser = parse_target)]
        target: Option<TargetKind>,
    },
    /// Re-evaluate saved models on the test split.
    Evaluate {
        #[arg(long, value_parser = parse_target)]
        target: Option<TargetKind>,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// SHAP values, factor rankings, category effects and partial dependence.
    Explain {
        #[arg(long, value_parser = parse_target)]
        target: Option<TargetKind>,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Two-factor partial dependence grid for one model.
    Pdp2 {
        #[arg(long, value_parser = parse_target)]
        target: TargetKind,
        #[arg(long)]
        fx: String,
        #[arg(long)]
        fy: String,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

fn parse_target(s: &str) -> Result<TargetKind, String> {
    TargetKind::parse(s).map_err(|e| e.to_string())
}

fn run(cli: Cli) -> firerisk::Result<()> {
    let cfg = RunConfig::from_path(&cli.config)?;
    match cli.command {
        Command::Synth => commands::synth(&cfg),
        Command::Ingest { synthetic } => commands::ingest(&cfg, synthetic),
        Command::Targets => commands::targets(&cfg),
        Command::Rates => commands::rates(&cfg),
        Command::FitGam { rates } => commands::fit_gam_cmd(&cfg, rates.as_deref()),
        Command::FitFirecat { target } => commands::fit_firecat_cmd(&cfg, target),
        Command::Evaluate { target, model } => commands::evaluate(&cfg, target, model.as_deref()),
        Command::Explain { target, model } => commands::explain(&cfg, target, model.as_deref()),
        Command::Pdp2 {
            target,
            fx,
            fy,
            points,
            model,
        } => commands::pdp2_cmd(&cfg, target, &fx, &fy, points, model.as_deref()),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_user_error() { 2 } else { 1 })
        }
    }
}
