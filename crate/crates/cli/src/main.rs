mod commands;
mod config;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{GlobalArgs, RunConfig};

/// Curate Git repositories into engineered and not-engineered projects.
#[derive(Debug, Parser)]
#[command(name = "phantom", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Clone repositories from a manifest and store their commit logs.
    Ingest(commands::IngestArgs),
    /// Turn stored logs into the feature table.
    Extract(commands::ExtractArgs),
    /// Fit one model per selected measure at --threshold.
    Fit(commands::FitArgs),
    /// Fit across the threshold grid and keep the best model per measure.
    Sweep(commands::SweepArgs),
    /// Classify feature rows with fitted models.
    Predict(commands::PredictArgs),
    /// Score predictions against ground-truth labels.
    Evaluate(commands::EvaluateArgs),
    /// Summarise predictions.
    Report(commands::ReportArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = RunConfig::resolve(&cli.global).and_then(|config| match cli.command {
        Command::Ingest(a) => commands::ingest(&config, &a),
        Command::Extract(a) => commands::extract(&config, &a),
        Command::Fit(a) => commands::fit(&config, &a),
        Command::Sweep(a) => commands::sweep(&config, &a),
        Command::Predict(a) => commands::predict(&config, &a),
        Command::Evaluate(a) => commands::evaluate(&config, &a),
        Command::Report(a) => commands::report(&config, &a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let error = serde_json::json!({
                "error": commands::error_kind(&e),
                "message": format!("{e:#}"),
            });
            eprintln!("{error}");
            ExitCode::from(2)
        }
    }
}
