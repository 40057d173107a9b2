//! `artdetect`: extract hand-crafted features from artwork images, train
//! classifiers that separate human-made from AI-generated art, and predict
//! on new images.

mod commands;
mod config;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use artdetect_core::Error as CoreError;

#[derive(Parser)]
#[command(
    name = "artdetect",
    about = "Feature-based forensics for AI-generated artwork",
    version
)]
struct Cli {
    /// Key-value config file supplying defaults for any flag;
    /// command-line flags win on conflict.
    #[arg(long, global = true)]
    config: Option<std::path::PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Scan a directory-per-class image tree and build the feature cache
    Extract(commands::extract::ExtractArgs),
    /// Split, tune (grid or fixed config), fit, and evaluate a model
    Train(commands::train::TrainArgs),
    /// Recursive feature elimination with cross-validation
    Rfe(commands::rfe::RfeArgs),
    /// Evaluate a saved model on a labeled feature CSV or image tree
    Evaluate(commands::evaluate::EvaluateArgs),
    /// Predict labels for images or feature rows with a saved model
    Predict(commands::predict::PredictArgs),
    /// Describe a model file or feature cache
    Info(commands::info::InfoArgs),
}

/// Error classes mapped to exit codes: usage 1, data 2, training 3.
pub enum CliError {
    Usage(String),
    Data(String),
    Training(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Training(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m) | CliError::Data(m) | CliError::Training(m) => m,
        }
    }

    /// Most core errors are data problems; optimizer-side failures are
    /// classified by the command that observes them.
    pub fn data(e: CoreError) -> Self {
        CliError::Data(e.to_string())
    }

    /// Errors raised while fitting: genuine optimizer/label failures are
    /// training errors, anything structural stays a data error.
    pub fn training(e: CoreError) -> Self {
        match e {
            CoreError::DegenerateLabels(_) | CoreError::InvalidInput(_) => {
                CliError::Training(e.to_string())
            }
            other => CliError::Data(other.to_string()),
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return ExitCode::from(1);
        }
    };

    let file_config = match config::FileConfig::load(cli.config.as_deref()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {}", e.message());
            return ExitCode::from(e.code());
        }
    };

    let result = match cli.command {
        Command::Extract(args) => commands::extract::run(args, &file_config),
        Command::Train(args) => commands::train::run(args, &file_config),
        Command::Rfe(args) => commands::rfe::run(args, &file_config),
        Command::Evaluate(args) => commands::evaluate::run(args, &file_config),
        Command::Predict(args) => commands::predict::run(args, &file_config),
        Command::Info(args) => commands::info::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
