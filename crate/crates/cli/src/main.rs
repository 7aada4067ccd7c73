//! `sbe`: distill static embeddings, build matrices, and train/evaluate the
//! six classifiers under stratified k-fold cross-validation.

mod args;
mod commands;
mod manifest;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Distill(a) => commands::distill(&a),
        Command::BuildMatrix(a) => commands::build_matrix(&a),
        Command::Balance(a) => commands::balance(&a),
        Command::Train(a) => commands::train(&a),
        Command::Kfold(a) => commands::kfold(&a),
        Command::Report(a) => commands::report(&a),
        Command::Gradcheck(a) => commands::gradcheck(&a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
