//! Command-line front-end. Tables go out as CSV, manifests as JSON next to
//! each output file; infinite values are written as `inf`.

pub mod args;
pub mod commands;
pub mod manifest;
pub mod sweep;

use std::ffi::OsString;

use clap::Parser;

use args::{Cli, Command};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Clap(#[from] clap::Error),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Internal(#[from] anyhow::Error),
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Internal(e.into())
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Clap(e) if !e.use_stderr() => 0,
            CliError::Clap(_) | CliError::Usage(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

pub fn run<I, T>(argv: I) -> Result<(), CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let recorded: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let cli = Cli::try_parse_from(&argv)?;
    match &cli.command {
        Command::Analytic(a) => commands::analytic(a, &recorded),
        Command::Simulate(a) => commands::simulate(a, &recorded),
        Command::Speckle(a) => commands::speckle(a, &recorded),
        Command::Combinatorics(a) => commands::combinatorics(a, &recorded),
        Command::CalibrateTau(a) => commands::calibrate(a),
        Command::Rerun(a) => {
            let m = manifest::RunManifest::read(&a.manifest)?;
            run(with_out(&m.argv, &a.out.to_string_lossy()))
        }
    }
}

/// The recorded command line with its `--out` pointed elsewhere.
fn with_out(argv: &[String], out: &str) -> Vec<String> {
    let mut next = Vec::with_capacity(argv.len() + 2);
    let mut skip = false;
    for a in argv {
        if skip {
            skip = false;
        } else if a == "--out" {
            skip = true;
        } else if !a.starts_with("--out=") {
            next.push(a.clone());
        }
    }
    next.push("--out".into());
    next.push(out.into());
    next
}
