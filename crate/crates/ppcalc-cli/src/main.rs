//! `ppcalc`: partition-calculus analyses from the command line.
//!
//! Exit codes: 0 success, 1 verify failures, 2 configuration errors,
//! 3 numeric/divergence errors, 4 I/O errors.

mod args;
mod cmd;
mod io;

use args::{Cli, Command};
use clap::Parser;
use serde_json::Value;
use std::process::ExitCode;

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Compute(ppcalc::Error),
    Io(std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::Compute(e) => write!(f, "computation error: {e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Compute(_) => 3,
            CliError::Io(_) => 4,
        }
    }
}

/// Field-wise merge of flags over the JSON config document.
pub mod merge {
    use serde_json::Value;

    pub fn string(flag: Option<String>, cfg: &Value, key: &str) -> Option<String> {
        flag.or_else(|| cfg.get(key).and_then(|v| v.as_str()).map(String::from))
    }

    pub fn number(flag: Option<f64>, cfg: &Value, key: &str) -> Option<f64> {
        flag.or_else(|| cfg.get(key).and_then(|v| v.as_f64()))
    }

    pub fn integer(flag: Option<usize>, cfg: &Value, key: &str) -> Option<usize> {
        flag.or_else(|| cfg.get(key).and_then(|v| v.as_u64()).map(|v| v as usize))
    }

    pub fn boolean(cfg: &Value, key: &str) -> bool {
        cfg.get(key).and_then(|v| v.as_bool()).unwrap_or(false)
    }
}

fn load_config(path: &Option<String>) -> Result<Value, CliError> {
    match path {
        None => Ok(Value::Null),
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(CliError::Io)?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::Config(format!("{p}: invalid JSON: {e}")))
        }
    }
}

fn command_from_config(cfg: &Value) -> Option<Command> {
    match cfg.get("command").and_then(|v| v.as_str())? {
        "eppf" => Some(Command::Eppf(Default::default())),
        "sample-partition" => Some(Command::SamplePartition(Default::default())),
        "moments" => Some(Command::Moments(Default::default())),
        "fit-intensity" => Some(Command::FitIntensity(Default::default())),
        "fit-survival" => Some(Command::FitSurvival(Default::default())),
        "transform" => Some(Command::Transform(Default::default())),
        "pk" => Some(Command::Pk(Default::default())),
        "verify" => Some(Command::Verify),
        _ => None,
    }
}

fn run() -> Result<bool, CliError> {
    let cli = Cli::parse();
    let cfg = load_config(&cli.config)?;
    let threads = cli.threads.or_else(|| {
        std::env::var("PPCALC_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    ppcalc::exec::init_threads(threads);
    let seed = cli
        .seed
        .or_else(|| cfg.get("seed").and_then(|v| v.as_u64()))
        .unwrap_or(20_240_531);
    let out_dir = cli
        .out_dir
        .clone()
        .or_else(|| {
            cfg.get("out_dir")
                .and_then(|v| v.as_str())
                .map(String::from)
        })
        .unwrap_or_else(|| ".".into());
    let command = match cli.command {
        Some(c) => c,
        None => command_from_config(&cfg).ok_or_else(|| {
            CliError::Config("no subcommand given and no `command` in the config".into())
        })?,
    };
    match command {
        Command::Eppf(a) => cmd::run_eppf(a, &cfg, seed, &out_dir)?,
        Command::SamplePartition(a) => cmd::run_sample_partition(a, &cfg, seed, &out_dir)?,
        Command::Moments(a) => cmd::run_moments(a, &cfg, seed, &out_dir)?,
        Command::FitIntensity(a) => cmd::run_fit_intensity(a, &cfg, seed, &out_dir)?,
        Command::FitSurvival(a) => cmd::run_fit_survival(a, &cfg, seed, &out_dir)?,
        Command::Transform(a) => cmd::run_transform(a, &cfg, seed, &out_dir)?,
        Command::Pk(a) => cmd::run_pk(a, &cfg, seed, &out_dir)?,
        Command::Verify => return cmd::run_verify(seed, &out_dir),
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("ppcalc: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
