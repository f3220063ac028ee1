//! Command-line driver.
//!
//! Every run reads one scenario file. Results go to stdout; with `--out` the
//! command's files and a `manifest.json` are written there as well.
//!
//! Exit codes: 0 success, 2 bad configuration or I/O, 3 physics
//! precondition violated, 4 numerical failure or broken invariant.

pub mod commands;
pub mod config;
pub mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde::Serialize;
use thiserror::Error;

pub use commands::{execute, Check, Outcome, Overrides};
pub use config::{Command, ScenarioConfig};
use output::{write_atomic, OutputFile};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Precondition(String),
    #[error("{0}")]
    Numerical(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Precondition(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Precondition(_) => "precondition",
            CliError::Numerical(_) => "numerical",
            CliError::Io(_) => "io",
        }
    }

    /// One-line JSON object for stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        })
        .to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CommandArg {
    Scatter,
    Sweep,
    Evolve,
    Decompose,
    EprDemo,
}

impl From<CommandArg> for Command {
    fn from(c: CommandArg) -> Self {
        match c {
            CommandArg::Scatter => Command::Scatter,
            CommandArg::Sweep => Command::Sweep,
            CommandArg::Evolve => Command::Evolve,
            CommandArg::Decompose => Command::Decompose,
            CommandArg::EprDemo => Command::EprDemo,
        }
    }
}

/// Klein-Gordon step scattering, wavepacket evolution and EPR operator checks.
#[derive(Debug, Parser)]
#[command(name = "kgfv", version)]
struct Args {
    command: CommandArg,
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Directory for output files and the run manifest.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Store a field snapshot every N steps (evolve).
    #[arg(long, value_name = "N")]
    snapshots: Option<usize>,
    /// Number of grid levels in the convergence study (epr-demo).
    #[arg(long, value_name = "L")]
    refine: Option<usize>,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'static str,
    version: &'static str,
    config: String,
    wall_clock_seconds: f64,
    all_checks_passed: bool,
    checks: &'a [Check],
    summary: serde_json::Value,
    outputs: Vec<OutputFile>,
}

fn load(path: &Path, command: Command) -> Result<ScenarioConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let config = ScenarioConfig::parse(&text)?;
    if config.command != command {
        return Err(CliError::Config(format!(
            "scenario is for `{}` but `{}` was requested",
            config.command.name(),
            command.name()
        )));
    }
    Ok(config)
}

fn write_outputs(dir: &Path, config: &ScenarioConfig, outcome: &Outcome, started: Instant) -> Result<(), CliError> {
    let mut outputs = Vec::with_capacity(outcome.files.len());
    for (name, contents) in &outcome.files {
        outputs.push(write_atomic(dir, name, contents)?);
    }
    let summary = serde_json::from_str(&outcome.summary.render()).expect("record renders valid JSON");
    let manifest = Manifest {
        command: config.command.name(),
        version: env!("CARGO_PKG_VERSION"),
        config: config.to_toml(),
        wall_clock_seconds: started.elapsed().as_secs_f64(),
        all_checks_passed: outcome.all_passed(),
        checks: &outcome.checks,
        summary,
        outputs,
    };
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    write_atomic(dir, "manifest.json", &text)?;
    Ok(())
}

fn run_args(args: Args) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let command = Command::from(args.command);
    let config = load(&args.config, command)?;
    let overrides = Overrides {
        snapshots: args.snapshots,
        refine: args.refine,
    };
    let outcome = execute(&config, overrides)?;
    let out = match (args.out, command) {
        (Some(dir), _) => Some(dir),
        (None, Command::Evolve) => Some(PathBuf::from(".")),
        (None, _) => None,
    };
    if let Some(dir) = out {
        write_outputs(&dir, &config, &outcome, started)?;
    }
    Ok(outcome)
}

/// Parses `argv`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run_args(args) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            let failed: Vec<&Check> = outcome.checks.iter().filter(|c| !c.passed).collect();
            if failed.is_empty() {
                0
            } else {
                for c in failed {
                    eprintln!(
                        "{}",
                        serde_json::json!({
                            "error": "invariant",
                            "exit_code": 4,
                            "check": c.name,
                            "value": c.value,
                            "threshold": c.threshold,
                        })
                    );
                }
                4
            }
        }
        Err(e) => {
            eprintln!("{}", e.to_json());
            e.exit_code()
        }
    }
}
