//! `riskmdp`: existence and finiteness analysis of expected utilities for
//! finite MDPs.
//!
//! Exit codes: 0 success, 1 validation failure, 2 I/O error, 3 engine error,
//! 4 precondition violation.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use riskmdp::conditions::ConditionId;

use commands::{CliError, CliResult, Inputs, Method, SimArgs};
use report::Report;

#[derive(Parser)]
#[command(name = "riskmdp", version, about = "Existence and finiteness of expected utilities in finite MDPs")]
struct Cli {
    /// Output format
    #[arg(long, value_enum, global = true, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Check a model document for structural errors
    Validate { mdp: PathBuf },
    /// Per-state expected utility of a stationary policy
    Eval {
        mdp: PathBuf,
        policy: PathBuf,
        utility: PathBuf,
        #[arg(long, conflicts_with = "infinite", required_unless_present = "infinite")]
        horizon: Option<usize>,
        #[arg(long)]
        infinite: bool,
        #[arg(long, value_enum, default_value_t = Method::Auto)]
        method: Method,
    },
    /// Check conditions C1..C18 over the stationary deterministic policies
    Conditions {
        mdp: PathBuf,
        utility: PathBuf,
        /// Comma-separated ids, e.g. C5,C10 (default: all compatible)
        #[arg(long, value_delimiter = ',')]
        ids: Option<Vec<String>>,
    },
    /// Existence and finiteness verdict with citations
    Analyze { mdp: PathBuf, utility: PathBuf },
    /// Optimal stationary policy under exponential utility
    Solve {
        mdp: PathBuf,
        #[arg(long)]
        gamma: f64,
    },
    /// Monte Carlo estimate of a finite-horizon expected utility
    Simulate {
        mdp: PathBuf,
        policy: PathBuf,
        utility: PathBuf,
        /// Start state name (default: the model's initial state)
        #[arg(long)]
        start: Option<String>,
        #[arg(long)]
        horizon: usize,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn echo() -> String {
    std::env::args().skip(1).collect::<Vec<_>>().join(" ")
}

fn run(cmd: &Command, inputs: &mut Inputs) -> CliResult<report::Body> {
    match cmd {
        Command::Validate { mdp } => commands::validate(inputs, mdp),
        Command::Eval {
            mdp,
            policy,
            utility,
            horizon,
            method,
            ..
        } => {
            let m = inputs.mdp(mdp)?;
            let pi = inputs.policy(policy, &m)?;
            let u = inputs.utility(utility)?;
            commands::eval(&m, &pi, &u, *horizon, *method)
        }
        Command::Conditions { mdp, utility, ids } => {
            let m = inputs.mdp(mdp)?;
            let u = inputs.utility(utility)?;
            let ids = ids
                .as_ref()
                .map(|v| v.iter().map(|s| s.parse::<ConditionId>()).collect::<Result<Vec<_>, _>>())
                .transpose()?;
            commands::conditions(&m, &u, ids, commands::policy_guard()?)
        }
        Command::Analyze { mdp, utility } => {
            let m = inputs.mdp(mdp)?;
            let u = inputs.utility(utility)?;
            commands::analyze_cmd(&m, &u, commands::policy_guard()?)
        }
        Command::Solve { mdp, gamma } => {
            let m = inputs.mdp(mdp)?;
            commands::solve(&m, *gamma, commands::policy_guard()?)
        }
        Command::Simulate {
            mdp,
            policy,
            utility,
            start,
            horizon,
            samples,
            seed,
        } => {
            let m = inputs.mdp(mdp)?;
            let pi = inputs.policy(policy, &m)?;
            let u = inputs.utility(utility)?;
            let args = SimArgs {
                start: start.as_deref(),
                horizon: *horizon,
                samples: *samples,
                seed: *seed,
            };
            commands::simulate(&m, &pi, &u, &args)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let started = Instant::now();
    let mut inputs = Inputs::default();
    match run(&cli.command, &mut inputs) {
        Ok(body) => {
            let report = Report {
                command: echo(),
                inputs: inputs.digests,
                result: body,
                timing_ms: format!("{:.3}", started.elapsed().as_secs_f64() * 1e3),
            };
            let out = match cli.format {
                Format::Text => report.to_text(),
                Format::Json => report.to_json(),
            };
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

fn fail(e: &CliError) -> ExitCode {
    for line in e.messages() {
        eprintln!("{line}");
    }
    ExitCode::from(e.exit_code())
}
