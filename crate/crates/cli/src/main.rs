//! `scuc`: solve, audit and generate unit-commitment cases.
//!
//! Exit codes: 0 converged (or audit clean), 1 usage or I/O error,
//! 2 proven infeasible, 3 not converged or audit failed.

mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use scuc_core::case_io::{self, RunReport, TimingsReport};
use scuc_core::orchestrator::{self, verify_schedule, RunStatus};
use scuc_core::{fixtures, SystemCase};

use crate::config::{FileConfig, Tuning};

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 1;
const EXIT_INFEASIBLE: u8 = 2;
const EXIT_UNCONVERGED: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "scuc", version, about = "Security-constrained unit commitment with corrective switching")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a case and write report.json, schedule.csv and timings.json.
    Solve(SolveArgs),
    /// Re-audit a written report against its case.
    Verify(VerifyArgs),
    /// Emit a test case as JSON.
    GenFixture(GenArgs),
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Case file (JSON).
    #[arg(long, value_name = "PATH")]
    case: PathBuf,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "runs")]
    out: PathBuf,
    /// JSON file with tuning values; flags take precedence.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    /// Case file (JSON).
    #[arg(long, value_name = "PATH")]
    case: PathBuf,
    /// Report written by `solve`.
    #[arg(long, value_name = "PATH")]
    result: PathBuf,
    /// JSON file with tuning values; flags take precedence.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[command(flatten)]
    tuning: Tuning,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FixtureKind {
    /// Small meshed case drawn from the seed.
    Meshed,
    /// 24-bus case drawn from the seed.
    RtsLike,
    Tri3,
    Tri3Tight,
    Star4,
    /// Four-bus switching case at the lower load level.
    Fig1xLow,
    /// Four-bus switching case at the higher load level.
    Fig1xHigh,
    /// Higher load level with the external corridor de-rated.
    Fig1xDerated,
}

#[derive(Debug, Args)]
struct GenArgs {
    /// Seed for generated kinds.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "meshed")]
    kind: FixtureKind,
    /// Output file; standard output when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Self { code: EXIT_USAGE, message: message.to_string() }
    }
}

fn load(case: &PathBuf) -> Result<SystemCase, Failure> {
    case_io::parse_case(case).map_err(Failure::usage)
}

fn options(config: Option<&PathBuf>, tuning: &Tuning) -> Result<orchestrator::SolveOptions, Failure> {
    let file = match config {
        Some(path) => FileConfig::read(path).map_err(Failure::usage)?,
        None => FileConfig::default(),
    };
    let opts = tuning.merge(file).map_err(Failure::usage)?;
    opts.validate().map_err(Failure::usage)?;
    Ok(opts)
}

fn run_solve(args: &SolveArgs) -> Result<u8, Failure> {
    let case = load(&args.case)?;
    let opts = options(args.config.as_ref(), &args.tuning)?;
    let result = orchestrator::solve(&case, &opts).map_err(|e| Failure { code: EXIT_USAGE, message: e.to_string() })?;
    let report = RunReport::new(&result, &opts);
    let written = case_io::write_report(&report, &TimingsReport::from(&result), &case, &args.out)
        .map_err(Failure::usage)?;
    match result.status {
        RunStatus::Converged => {
            println!(
                "{}: converged in {} iteration(s), objective {:.6}, {} cut(s), {} switch(es); report at {}",
                opts.method,
                result.iterations,
                result.objective().unwrap_or(f64::NAN),
                result.cuts.len(),
                result.switches.len(),
                written.report.display()
            );
            Ok(EXIT_OK)
        }
        RunStatus::Infeasible => {
            eprintln!("{}: the case is infeasible for this method", opts.method);
            Ok(EXIT_INFEASIBLE)
        }
        other => {
            eprintln!("{}: stopped without convergence ({other:?}) after {} iteration(s)", opts.method, result.iterations);
            for (c, t) in &result.unresolved {
                eprintln!("  unresolved: contingency {c}, period {}", t + 1);
            }
            Ok(EXIT_UNCONVERGED)
        }
    }
}

fn run_verify(args: &VerifyArgs) -> Result<u8, Failure> {
    let case = load(&args.case)?;
    let opts = options(args.config.as_ref(), &args.tuning)?;
    let report = case_io::read_report(&args.result).map_err(Failure::usage)?;
    let Some(schedule) = report.schedule.as_ref() else {
        eprintln!("report holds no schedule ({:?}); nothing to audit", report.status);
        return Ok(EXIT_UNCONVERGED);
    };
    let method: orchestrator::Method = report.method.parse().map_err(Failure::usage)?;
    let registry = report.switches.iter().map(|s| ((s.contingency, s.period), s.opened)).collect();
    let audit = verify_schedule(&case, schedule, method.uses_switching(), &registry, &opts)
        .map_err(|e| Failure { code: EXIT_USAGE, message: e.to_string() })?;
    if audit.is_secure() {
        println!("secure: {} outage/period pair(s) checked", audit.checked);
        return Ok(EXIT_OK);
    }
    for defect in &audit.base_case {
        eprintln!("base case: {defect}");
    }
    for f in &audit.failures {
        eprintln!("violation: contingency {}, period {} (slack {:.6})", f.contingency, f.period + 1, f.slack);
    }
    for (c, t, j) in &audit.bad_switches {
        eprintln!("invalid switch: contingency {c}, period {}, opened {j}", t + 1);
    }
    Ok(EXIT_UNCONVERGED)
}

fn run_gen(args: &GenArgs) -> Result<u8, Failure> {
    let case = match args.kind {
        FixtureKind::Meshed => fixtures::random_meshed(args.seed),
        FixtureKind::RtsLike => fixtures::rts_like(args.seed),
        FixtureKind::Tri3 => fixtures::tri3(),
        FixtureKind::Tri3Tight => fixtures::tri3_tight(),
        FixtureKind::Star4 => fixtures::star4(),
        FixtureKind::Fig1xLow => fixtures::fig1x(fixtures::FIG1X_L0),
        FixtureKind::Fig1xHigh => fixtures::fig1x(fixtures::FIG1X_L1),
        FixtureKind::Fig1xDerated => fixtures::fig1x_derated(fixtures::FIG1X_L1),
    };
    match &args.out {
        Some(path) => case_io::write_case(&case, path).map_err(Failure::usage)?,
        None => print!("{}", case_io::case_to_string(&case)),
    }
    Ok(EXIT_OK)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let outcome = match &cli.command {
        Command::Solve(a) => run_solve(a),
        Command::Verify(a) => run_verify(a),
        Command::GenFixture(a) => run_gen(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
