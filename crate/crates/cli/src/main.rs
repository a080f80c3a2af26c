//! `retroq`: benchmarks, MUB scans, minimizer checks and single-instance reports.
//!
//! Exit status: 0 on success, 2 when a checked property fails (including invalid operators in
//! input files), 1 for usage, parse and I/O errors.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use retroq::harness::{self, BenchConfig, BenchMode, Grid, ScanConfig, VerifyConfig, GAP_TOL};
use retroq::{Divergence, Error, Eur3Form, StateEnsemble};

#[derive(Parser)]
#[command(
    name = "retroq",
    version,
    about = "Quantum retrodiction and entropic uncertainty benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Random states with two Haar-random projective measurements.
    BenchPvm(BenchArgs),
    /// Random states with two random rank-one POVMs of `n` outcomes.
    BenchPovm {
        #[command(flatten)]
        common: BenchArgs,
        /// Number of outcomes (at least d).
        #[arg(long)]
        n: usize,
    },
    /// EUR2 - EUR3 over a (p, theta) grid for the Fourier MUB pair.
    MubScan(ScanArgs),
    /// Checks that the Bayesian inverse minimizes a divergence on random instances.
    Verify(VerifyArgs),
    /// Full report for one state and two POVMs read from JSON.
    Single(SingleArgs),
}

#[derive(Args)]
struct Common {
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Use `H(gamma) - c` instead of `H(gamma) - log2 c` for the third bound.
    #[arg(long)]
    eur3_no_log: bool,
    /// Where to write a counterexample when a checked property fails (default: stderr).
    #[arg(long)]
    dump: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 100_000)]
    trials: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// A gap counts as negative below minus this many bits.
    #[arg(long, default_value_t = GAP_TOL)]
    gap_tol: f64,
    /// uniform-spectrum or hilbert-schmidt.
    #[arg(long, default_value = "uniform-spectrum")]
    state_ensemble: StateEnsemble,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct ScanArgs {
    /// Prime dimension.
    #[arg(long)]
    d: usize,
    #[arg(long, default_value_t = 0.0)]
    p_min: f64,
    #[arg(long, default_value_t = 1.0)]
    p_max: f64,
    #[arg(long, default_value_t = 0.01)]
    p_step: f64,
    /// Degrees.
    #[arg(long, default_value_t = 0.0)]
    theta_min: f64,
    /// Degrees.
    #[arg(long, default_value_t = 90.0)]
    theta_max: f64,
    /// Degrees.
    #[arg(long, default_value_t = 1.0)]
    theta_step: f64,
    /// Which basis vector pair builds the state.
    #[arg(long, default_value_t = 0)]
    basis_index: usize,
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct VerifyArgs {
    /// umegaki, petz:A, sandwiched:A, geometric:A, bs or trace.
    #[arg(long)]
    divergence: Divergence,
    #[arg(long)]
    d: usize,
    /// Random instances (state, POVM, evidence).
    #[arg(long, default_value_t = 100)]
    instances: u64,
    /// Candidates per instance; each gives four perturbations and one random candidate.
    #[arg(long, default_value_t = 200)]
    candidates: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// JSON report (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct SingleArgs {
    #[arg(long)]
    state: PathBuf,
    #[arg(long)]
    povm_m: PathBuf,
    #[arg(long)]
    povm_n: PathBuf,
    /// JSON report (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

impl Common {
    fn form(&self) -> Eur3Form {
        if self.eur3_no_log {
            Eur3Form::Literal
        } else {
            Eur3Form::Log
        }
    }
}

enum Failure {
    Usage(String),
    Violation(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_)
            | Error::Json(_)
            | Error::Config(_)
            | Error::UnknownDivergence(_)
            | Error::InvalidAlpha { .. }
            | Error::NotPrime(_) => Failure::Usage(e.to_string()),
            other => Failure::Violation(other.to_string()),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn open_out(path: Option<&Path>) -> io::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_dump(dump: &serde_json::Value, path: Option<&Path>) -> io::Result<()> {
    let text = serde_json::to_string_pretty(dump).expect("serializable dump");
    match path {
        Some(p) => {
            std::fs::write(p, text + "\n")?;
            eprintln!("counterexample written to {}", p.display());
        }
        None => eprintln!("counterexample:\n{text}"),
    }
    Ok(())
}

/// Turns `Error::Violation` into a dump on disk or stderr.
fn handle(e: Error, common: &Common) -> Failure {
    match e {
        Error::Violation { message, dump } => match write_dump(&dump, common.dump.as_deref()) {
            Ok(()) => Failure::Violation(message),
            Err(io) => Failure::Usage(format!(
                "{message}; writing the counterexample failed: {io}"
            )),
        },
        other => other.into(),
    }
}

fn bench(args: &BenchArgs, mode: BenchMode, n: usize) -> Result<(), Failure> {
    let mut cfg = match mode {
        BenchMode::Pvm => BenchConfig::pvm(args.d, args.trials, args.seed),
        BenchMode::Povm => BenchConfig::povm(args.d, n, args.trials, args.seed),
    };
    cfg.threads = args.common.threads;
    cfg.eur3_form = args.common.form();
    cfg.gap_tol = args.gap_tol;
    cfg.state_ensemble = args.state_ensemble;
    let outcome = harness::run_bench(&cfg).map_err(|e| handle(e, &args.common))?;
    let mut w = open_out(args.out.as_deref())?;
    harness::write_bench_csv(&outcome, &mut w)?;
    w.flush()?;
    let summary = serde_json::json!({ "config": cfg, "counts": outcome.counts });
    eprintln!(
        "{}",
        serde_json::to_string_pretty(&summary).expect("serializable summary")
    );
    Ok(())
}

fn scan(args: &ScanArgs) -> Result<(), Failure> {
    let cfg = ScanConfig {
        d: args.d,
        p: Grid::new(args.p_min, args.p_max, args.p_step)?,
        theta: Grid::new(args.theta_min, args.theta_max, args.theta_step)?,
        basis_index: args.basis_index,
        eur3_form: args.common.form(),
        threads: args.common.threads,
    };
    let points = harness::run_mub_scan(&cfg)?;
    let mut w = open_out(args.out.as_deref())?;
    harness::write_scan_csv(&points, &mut w)?;
    w.flush()?;
    let negative = points.iter().filter(|p| p.gap() < -GAP_TOL).count();
    eprintln!(
        "{negative} of {} grid points have EUR2 < EUR3",
        points.len()
    );
    Ok(())
}

fn verify(args: &VerifyArgs) -> Result<(), Failure> {
    let cfg = VerifyConfig {
        divergence: args.divergence,
        d: args.d,
        instances: args.instances,
        candidates: args.candidates,
        master_seed: args.seed,
        threads: args.common.threads,
    };
    let results = harness::run_verify(&cfg)?;
    let failed: Vec<_> = results.iter().filter(|r| !r.report.passed()).collect();
    let report = serde_json::json!({
        "config": cfg,
        "instances": results.len(),
        "failed": failed.len(),
        "max_equality_error": results.iter().map(|r| r.report.equality_error).fold(0.0, f64::max),
        "candidates_evaluated": results.iter().map(|r| r.report.candidates_evaluated).sum::<usize>(),
        "beaten": results.iter().map(|r| r.report.beaten).sum::<usize>(),
        "not_strict": results.iter().map(|r| r.report.not_strict).sum::<usize>(),
        "non_monotone": results.iter().map(|r| r.report.non_monotone).sum::<usize>(),
    });
    let mut w = open_out(args.out.as_deref())?;
    serde_json::to_writer_pretty(&mut w, &report).map_err(Error::from)?;
    writeln!(w)?;
    w.flush()?;
    if let Some(first) = failed.first() {
        let dump = serde_json::to_value(first).map_err(Error::from)?;
        write_dump(&dump, args.common.dump.as_deref())?;
        return Err(Failure::Violation(format!(
            "{} of {} instances failed",
            failed.len(),
            results.len()
        )));
    }
    Ok(())
}

fn single(args: &SingleArgs) -> Result<(), Failure> {
    let report = harness::run_single(&args.state, &args.povm_m, &args.povm_n, args.common.form())?;
    let mut w = open_out(args.out.as_deref())?;
    serde_json::to_writer_pretty(&mut w, &report).map_err(Error::from)?;
    writeln!(w)?;
    w.flush()?;
    if !report.invariants.all_satisfied {
        return Err(Failure::Violation("report invariants not satisfied".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::BenchPvm(a) => bench(a, BenchMode::Pvm, a.d),
        Command::BenchPovm { common, n } => bench(common, BenchMode::Povm, *n),
        Command::MubScan(a) => scan(a),
        Command::Verify(a) => verify(a),
        Command::Single(a) => single(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Violation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
