//! Command-line front end.
//!
//! Exit codes are stable: 0 success, 1 configuration or usage error,
//! 2 zero output, 3 singular loop system, 4 no convergence, 5 failed
//! self-check.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::Error;
use crate::loop_solver::{iterate_established_loop, solve_established_loop, LoopSolution};
use crate::measurement::{monte_carlo, EnsembleReport, Outcome};
use crate::report::{format_float, to_json_string, RunReport};
use crate::timetravel::{phase_sweep, run_two_pass_protocol, SweepPoint, TwoPassReport};
use crate::verify;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_ZERO_OUTPUT: i32 = 2;
pub const EXIT_SINGULAR: i32 = 3;
pub const EXIT_NO_CONVERGENCE: i32 = 4;
pub const EXIT_VERIFY_FAILED: i32 = 5;

/// Environment variable capping the Monte Carlo worker threads.
pub const THREADS_ENV: &str = "CHRONOLOOP_THREADS";

pub const CSV_HEADER: &str = "phi,p_left_second,paradox";

#[derive(Debug, Parser)]
#[command(name = "chronoloop", version, about = "Interferometer with a retrocausal feedback arm")]
struct Cli {
    /// Print the normalized configuration and exit instead of running.
    #[arg(long, global = true)]
    dump_config: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ConfigArg {
    /// Run configuration (JSON).
    config: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// First pass, collapse, back-injection and second pass.
    TwoPass {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, conflicts_with = "force_right")]
        force_left: bool,
        #[arg(long)]
        force_right: bool,
        /// Overrides the seed from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Self-consistent established loop; needs `m` in the config.
    LoopSolve {
        #[command(flatten)]
        config: ConfigArg,
        /// Use fixed-point iteration instead of the direct solve.
        #[arg(long)]
        iterative: bool,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, default_value_t = 10_000)]
        max_iter: usize,
    },
    /// Second-pass left probability over phases evenly spaced on [0, 2π].
    PhaseSweep {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, default_value_t = 101)]
        points: usize,
        /// CSV destination; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Ensemble of seeded two-pass runs.
    MonteCarlo {
        #[command(flatten)]
        config: ConfigArg,
        /// Overrides the trial count from the config.
        #[arg(long)]
        trials: Option<u64>,
        /// Overrides the seed from the config.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Runs the built-in self-check suite.
    Verify,
}

#[derive(Debug)]
enum Failure {
    Config(String),
    Sim(Error),
    Verify,
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => EXIT_CONFIG,
            Failure::Sim(Error::ZeroOutput) => EXIT_ZERO_OUTPUT,
            Failure::Sim(Error::Singular { .. }) => EXIT_SINGULAR,
            Failure::Sim(Error::NoConvergence { .. }) => EXIT_NO_CONVERGENCE,
            Failure::Sim(_) => EXIT_CONFIG,
            Failure::Verify => EXIT_VERIFY_FAILED,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Sim(e)
    }
}

/// Parses `args` and runs the command, writing the report to `out`.
/// Returns the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{}", e.render());
                return EXIT_CONFIG;
            }
            let _ = write!(out, "{}", e.render());
            return EXIT_OK;
        }
    };
    match execute(&cli, out, err) {
        Ok(()) => EXIT_OK,
        Err(failure) => {
            match &failure {
                Failure::Config(msg) => {
                    let _ = writeln!(err, "error: {msg}");
                }
                Failure::Sim(e) => {
                    let _ = writeln!(err, "error: {e}");
                }
                Failure::Verify => {
                    let _ = writeln!(err, "error: self-check failed");
                }
            }
            failure.exit_code()
        }
    }
}

fn load(arg: &ConfigArg) -> Result<RunConfig, Failure> {
    RunConfig::load(&arg.config).map_err(|e| Failure::Config(e.to_string()))
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), Failure> {
    out.write_all(text.as_bytes())
        .map_err(|e| Failure::Config(format!("cannot write output: {e}")))
}

fn print_warnings(err: &mut dyn Write, warnings: &[String]) {
    for w in warnings {
        let _ = writeln!(err, "warning: {w}");
    }
}

fn execute(cli: &Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<(), Failure> {
    let config_arg = match &cli.command {
        Command::TwoPass { config, .. }
        | Command::LoopSolve { config, .. }
        | Command::PhaseSweep { config, .. }
        | Command::MonteCarlo { config, .. } => Some(config),
        Command::Verify => None,
    };
    if cli.dump_config {
        let arg = config_arg
            .ok_or_else(|| Failure::Config("--dump-config needs a command that takes a config".into()))?;
        return emit(out, &load(arg)?.to_json());
    }

    match &cli.command {
        Command::TwoPass {
            config,
            force_left,
            force_right,
            seed,
        } => {
            let cfg = load(config)?;
            let force = match (force_left, force_right) {
                (true, _) => Some(Outcome::Left),
                (_, true) => Some(Outcome::Right),
                _ => None,
            };
            two_pass(&cfg, force, seed.unwrap_or(cfg.seed), out, err)
        }
        Command::LoopSolve {
            config,
            iterative,
            tol,
            max_iter,
        } => {
            let cfg = load(config)?;
            let iteration = iterative.then_some((*tol, *max_iter));
            loop_solve(&cfg, iteration, out, err)
        }
        Command::PhaseSweep {
            config,
            points,
            out: path,
        } => {
            let cfg = load(config)?;
            sweep(&cfg, *points, path.as_deref(), out, err)
        }
        Command::MonteCarlo {
            config,
            trials,
            seed,
        } => {
            let cfg = load(config)?;
            ensemble(
                &cfg,
                trials.unwrap_or(cfg.trials),
                seed.unwrap_or(cfg.seed),
                out,
                err,
            )
        }
        Command::Verify => {
            let checks = verify::run_all();
            emit(out, &verify::render_table(&checks))?;
            if checks.iter().all(|c| c.passed) {
                Ok(())
            } else {
                Err(Failure::Verify)
            }
        }
    }
}

fn envelope<'a, T: Serialize>(
    command: &'a str,
    hash: &'a str,
    seed: Option<u64>,
    warnings: &'a [String],
    result: T,
) -> RunReport<'a, T> {
    RunReport {
        config_hash: Some(hash),
        seed,
        warnings,
        ..RunReport::new(command, result)
    }
}

fn two_pass(
    cfg: &RunConfig,
    force: Option<Outcome>,
    seed: u64,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), Failure> {
    let mode = cfg.injection_mode().map_err(|e| Failure::Config(e.to_string()))?;
    let mut warnings = cfg.warnings();
    warnings.extend(mode.validation_warnings());
    warnings.dedup();
    print_warnings(err, &warnings);
    let report: TwoPassReport = run_two_pass_protocol(&cfg.circuit, &cfg.psi, &mode, seed, force)?;
    let hash = cfg.hash();
    emit(out, &to_json_string(&envelope("two-pass", &hash, Some(seed), &warnings, report)))
}

fn loop_solve(
    cfg: &RunConfig,
    iteration: Option<(f64, usize)>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), Failure> {
    let m = cfg
        .m
        .as_ref()
        .ok_or_else(|| Failure::Config("loop-solve requires m in the config".into()))?;
    let warnings = cfg.warnings();
    print_warnings(err, &warnings);
    let solution: LoopSolution = match iteration {
        Some((tol, max_iter)) => iterate_established_loop(&cfg.circuit, m, &cfg.psi, tol, max_iter)?,
        None => solve_established_loop(&cfg.circuit, m, &cfg.psi)?,
    };
    let hash = cfg.hash();
    emit(out, &to_json_string(&envelope("loop-solve", &hash, None, &warnings, solution)))
}

/// CSV text for a sweep: fixed header, comma separators, `\n` line endings.
pub fn render_csv(rows: &[SweepPoint]) -> String {
    let mut text = String::with_capacity(64 * (rows.len() + 1));
    text.push_str(CSV_HEADER);
    text.push('\n');
    for row in rows {
        let _ = writeln!(
            text,
            "{},{},{}",
            format_float(row.phi),
            format_float(row.p_left_second),
            format_float(row.paradox)
        );
    }
    text
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    points: usize,
    out: &'a str,
}

fn sweep(
    cfg: &RunConfig,
    points: usize,
    path: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), Failure> {
    if points < 2 {
        return Err(Failure::Config(format!("--points must be at least 2, got {points}")));
    }
    let warnings = cfg.warnings();
    print_warnings(err, &warnings);
    let rows = phase_sweep(&cfg.circuit, &cfg.psi, points)?;
    let csv = render_csv(&rows);
    match path {
        None => emit(out, &csv),
        Some(path) => {
            std::fs::write(path, csv)
                .map_err(|e| Failure::Config(format!("cannot write {}: {e}", path.display())))?;
            let hash = cfg.hash();
            let display = path.display().to_string();
            let summary = SweepSummary {
                points,
                out: &display,
            };
            emit(out, &to_json_string(&envelope("phase-sweep", &hash, None, &warnings, summary)))
        }
    }
}

fn thread_cap() -> Result<Option<usize>, Failure> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Failure::Config(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))),
        },
    }
}

fn ensemble(
    cfg: &RunConfig,
    trials: u64,
    seed: u64,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), Failure> {
    if trials == 0 {
        return Err(Failure::Config("--trials must be at least 1".into()));
    }
    let mode = cfg.injection_mode().map_err(|e| Failure::Config(e.to_string()))?;
    let mut warnings = cfg.warnings();
    warnings.extend(mode.validation_warnings());
    warnings.dedup();
    print_warnings(err, &warnings);

    let run = || monte_carlo(&cfg.circuit, &cfg.psi, &mode, trials, seed);
    let report: EnsembleReport = match thread_cap()? {
        None => run()?,
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Failure::Config(format!("cannot start thread pool: {e}")))?
            .install(run)?,
    };
    let hash = cfg.hash();
    emit(out, &to_json_string(&envelope("monte-carlo", &hash, Some(seed), &warnings, report)))
}
