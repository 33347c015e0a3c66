//! `qcouple`: tabulate and verify the Binomial/Normal quantile coupling.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use quantile_coupling::binom_exact::{
    lambda_n, log_tail_exact, tail_beta_integral, MAX_N_QUADRATURE,
};
use quantile_coupling::cutpoints::build_table;
use quantile_coupling::fmt::sig17;
use quantile_coupling::verify::lemma::{increment_suite, monotonicity, Grid, DEFAULT_STEPS};
use quantile_coupling::verify::{
    coupling_check, emit_report, exit, exit_code, run_sweep, OutputFormat, SweepConfig,
    VerificationRecord,
};
use quantile_coupling::Error;

const LEMMA_TOL: f64 = 1e-10;

#[derive(Parser)]
#[command(version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact upper tail P{Bin(n, 1/2) >= k}
    Tails { n: u64, k: u64 },
    /// Cutpoint table for one n
    Cutpoints {
        n: u64,
        /// Write CSV here instead of stdout
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Tail expansion checks over a configured sweep
    Theorem1 {
        #[arg(long)]
        config: PathBuf,
    },
    /// Cutpoint expansion checks over a configured sweep
    Theorem2 {
        #[arg(long)]
        config: PathBuf,
    },
    /// Hazard monotonicity and increment inequalities on a grid
    Lemma1 {
        /// Grid as start:end:step
        #[arg(long, default_value = "-8:8:0.001", allow_hyphen_values = true)]
        grid: String,
    },
    /// Classical cutpoint bracket over a configured sweep
    Tusnady {
        #[arg(long)]
        config: PathBuf,
    },
    /// Worst-case coupling distance for one n
    Coupling { n: u64 },
    /// Full verification sweep
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Overrides output_format from the config
        #[arg(long)]
        format: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn code_for(e: &Error) -> i32 {
    match e {
        Error::Io(_) => exit::IO,
        _ => exit::BAD_CONFIG,
    }
}

fn fail(e: Error) -> i32 {
    eprintln!("error: {e}");
    code_for(&e)
}

fn load_config(path: &Path) -> Result<SweepConfig, Error> {
    let text =
        fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    text.parse()
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>, Error> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn echo_failures(records: &[VerificationRecord]) {
    for r in records.iter().filter(|r| !r.passed) {
        eprintln!(
            "FAILED {} n={} k={} slack={}",
            r.check_name,
            r.n,
            r.k,
            sig17(r.slack)
        );
    }
}

fn tails(n: u64, k: u64) -> Result<i32, Error> {
    let t = log_tail_exact(n, k)?;
    let mut out = io::stdout().lock();
    writeln!(out, "n,{n}")?;
    writeln!(out, "k,{k}")?;
    writeln!(out, "numerator,{}", t.numerator)?;
    writeln!(out, "probability,{}", sig17(t.probability()))?;
    writeln!(out, "log_prob,{}", sig17(t.log_prob))?;
    if k >= 1 && n <= MAX_N_QUADRATURE {
        writeln!(
            out,
            "log_prob_quadrature,{}",
            sig17(tail_beta_integral(n, k)?)
        )?;
    }
    writeln!(out, "lambda_n,{}", sig17(lambda_n(n)?.lambda))?;
    Ok(exit::PASS)
}

fn cutpoints(n: u64, csv: Option<&Path>) -> Result<i32, Error> {
    let table = build_table(n)?;
    let mut out = open_out(csv)?;
    out.write_all(table.to_csv().as_bytes())?;
    out.flush()?;
    Ok(exit::PASS)
}

/// Runs the sweep and reports only the checks whose names start with one of
/// `families`.
fn family(config: &Path, families: &[&str]) -> Result<i32, Error> {
    let cfg = load_config(config)?;
    let (records, constants) = run_sweep(&cfg)?;
    let picked: Vec<VerificationRecord> = records
        .into_iter()
        .filter(|r| families.iter().any(|f| r.check_name.starts_with(f)))
        .collect();
    let mut out = open_out(None)?;
    emit_report(&mut out, &picked, &constants, &cfg, cfg.output_format)?;
    eprintln!(
        "C = {}, C' = {}, stability ratio = {}",
        sig17(constants.c_thm1),
        sig17(constants.c_thm2),
        sig17(constants.stability_ratio)
    );
    echo_failures(&picked);
    Ok(exit_code(&picked))
}

fn lemma1(grid: &str) -> Result<i32, Error> {
    let grid = Grid::parse(grid)?;
    let (rho, r) = monotonicity(&grid)?;
    let mut checks = vec![(rho, 0.0), (r, 0.0)];
    checks.extend(
        increment_suite(&grid, &DEFAULT_STEPS)?
            .into_iter()
            .map(|c| (c, LEMMA_TOL)),
    );
    let mut out = io::stdout().lock();
    writeln!(out, "check,x,delta,slack,passed")?;
    let mut all = true;
    for (c, tol) in checks {
        // monotonicity must be strict
        let passed = if tol == 0.0 {
            c.slack > 0.0
        } else {
            c.slack >= -tol
        };
        all &= passed;
        writeln!(
            out,
            "{},{},{},{},{passed}",
            c.name,
            sig17(c.x),
            sig17(c.delta),
            sig17(c.slack)
        )?;
    }
    Ok(if all { exit::PASS } else { exit::FAIL })
}

fn coupling(n: u64) -> Result<i32, Error> {
    let s = coupling_check(n)?;
    let mut out = io::stdout().lock();
    writeln!(out, "n,{}", s.n)?;
    writeln!(out, "max_x_minus_beta,{}", sig17(s.max_x_minus_beta))?;
    writeln!(out, "c_coupling,{}", sig17(s.c_coupling))?;
    Ok(if s.max_x_minus_beta <= 1.0 {
        exit::PASS
    } else {
        exit::FAIL
    })
}

fn sweep(config: &Path, format: Option<&str>, out: Option<&Path>) -> Result<i32, Error> {
    let mut cfg = load_config(config)?;
    if let Some(f) = format {
        cfg.output_format = f.parse::<OutputFormat>()?;
    }
    let (records, constants) = run_sweep(&cfg)?;
    let mut sink = open_out(out)?;
    emit_report(&mut sink, &records, &constants, &cfg, cfg.output_format)?;
    echo_failures(&records);
    Ok(exit_code(&records))
}

fn run(cli: Cli) -> Result<i32, Error> {
    match cli.command {
        Command::Tails { n, k } => tails(n, k),
        Command::Cutpoints { n, csv } => cutpoints(n, csv.as_deref()),
        Command::Theorem1 { config } => family(
            &config,
            &[
                "thm1_",
                "eq11_",
                "laplace_identity",
                "eta_half",
                "kappa_bound",
            ],
        ),
        Command::Theorem2 { config } => family(&config, &["thm2_", "sandwich5_"]),
        Command::Tusnady { config } => family(&config, &["tusnady_"]),
        Command::Lemma1 { grid } => lemma1(&grid),
        Command::Coupling { n } => coupling(n),
        Command::Sweep {
            config,
            format,
            out,
        } => sweep(&config, format.as_deref(), out.as_deref()),
    }
}

fn main() -> ExitCode {
    let code = run(Cli::parse()).unwrap_or_else(fail);
    ExitCode::from(code as u8)
}
