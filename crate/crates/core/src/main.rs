use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use pqpath::builders::{build_cbc, build_svm_dual, ConjointDesign, SumAlpha, SvmInstance};
use pqpath::crisscross::Fault;
use pqpath::format::{
    parse_problem, read_cbc_choices, read_svm_points, write_path, OutputMode, StatsReport, DEFAULT_PRECISION,
};
use pqpath::oracle::verify_path;
use pqpath::path::{trace_path_with, PathValue, SolutionPath, TraceOptions};
use pqpath::problem::{qp_to_lcp, validate_psd, Objective, ParametricQP};
use pqpath::rational::{fmt_rat, fmt_vec, parse_rat, Rat};

const EXIT_USAGE: u8 = 1;
const EXIT_VERIFY: u8 = 2;
const EXIT_FAULT: u8 = 3;

/// Exact solution paths of parametric convex quadratic programs.
#[derive(Parser)]
#[command(name = "pqpath", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Trace the solution path of a PQP problem file.
    SolvePath {
        file: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Trace the SVM dual path over the regularization constant.
    SvmPath {
        /// CSV of points, label (1 or -1) in the last column.
        points: PathBuf,
        #[arg(long, value_parser = rat_arg, allow_hyphen_values = true)]
        c_min: Rat,
        #[arg(long, value_parser = rat_arg, allow_hyphen_values = true)]
        c_max: Rat,
        /// Right-hand side of the equality Σ yᵢαᵢ = s.
        #[arg(long, default_value_t = 0, value_parser = clap::value_parser!(u8).range(0..=1))]
        sum_alpha: u8,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Trace conjoint part-worths over the slack penalty.
    CbcPath {
        /// `winner;loser` rows of 1-based level indices.
        choices: PathBuf,
        /// Number of levels per attribute.
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<usize>,
        #[arg(long, value_parser = rat_arg)]
        c_min: Rat,
        #[arg(long, value_parser = rat_arg)]
        c_max: Rat,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Validate shapes and positive semidefiniteness of a problem file.
    Check { file: PathBuf },
}

#[derive(Args)]
struct RunArgs {
    /// Print x(μ) at a single parameter value.
    #[arg(long, value_parser = rat_arg, allow_hyphen_values = true)]
    eval: Option<Rat>,
    /// Sample the path as CSV every STEP units of μ.
    #[arg(long, value_parser = rat_arg, conflicts_with = "exact")]
    sample: Option<Rat>,
    /// Print exact pieces (the default).
    #[arg(long)]
    exact: bool,
    /// Significant digits in sampled output.
    #[arg(long, default_value_t = DEFAULT_PRECISION)]
    precision: u32,
    /// Check N sample points against the brute-force oracle.
    #[arg(long, value_name = "N")]
    verify: Option<usize>,
    #[arg(long, value_name = "N")]
    max_pivots: Option<usize>,
    /// Print pivot statistics to stderr.
    #[arg(long)]
    stats: bool,
}

fn rat_arg(s: &str) -> Result<Rat, String> {
    parse_rat(s).map_err(|e| e.to_string())
}

fn read(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Solved problem plus how to present it.
struct Traced<'a> {
    qp: &'a ParametricQP,
    path: SolutionPath,
    /// Path and objective in the caller's variables, when they differ from `qp`'s.
    shown: Option<(SolutionPath, Objective)>,
}

fn trace(qp: &ParametricQP, run: &RunArgs) -> Result<SolutionPath> {
    let lcp = qp_to_lcp(qp)?;
    let mut opts = TraceOptions::default();
    if let Some(limit) = run.max_pivots {
        opts.solve.max_pivots = limit;
    }
    Ok(trace_path_with(&lcp, &opts, &mut |_| {})?)
}

fn emit(t: Traced<'_>, run: &RunArgs) -> Result<u8> {
    let (path, objective) = match &t.shown {
        Some((p, o)) => (p, o.clone()),
        None => (&t.path, t.qp.objective()),
    };
    if let Some(mu) = &run.eval {
        match path.eval(mu)? {
            PathValue::Feasible(x) => {
                println!("x={} objective={}", fmt_vec(&x), fmt_rat(&objective.value(mu, &x)))
            }
            PathValue::Infeasible => println!("infeasible"),
        }
    } else {
        let mode = match &run.sample {
            Some(step) if step <= &Rat::from_integer(0.into()) => bail!("--sample step must be positive"),
            Some(step) => OutputMode::Sampled { step: step.clone(), precision: run.precision },
            None => OutputMode::Exact,
        };
        print!("{}", write_path(path, &objective, &mode));
    }
    if run.stats {
        eprintln!("{}", StatsReport(&t.path.stats));
    }
    if let Some(samples) = run.verify {
        let report = verify_path(t.qp, &t.path, samples)?;
        eprintln!("{report}");
        if !report.passed() {
            return Ok(EXIT_VERIFY);
        }
    }
    Ok(0)
}

fn run(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::SolvePath { file, run } => {
            let problem = parse_problem(&read(&file)?).with_context(|| file.display().to_string())?;
            let path = trace(&problem.qp, &run)?;
            emit(Traced { qp: &problem.qp, path, shown: None }, &run)
        }
        Command::SvmPath { points, c_min, c_max, sum_alpha, run } => {
            let (pts, labels) = read_svm_points(&read(&points)?).with_context(|| points.display().to_string())?;
            let inst = SvmInstance::from_points(&pts, &labels)?;
            let sum = if sum_alpha == 1 { SumAlpha::One } else { SumAlpha::Zero };
            let qp = build_svm_dual(&inst, c_min, c_max, sum)?;
            let path = trace(&qp, &run)?;
            emit(Traced { qp: &qp, path, shown: None }, &run)
        }
        Command::CbcPath { choices, levels, c_min, c_max, run } => {
            let design = ConjointDesign::new(levels)?;
            let obs = read_cbc_choices(&read(&choices)?, &design).with_context(|| choices.display().to_string())?;
            let cbc = build_cbc(&design, &obs, c_min, c_max)?;
            let path = trace(&cbc.qp, &run)?;
            let shown = (path.map_x(&cbc.map.matrix()), cbc.original_objective());
            emit(Traced { qp: &cbc.qp, path, shown: Some(shown) }, &run)
        }
        Command::Check { file } => {
            let problem = parse_problem(&read(&file)?).with_context(|| file.display().to_string())?;
            let qp = &problem.qp;
            if !validate_psd(qp.q())? {
                bail!("Q is not positive semidefinite");
            }
            println!("ok n={} m={} mu=[{}, {}]", qp.n(), qp.m(), fmt_rat(qp.mu_min()), fmt_rat(qp.mu_max()));
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = if e.downcast_ref::<Fault>().is_some() { EXIT_FAULT } else { EXIT_USAGE };
            ExitCode::from(code)
        }
    }
}
