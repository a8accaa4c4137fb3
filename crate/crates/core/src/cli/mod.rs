//! Command-line front end. Reports go to stdout as JSON; the exit status is
//! 0 when the null is not rejected, 3 when it is, and 1 on any error.

pub mod data;
pub mod expr;

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use crate::contamination::{contamination_test_with, ContaminationSpec, SearchSettings};
use crate::divergence::{Constraint, ConstraintFamily};
use crate::error::{Error, Result};
use crate::linear::test_linear;
use crate::marginal::{marginal_test, MarginalSpec};
use crate::montecarlo::{run_plan, ReplicationPlan};
use crate::report::TestReport;

use expr::Expr;

pub const SEED_ENV: &str = "CHI2DUAL_SEED";

pub const EXIT_ACCEPT: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_REJECT: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "chi2dual",
    version,
    about = "Chi-square divergence tests through the dual representation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Test finitely many moment constraints.
    LinearTest(LinearArgs),
    /// Test all marginals of the data at once.
    MarginalTest(MarginalArgs),
    /// Test an exponential model against Pareto contamination.
    ContamTest(ContamArgs),
    /// Run a Monte Carlo replication plan.
    Calibrate(CalibrateArgs),
}

#[derive(Debug, Args)]
pub struct LinearArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// JSON list of {"expr", "target", "label"?} objects.
    #[arg(long)]
    pub constraints: PathBuf,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Also write the report here.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MarginalArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// One CDF per column, e.g. "uniform(0,1);exp(1.0)".
    #[arg(long)]
    pub marginals: String,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Number of grid cuts per coordinate (default max(2, ceil(n^(1/4)))).
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ContamArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Parameter interval as LO:HI.
    #[arg(long)]
    pub theta_range: String,
    /// Contamination weight interval as LO:HI (default -0.25:0.75).
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_range: Option<String>,
    /// Pareto shape and scale as GAMMA,NU.
    #[arg(long)]
    pub pareto: String,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// JSON search settings overriding the defaults.
    #[arg(long)]
    pub settings: Option<PathBuf>,
    /// Report the gap between the inf-sup and sup-inf values.
    #[arg(long)]
    pub minimax_check: bool,
    /// Free the numerator rate of the dual functions.
    #[arg(long)]
    pub beta_variant: bool,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    #[arg(long)]
    pub plan: PathBuf,
    /// Base seed; overrides the plan's, which overrides CHI2DUAL_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
struct ConstraintEntry {
    expr: String,
    target: f64,
    #[serde(default)]
    label: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum ConstraintFile {
    List(Vec<ConstraintEntry>),
    Object { constraints: Vec<ConstraintEntry> },
}

/// Reads a constraint file: either a JSON list of entries or an object with
/// a `constraints` list. Each entry has an `expr`, a `target` and an optional
/// `label`.
pub fn load_constraints(path: &Path) -> Result<ConstraintFamily> {
    parse_constraints(&read(path)?)
}

pub fn parse_constraints(json: &str) -> Result<ConstraintFamily> {
    let file: ConstraintFile = serde_json::from_str(json).map_err(|e| Error::Parse(format!("constraint file: {e}")))?;
    let entries = match file {
        ConstraintFile::List(v) | ConstraintFile::Object { constraints: v } => v,
    };
    let cons = entries
        .into_iter()
        .enumerate()
        .map(|(i, c)| {
            let e: Expr = c
                .expr
                .parse()
                .map_err(|err| Error::Parse(format!("constraint {}: {err}", i + 1)))?;
            let label = c.label.unwrap_or_else(|| c.expr.clone());
            Ok(Constraint::new(label, c.target, move |x: &[f64]| e.eval(x)))
        })
        .collect::<Result<Vec<_>>>()?;
    ConstraintFamily::new(cons)
}

/// Largest variable index used across a constraint file, for checking it
/// against the data width.
fn constraint_arity(json: &str) -> Result<usize> {
    let file: ConstraintFile = serde_json::from_str(json).map_err(|e| Error::Parse(format!("constraint file: {e}")))?;
    let entries = match file {
        ConstraintFile::List(v) | ConstraintFile::Object { constraints: v } => v,
    };
    let mut arity = 0;
    for c in entries {
        arity = arity.max(c.expr.parse::<Expr>()?.arity());
    }
    Ok(arity)
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))
}

fn write_json(path: &Option<PathBuf>, json: &str) -> Result<()> {
    if let Some(p) = path {
        std::fs::write(p, format!("{json}\n"))
            .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", p.display())))?;
    }
    Ok(())
}

fn parse_pair(text: &str, sep: char, what: &str) -> Result<(f64, f64)> {
    let (a, b) = text.split_once(sep).ok_or_else(|| {
        Error::Parse(format!(
            "{what}: expected two numbers separated by '{sep}', got '{text}'"
        ))
    })?;
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| Error::Parse(format!("{what}: '{}' is not a number", s.trim())))
    };
    Ok((num(a)?, num(b)?))
}

/// What a command produced: a test report decides the exit status.
#[derive(Debug)]
pub enum Outcome {
    Test(TestReport),
    Calibration,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        match self {
            Outcome::Test(r) if r.reject => EXIT_REJECT,
            _ => EXIT_ACCEPT,
        }
    }
}

fn emit_report<W: Write>(report: TestReport, json: &Option<PathBuf>, out: &mut W) -> Result<Outcome> {
    let text = report.to_json();
    writeln!(out, "{text}").map_err(|e| Error::InvalidInput(format!("cannot write report: {e}")))?;
    write_json(json, &text)?;
    Ok(Outcome::Test(report))
}

pub fn run<W: Write>(cli: Cli, out: &mut W) -> Result<Outcome> {
    match cli.command {
        Command::LinearTest(a) => {
            let sample = data::load_csv(&a.data)?;
            let text = read(&a.constraints)?;
            let arity = constraint_arity(&text)?;
            if arity > sample.d() {
                return Err(Error::InvalidInput(format!(
                    "constraints use x{arity} but the data have {} column(s)",
                    sample.d()
                )));
            }
            let report = test_linear(&sample, &parse_constraints(&text)?, a.alpha)?;
            emit_report(report, &a.json, out)
        }
        Command::MarginalTest(a) => {
            let sample = data::load_csv(&a.data)?;
            let spec: MarginalSpec = a.marginals.parse()?;
            let report = marginal_test(&sample, &spec, a.alpha, a.m)?;
            emit_report(report, &a.json, out)
        }
        Command::ContamTest(a) => {
            let sample = data::load_csv(&a.data)?;
            let (lo, hi) = parse_pair(&a.theta_range, ':', "--theta-range")?;
            let (gamma, nu) = parse_pair(&a.pareto, ',', "--pareto")?;
            let mut spec = ContaminationSpec::new(lo, hi, gamma, nu)?;
            if let Some(l) = &a.lambda_range {
                let (llo, lhi) = parse_pair(l, ':', "--lambda-range")?;
                spec = spec.with_lambda_interval(llo, lhi)?;
            }
            let mut settings = match &a.settings {
                Some(p) => serde_json::from_str(&read(p)?).map_err(|e| Error::Parse(format!("settings file: {e}")))?,
                None => SearchSettings::default(),
            };
            settings.minimax_check |= a.minimax_check;
            settings.beta_variant |= a.beta_variant;
            let report = contamination_test_with(&sample, &spec, a.alpha, &settings)?;
            emit_report(report, &a.json, out)
        }
        Command::Calibrate(a) => {
            let plan = load_plan(&read(&a.plan)?, a.seed, std::env::var(SEED_ENV).ok())?;
            let report = run_plan(&plan)?;
            eprintln!("wall time: {:.3} s", report.wall_time);
            let text = report.to_json();
            writeln!(out, "{text}").map_err(|e| Error::InvalidInput(format!("cannot write report: {e}")))?;
            write_json(&a.json, &text)?;
            Ok(Outcome::Calibration)
        }
    }
}

/// Parses a plan file. The base seed comes from `flag_seed`, else the file,
/// else `env_seed` (the value of `CHI2DUAL_SEED`).
pub fn load_plan(json: &str, flag_seed: Option<u64>, env_seed: Option<String>) -> Result<ReplicationPlan> {
    let mut value: serde_json::Value =
        serde_json::from_str(json).map_err(|e| Error::Parse(format!("plan file: {e}")))?;
    let obj = value
        .as_object_mut()
        .ok_or_else(|| Error::Parse("plan file: expected a JSON object".into()))?;
    let seed = match (flag_seed, obj.get("base_seed"), env_seed) {
        (Some(s), _, _) => Some(s),
        (None, Some(_), _) => None,
        (None, None, Some(env)) => Some(
            env.trim()
                .parse::<u64>()
                .map_err(|_| Error::Parse(format!("{SEED_ENV}: '{env}' is not a 64-bit unsigned integer")))?,
        ),
        (None, None, None) => {
            return Err(Error::InvalidInput(format!(
                "plan has no base_seed; pass --seed or set {SEED_ENV}"
            )))
        }
    };
    if let Some(s) = seed {
        obj.insert("base_seed".into(), s.into());
    }
    let plan: ReplicationPlan = serde_json::from_value(value).map_err(|e| Error::Parse(format!("plan file: {e}")))?;
    plan.validate()?;
    Ok(plan)
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit status. Errors are printed to stderr.
pub fn main_with_args<I, T, W>(args: I, out: &mut W) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
    W: Write,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_ACCEPT };
            let _ = e.print();
            return code;
        }
    };
    match run(cli, out) {
        Ok(o) => o.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}
