//! Command-line front end for `fejer-core`.
//!
//! Every subcommand reads its inputs from flags and, optionally, a JSON
//! config file given with `--config`; flags win over file values. The
//! `FEJER_TOL` environment variable sets the absolute integration tolerance
//! unless `--abs-tol` is given explicitly.
//!
//! Exit codes: 0 when every checked inequality holds, 1 when one is
//! violated, 2 on invalid input.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use thiserror::Error;

use fejer_core::applications::{
    arithmetic_mean, gen_log_mean, lambda_moment, lambda_moment_bound_check, means_bound_check,
    moment_bound_check, DensitySpec, MeanParams,
};
use fejer_core::battery::{default_cases, run_battery, Case};
use fejer_core::bounds::{
    bound_bounded_derivative, bound_convex_left, bound_convex_right, bound_convex_unweighted, bound_h_convex,
    bound_h_convex_mirror, bound_lipschitz, bound_s_convex, DerivBounds, LipschitzConstant,
};
use fejer_core::error::Error as CoreError;
use fejer_core::expr::Expression;
use fejer_core::fejer::{m_value, verify_lemma, BoundReport, LemmaTolerances, ProblemSpec};
use fejer_core::hconvexity::check_h_convex_with_tol;
use fejer_core::integrate::QuadratureSettings;
use fejer_core::kernel::HKernel;
use fejer_core::quadrature::{adaptive_refine, run_quadrature, uniform_partition, Partition};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VIOLATED: i32 = 1;
pub const EXIT_INPUT: i32 = 2;

pub const TOL_ENV: &str = "FEJER_TOL";

/// Input error tied to the field that caused it.
#[derive(Debug, Error)]
#[error("{field}: {message}")]
pub struct CliError {
    pub field: String,
    pub message: String,
}

impl CliError {
    fn new(field: impl Into<String>, message: impl ToString) -> Self {
        CliError {
            field: field.into(),
            message: message.to_string(),
        }
    }

    fn missing(field: &str) -> Self {
        CliError::new(field, "required but not given")
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "fejer", version, about = "Weighted trapezoidal inequalities for h-convex functions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the structural properties of M(t) and the trapezoidal identity.
    VerifyLemma(Invocation<LemmaArgs>),
    /// Compare the trapezoidal gap with one of the bounds.
    Bound(Invocation<BoundArgs>),
    /// Weighted composite trapezoid with its error certificate.
    Quad(Invocation<QuadArgs>),
    /// Arithmetic versus generalized logarithmic mean.
    Means(Invocation<MeansArgs>),
    /// Moment bound for a symmetric probability density.
    Moment(Invocation<MomentArgs>),
    /// Sampling check that a nonnegative function is h-convex.
    CheckHconvex(Invocation<HConvexArgs>),
    /// Run the regression battery.
    Battery(Invocation<BatteryArgs>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Text,
    Csv,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Common {
    /// JSON file with default values for any flag (flags take precedence).
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Absolute tolerance of the adaptive integrator (env FEJER_TOL when unset).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub abs_tol: Option<f64>,
    /// Relative tolerance of the adaptive integrator.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rel_tol: Option<f64>,
    /// Bisection depth limit of the adaptive integrator.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_depth: Option<u32>,
}

const COMMON_KEYS: [&str; 5] = ["format", "output", "abs_tol", "rel_tol", "max_depth"];

#[derive(Debug, Clone, Args)]
pub struct Invocation<T: Args> {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub args: T,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LemmaArgs {
    /// f(x); defaults to x^2.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fprime: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    /// Grid size for the pointwise checks and the M(t) table.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    /// Write a `t,M` CSV table of M(t) here.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mplot: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Which {
    #[default]
    HConvex,
    Mirror,
    SConvex,
    ConvexLeft,
    ConvexRight,
    ConvexUnweighted,
    BoundedDerivative,
    Lipschitz,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fprime: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    /// `power:K`, `constant:C` or `custom:<expr in x>`; defaults to power:1.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<String>,
    #[arg(long, value_enum)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub which: Option<Which>,
    /// Exponent for `--which s-convex`.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub s: Option<f64>,
    /// Lower bound m of f' for `--which bounded-derivative`.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_lo: Option<f64>,
    /// Upper bound M of f'.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m_hi: Option<f64>,
    /// Lipschitz constant of f'.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    /// Hölder exponents for the bounded-derivative companion bound.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadArgs {
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fprime: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<String>,
    /// Number of uniform subintervals.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Refine greedily until the certificate is below `--tol`.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub adaptive: Option<bool>,
    /// Target for the total error certificate.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    /// Stop refining at this many subintervals.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_intervals: Option<usize>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeansArgs {
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    /// Mean exponent.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    /// Kernel exponent of h(t) = t^k.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentArgs {
    /// Density on [a, b].
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    /// Moment order; f(x) = x^λ/λ unless `--f` is given. Defaults to 1.
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fprime: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<String>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HConvexArgs {
    /// Nonnegative function to test.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    /// Slack in the inequality; defaults to 1e-9 (1 + max |phi|).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatteryArgs {
    /// JSON array of cases to run instead of the built-in ones.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cases: Option<PathBuf>,
    /// Negate the bound of the named case (mutation check). Repeatable.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub flip: Vec<String>,
}

/// A cell of a CSV or text table.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => fmt_sig(*x),
            Cell::Text(s) => s.clone(),
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(b.to_string())
    }
}

/// Result of one subcommand before formatting.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub json: Value,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    pub notes: Vec<String>,
    pub ok: bool,
}

impl Outcome {
    fn from_reports(json: Value, reports: &[&BoundReport]) -> Self {
        let rows = reports.iter().map(|r| report_row(r)).collect();
        let notes = reports
            .iter()
            .flat_map(|r| r.warnings.iter().map(move |w| format!("warning ({}): {w}", r.label)))
            .collect();
        Outcome {
            json,
            header: REPORT_HEADER.to_vec(),
            rows,
            notes,
            ok: reports.iter().all(|r| r.satisfied),
        }
    }

    fn exit_code(&self) -> i32 {
        if self.ok {
            EXIT_OK
        } else {
            EXIT_VIOLATED
        }
    }
}

const REPORT_HEADER: [&str; 5] = ["label", "measured", "bound", "slack", "satisfied"];

fn report_row(r: &BoundReport) -> Vec<Cell> {
    vec![
        r.label.as_str().into(),
        r.measured.into(),
        r.bound.into(),
        r.slack.into(),
        r.satisfied.into(),
    ]
}

/// Formats with 15 significant digits, `.` as decimal separator and no
/// trailing zeros.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..15).contains(&exp) {
        let decimals = (14 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        let s = if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        };
        if s == "-0" {
            "0".to_string()
        } else {
            s
        }
    } else {
        let s = format!("{x:.14e}");
        let (mantissa, e) = s.split_once('e').expect("exponent form");
        let mantissa = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{mantissa}e{e}")
    }
}

/// Formats an outcome.
pub fn render(outcome: &Outcome, format: Format) -> CliResult<String> {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&outcome.json).map_err(|e| CliError::new("output", e))?;
            s.push('\n');
            Ok(s)
        }
        Format::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let err = |e: csv::Error| CliError::new("output", e);
            w.write_record(&outcome.header).map_err(err)?;
            for row in &outcome.rows {
                w.write_record(row.iter().map(Cell::render)).map_err(err)?;
            }
            let bytes = w.into_inner().map_err(|e| CliError::new("output", e))?;
            String::from_utf8(bytes).map_err(|e| CliError::new("output", e))
        }
        Format::Text => {
            let mut out = String::new();
            for row in &outcome.rows {
                let fields: Vec<String> = outcome
                    .header
                    .iter()
                    .zip(row)
                    .map(|(h, c)| format!("{h}={}", c.render()))
                    .collect();
                out.push_str(&fields.join("  "));
                out.push('\n');
            }
            for n in &outcome.notes {
                out.push_str(n);
                out.push('\n');
            }
            out.push_str(if outcome.ok { "result: satisfied\n" } else { "result: VIOLATED\n" });
            Ok(out)
        }
    }
}

fn read_config(path: &Path) -> CliResult<Map<String, Value>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::new("config", format!("{}: {e}", path.display())))?;
    match serde_json::from_str::<Value>(&text) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(CliError::new("config", "top level must be a JSON object")),
        Err(e) => Err(CliError::new("config", e)),
    }
}

/// Overlays flag values on config-file values and deserializes the result.
fn merge<T: Serialize + DeserializeOwned>(
    flags: &T,
    file: &Map<String, Value>,
    keep: impl Fn(&str) -> bool,
) -> CliResult<T> {
    let mut merged: Map<String, Value> = file
        .iter()
        .filter(|(k, _)| keep(k))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    if let Value::Object(m) = serde_json::to_value(flags).map_err(|e| CliError::new("config", e))? {
        merged.extend(m);
    }
    serde_json::from_value(Value::Object(merged)).map_err(|e| CliError::new("config", e))
}

fn resolve<T: Args + Serialize + DeserializeOwned>(inv: &Invocation<T>) -> CliResult<(Common, T)> {
    let file = match &inv.common.config {
        Some(path) => read_config(path)?,
        None => Map::new(),
    };
    let mut common: Common = merge(&inv.common, &file, |k| COMMON_KEYS.contains(&k))?;
    common.config = inv.common.config.clone();
    let args = merge(&inv.args, &file, |k| !COMMON_KEYS.contains(&k))?;
    Ok((common, args))
}

fn settings(common: &Common) -> CliResult<QuadratureSettings> {
    let mut s = QuadratureSettings::default();
    if let Ok(v) = std::env::var(TOL_ENV) {
        s.abs_tol = v
            .trim()
            .parse()
            .map_err(|_| CliError::new(TOL_ENV, format!("not a number: {v:?}")))?;
    }
    if let Some(t) = common.abs_tol {
        s.abs_tol = t;
    }
    if let Some(t) = common.rel_tol {
        s.rel_tol = t;
    }
    if let Some(d) = common.max_depth {
        s.max_depth = d;
    }
    s.validate().map_err(|e| CliError::new("abs_tol/rel_tol/max_depth", e))?;
    Ok(s)
}

fn require<T: Clone>(v: &Option<T>, field: &str) -> CliResult<T> {
    v.clone().ok_or_else(|| CliError::missing(field))
}

fn parse_expr(field: &str, src: &str) -> CliResult<Expression> {
    Expression::parse(src).map_err(|e| CliError::new(field, e))
}

fn parse_kernel(src: Option<&str>) -> CliResult<HKernel> {
    src.unwrap_or("power:1").parse().map_err(|e| CliError::new("kernel", e))
}

/// Names the input field most likely responsible for a core error.
fn core_field(e: &CoreError) -> &'static str {
    match e {
        CoreError::SymmetryViolation { .. } | CoreError::NotADensity { .. } | CoreError::Negative { .. } => "g",
        CoreError::NonIntegrableKernel { .. } => "kernel",
        CoreError::ConjugateExponents { .. } => "p/q",
        CoreError::SpanMismatch { .. } => "partition",
        CoreError::Syntax { .. } | CoreError::UnknownIdentifier { .. } | CoreError::Domain { .. } => "expression",
        CoreError::DepthExhausted { .. } => "abs_tol/rel_tol/max_depth",
        CoreError::InvalidParameter(_) => "parameters",
    }
}

fn core<T>(r: fejer_core::error::Result<T>) -> CliResult<T> {
    r.map_err(|e| CliError::new(core_field(&e), e))
}

struct ProblemFields<'a> {
    f: Option<&'a str>,
    fprime: Option<&'a str>,
    g: Option<&'a str>,
    a: Option<f64>,
    b: Option<f64>,
}

fn build_problem(p: ProblemFields<'_>, s: QuadratureSettings) -> CliResult<ProblemSpec> {
    let f = parse_expr("f", p.f.ok_or_else(|| CliError::missing("f"))?)?;
    let fprime = p.fprime.map(|src| parse_expr("fprime", src)).transpose()?;
    let g = parse_expr("g", p.g.ok_or_else(|| CliError::missing("g"))?)?;
    let a = p.a.ok_or_else(|| CliError::missing("a"))?;
    let b = p.b.ok_or_else(|| CliError::missing("b"))?;
    if !(a < b) {
        return Err(CliError::new("a/b", format!("need a < b, got [{a}, {b}]")));
    }
    let spec = core(ProblemSpec::new(f, fprime, g, a, b))?;
    core(spec.with_settings(s))
}

/// Tabulates `M(t)` at `grid` equally spaced points of `[0, 1]`.
pub fn m_table(p: &ProblemSpec, grid: usize) -> CliResult<Vec<(f64, f64)>> {
    if grid < 2 {
        return Err(CliError::new("grid", "needs at least 2 points"));
    }
    (0..grid)
        .map(|i| {
            let t = i as f64 / (grid - 1) as f64;
            Ok((t, core(m_value(p, t))?))
        })
        .collect()
}

/// Writes the `t,M` table as CSV.
pub fn emit_mplot(p: &ProblemSpec, grid: usize, path: &Path) -> CliResult<()> {
    let rows = m_table(p, grid)?;
    let err = |e: csv::Error| CliError::new("mplot", e);
    let mut w = csv::Writer::from_path(path).map_err(err)?;
    w.write_record(["t", "M"]).map_err(err)?;
    for (t, m) in rows {
        w.write_record([fmt_sig(t), fmt_sig(m)]).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::new("mplot", e))
}

fn cmd_lemma(a: &LemmaArgs, s: QuadratureSettings) -> CliResult<Outcome> {
    let p = build_problem(
        ProblemFields {
            f: Some(a.f.as_deref().unwrap_or("x^2")),
            fprime: if a.f.is_none() && a.fprime.is_none() { Some("2*x") } else { a.fprime.as_deref() },
            g: a.g.as_deref(),
            a: a.a,
            b: a.b,
        },
        s,
    )?;
    let grid = a.grid.unwrap_or(101);
    if grid < 2 {
        return Err(CliError::new("grid", "needs at least 2 points"));
    }
    let reports = core(verify_lemma(&p, grid, &LemmaTolerances::default()))?;
    if let Some(path) = &a.mplot {
        emit_mplot(&p, grid, path)?;
    }
    let refs: Vec<&BoundReport> = reports.iter().collect();
    Ok(Outcome::from_reports(json!({ "command": "verify-lemma", "reports": reports }), &refs))
}

fn cmd_bound(a: &BoundArgs, s: QuadratureSettings) -> CliResult<Outcome> {
    let p = build_problem(
        ProblemFields {
            f: a.f.as_deref(),
            fprime: a.fprime.as_deref(),
            g: a.g.as_deref(),
            a: a.a,
            b: a.b,
        },
        s,
    )?;
    let which = a.which.unwrap_or_default();
    let single = |r: BoundReport| {
        let json = serde_json::to_value(&r).expect("reports serialize");
        Outcome::from_reports(json, &[&r])
    };
    Ok(match which {
        Which::HConvex => single(core(bound_h_convex(&p, &parse_kernel(a.kernel.as_deref())?))?),
        Which::Mirror => single(core(bound_h_convex_mirror(&p, &parse_kernel(a.kernel.as_deref())?))?),
        Which::SConvex => single(core(bound_s_convex(&p, require(&a.s, "s")?))?),
        Which::ConvexLeft => single(core(bound_convex_left(&p))?),
        Which::ConvexRight => single(core(bound_convex_right(&p))?),
        Which::ConvexUnweighted => single(core(bound_convex_unweighted(&p))?),
        Which::BoundedDerivative => {
            let d = DerivBounds::new(require(&a.m_lo, "m_lo")?, require(&a.m_hi, "m_hi")?)
                .map_err(|e| CliError::new("m_lo/m_hi", e))?;
            let holder = (a.p.unwrap_or(2.0), a.q.unwrap_or(2.0));
            let r = core(bound_bounded_derivative(&p, d, holder))?;
            let json = serde_json::to_value(&r).expect("reports serialize");
            Outcome::from_reports(json, &r.all())
        }
        Which::Lipschitz => {
            let k = LipschitzConstant::new(require(&a.lipschitz, "lipschitz")?)
                .map_err(|e| CliError::new("lipschitz", e))?;
            let r = core(bound_lipschitz(&p, k))?;
            let json = serde_json::to_value(&r).expect("reports serialize");
            Outcome::from_reports(json, &[&r.primary, &r.sup_form])
        }
    })
}

fn cmd_quad(a: &QuadArgs, s: QuadratureSettings) -> CliResult<Outcome> {
    let p = build_problem(
        ProblemFields {
            f: a.f.as_deref(),
            fprime: a.fprime.as_deref(),
            g: a.g.as_deref(),
            a: a.a,
            b: a.b,
        },
        s,
    )?;
    let h = parse_kernel(a.kernel.as_deref())?;
    let adaptive = a.adaptive.unwrap_or(false);
    let (partition, converged, refine_warnings): (Partition, bool, Vec<String>) = if adaptive {
        let tol = require(&a.tol, "tol")?;
        let r = core(adaptive_refine(&p, &h, tol, a.max_intervals.unwrap_or(1000)))?;
        (r.partition, r.converged, r.warnings)
    } else {
        if a.tol.is_some() {
            return Err(CliError::new("tol", "only used with --adaptive"));
        }
        let n = a.n.unwrap_or(1);
        if n == 0 {
            return Err(CliError::new("n", "needs at least one subinterval"));
        }
        (core(uniform_partition(p.a, p.b, n))?, true, Vec::new())
    };
    let mut q = core(run_quadrature(&p, &h, &partition))?;
    for w in refine_warnings {
        if !q.warnings.contains(&w) {
            q.warnings.push(w);
        }
    }
    let within_tol = a.tol.map_or(true, |t| q.error_bound <= t);
    let ok = q.certified() && converged && within_tol;
    let json = json!({
        "command": "quad",
        "kernel": h.to_string(),
        "adaptive": adaptive,
        "converged": converged,
        "partition": partition,
        "result": q,
    });
    let rows = vec![vec![
        q.value.into(),
        q.error_bound.into(),
        q.reference.into(),
        q.actual_error.into(),
        (partition.len() as f64).into(),
        converged.into(),
    ]];
    let mut notes: Vec<String> = q.warnings.iter().map(|w| format!("warning: {w}")).collect();
    if !converged {
        notes.push(format!("refinement stopped at {} intervals", partition.len()));
    }
    Ok(Outcome {
        json,
        header: vec!["value", "error_bound", "reference", "actual_error", "intervals", "converged"],
        rows,
        notes,
        ok,
    })
}

fn cmd_means(a: &MeansArgs) -> CliResult<Outcome> {
    let (lo, hi) = (require(&a.a, "a")?, require(&a.b, "b")?);
    let n = require(&a.n, "n")?;
    let mp = MeanParams::new(lo, hi, n, a.k.unwrap_or(1.0)).map_err(|e| CliError::new("a/b/n/k", e))?;
    let report = core(means_bound_check(&mp))?;
    let log_mean = gen_log_mean(lo, hi, n).ok();
    let json = json!({
        "command": "means",
        "params": mp,
        "arithmetic_mean": arithmetic_mean(lo.powf(n), hi.powf(n)),
        "log_mean": log_mean,
        "report": report,
    });
    Ok(Outcome::from_reports(json, &[&report]))
}

fn cmd_moment(a: &MomentArgs, s: QuadratureSettings) -> CliResult<Outcome> {
    let g = parse_expr("g", &require(&a.g, "g")?)?;
    let d = core(DensitySpec::with_settings(g, require(&a.a, "a")?, require(&a.b, "b")?, s))?;
    let h = parse_kernel(a.kernel.as_deref())?;
    let lambda = a.lambda.unwrap_or(1.0);
    match &a.f {
        Some(src) => {
            let f = parse_expr("f", src)?;
            let fp = a.fprime.as_deref().map(|p| parse_expr("fprime", p)).transpose()?;
            let report = core(moment_bound_check(&d, &f, fp.as_ref(), &h))?;
            let moment = core(lambda_moment(&d, lambda))?;
            let json = json!({ "command": "moment", "lambda": lambda, "moment": moment, "report": report });
            Ok(Outcome::from_reports(json, &[&report]))
        }
        None => {
            if a.fprime.is_some() {
                return Err(CliError::new("fprime", "only used together with --f"));
            }
            let m = core(lambda_moment_bound_check(&d, lambda, &h))?;
            let mut out = Outcome::from_reports(json!({ "command": "moment", "check": m }), &[&m.report]);
            if let Some(sb) = m.scaled_bound {
                if (sb - m.report.bound).abs() > 1e-12 * (1.0 + sb.abs()) {
                    out.notes.push(format!(
                        "note: the lambda-scaled form of this bound gives {}; the value above comes from f' directly",
                        fmt_sig(sb)
                    ));
                }
            }
            Ok(out)
        }
    }
}

fn cmd_hconvex(a: &HConvexArgs) -> CliResult<Outcome> {
    let phi = parse_expr("phi", &require(&a.phi, "phi")?)?;
    let h = parse_kernel(a.kernel.as_deref())?;
    let (lo, hi) = (require(&a.a, "a")?, require(&a.b, "b")?);
    let grid = a.grid.unwrap_or(21);
    let r = check_h_convex_with_tol(|x| phi.eval(x), &h, lo, hi, grid, a.tol).map_err(|e| match e {
        CoreError::Negative { .. } => CliError::new("phi", e),
        CoreError::InvalidParameter(_) => CliError::new("a/b/grid", e),
        other => CliError::new(core_field(&other), other),
    })?;
    let rows = r
        .violations
        .iter()
        .map(|v| vec![v.x.into(), v.y.into(), v.lambda.into(), v.lhs.into(), v.rhs.into()])
        .collect();
    Ok(Outcome {
        json: json!({ "command": "check-hconvex", "kernel": h.to_string(), "summary": r.summary(), "report": r }),
        header: vec!["x", "y", "lambda", "lhs", "rhs"],
        rows,
        notes: vec![r.summary()],
        ok: r.passed(),
    })
}

fn cmd_battery(a: &BatteryArgs) -> CliResult<Outcome> {
    let mut cases: Vec<Case> = match &a.cases {
        Some(path) => {
            let text =
                fs::read_to_string(path).map_err(|e| CliError::new("cases", format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| CliError::new("cases", e))?
        }
        None => default_cases(),
    };
    for name in &a.flip {
        let case = cases
            .iter_mut()
            .find(|c| &c.name == name)
            .ok_or_else(|| CliError::new("flip", format!("no case named {name:?}")))?;
        *case = case.clone().flip_bound_sign();
    }
    let report = run_battery(&cases);
    let rows = report
        .cases
        .iter()
        .map(|c| {
            vec![
                c.name.as_str().into(),
                c.category.into(),
                c.passed.into(),
                c.min_slack.into(),
            ]
        })
        .collect();
    let notes = report
        .cases
        .iter()
        .filter(|c| !c.passed)
        .flat_map(|c| c.messages.iter().map(move |m| format!("FAIL {}: {m}", c.name)))
        .chain(std::iter::once(format!("{}/{} cases passed", report.passed, report.total)))
        .collect();
    Ok(Outcome {
        json: serde_json::to_value(&report).expect("battery report serializes"),
        header: vec!["case", "category", "passed", "min_slack"],
        rows,
        notes,
        ok: report.all_passed(),
    })
}

fn execute(command: &Command) -> CliResult<(Outcome, Common)> {
    Ok(match command {
        Command::VerifyLemma(inv) => {
            let (c, a) = resolve(inv)?;
            (cmd_lemma(&a, settings(&c)?)?, c)
        }
        Command::Bound(inv) => {
            let (c, a) = resolve(inv)?;
            (cmd_bound(&a, settings(&c)?)?, c)
        }
        Command::Quad(inv) => {
            let (c, a) = resolve(inv)?;
            (cmd_quad(&a, settings(&c)?)?, c)
        }
        Command::Means(inv) => {
            let (c, a) = resolve(inv)?;
            (cmd_means(&a)?, c)
        }
        Command::Moment(inv) => {
            let (c, a) = resolve(inv)?;
            (cmd_moment(&a, settings(&c)?)?, c)
        }
        Command::CheckHconvex(inv) => {
            let (c, a) = resolve(inv)?;
            (cmd_hconvex(&a)?, c)
        }
        Command::Battery(inv) => {
            let (c, a) = resolve(inv)?;
            (cmd_battery(&a)?, c)
        }
    })
}

/// Parses `args` (including the program name), runs the command and writes
/// the report to `stdout` or the `--output` file. Diagnostics go to `stderr`.
/// Returns the process exit code.
pub fn run<I, S>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                stderr.write_all(rendered.as_bytes())
            } else {
                stdout.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let result = execute(&cli.command).and_then(|(outcome, common)| {
        let text = render(&outcome, common.format.unwrap_or_default())?;
        match &common.output {
            Some(path) => fs::write(path, &text).map_err(|e| CliError::new("output", format!("{}: {e}", path.display())))?,
            None => stdout.write_all(text.as_bytes()).map_err(|e| CliError::new("output", e))?,
        }
        Ok(outcome.exit_code())
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_INPUT
        }
    }
}
