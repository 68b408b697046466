//! Command-line front end.
//!
//! Exit codes: 0 success, 1 verification or audit failure, 2 invalid input,
//! 3 theorem not applicable. Errors go to stderr as one JSON object.

pub mod expr;

use std::ffi::OsString;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::contractions::ContractionSpec;
use crate::error::{Error, Result};
use crate::finitelab::{classify, counterexample_report, theorem_audit, AuditConfig, Model};
use crate::solver::{picard_solve, write_trace_csv, FixedPointResult, SolveConfig, StopRule};
use crate::spaces::{
    builtin_space, check_tr_finite, real_map, string_map, validate_finite, BuiltinParams,
    BuiltinSpace, FiniteSpace, FiniteSpaceFile, SelfMap, Space,
};
use crate::triangle::{c_alpha, make_builtin, psi_inverse, Family, DEFAULT_P_CAP};

pub use expr::{parse_map, Expr};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_NOT_APPLICABLE: i32 = 3;

pub const DEFAULT_MODELS: &str = "metric,ultrametric,bmetric(2),generic";

#[derive(Parser, Debug)]
#[command(name = "semifix", version, about = "Fixed points in semimetric spaces with triangle functions")]
struct Cli {
    #[arg(long, value_enum, global = true, default_value = "json")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Iterate a map to its fixed point under a chosen theorem.
    Solve(SolveArgs),
    /// Triangle-function utilities.
    #[command(subcommand)]
    Phi(PhiCommand),
    /// Check a finite-space file: matrix shape and triangle inequality.
    Validate {
        #[arg(long)]
        input: PathBuf,
    },
    /// Finite-space laboratory.
    #[command(subcommand)]
    Lab(LabCommand),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum PhiFamily {
    Sum,
    Max,
    #[value(name = "scaled_sum", alias = "scaled-sum")]
    ScaledSum,
    Power,
}

impl From<PhiFamily> for Family {
    fn from(f: PhiFamily) -> Family {
        match f {
            PhiFamily::Sum => Family::Sum,
            PhiFamily::Max => Family::Max,
            PhiFamily::ScaledSum => Family::ScaledSum,
            PhiFamily::Power => Family::Power,
        }
    }
}

#[derive(Args, Debug, Clone, Copy)]
struct PhiSpec {
    #[arg(long = "family", value_enum)]
    family: PhiFamily,
    /// Scale of `scaled_sum`.
    #[arg(long = "K")]
    k: Option<f64>,
    /// Exponent of `power`.
    #[arg(long)]
    q: Option<f64>,
}

impl PhiSpec {
    fn build(self) -> Result<crate::triangle::TriangleFunction> {
        make_builtin(self.family.into(), self.k.or(self.q))
    }
}

#[derive(Subcommand, Debug)]
enum PhiCommand {
    /// The constant C(alpha).
    Cbound {
        #[command(flatten)]
        phi: PhiSpec,
        #[arg(long)]
        alpha: f64,
        #[arg(long, default_value_t = DEFAULT_P_CAP)]
        p_cap: u32,
    },
    /// The generalized inverse of psi(u) = phi(u, 1).
    Inverse {
        #[command(flatten)]
        phi: PhiSpec,
        #[arg(long)]
        tau: f64,
    },
}

#[derive(Subcommand, Debug)]
enum LabCommand {
    /// Minimal constants, applicability and theorem audit for one instance.
    Classify {
        #[arg(long)]
        input: PathBuf,
    },
    /// Random-instance sweep over all theorems.
    Audit {
        #[arg(long, default_value_t = 1000)]
        count: usize,
        #[arg(long, default_value_t = 6)]
        n_max: usize,
        #[arg(long, env = "SEMIFIX_SEED", default_value_t = 42)]
        seed: u64,
        /// Comma-separated: metric, ultrametric, bmetric(K), generic.
        #[arg(long, default_value = DEFAULT_MODELS)]
        models: String,
        /// Where to write the reproduction file of a violating instance.
        #[arg(long)]
        repro_dir: Option<PathBuf>,
        /// Use the three-point counterexample as instance 0.
        #[arg(long)]
        inject_example: bool,
    },
    /// The three-point perimeter counterexample.
    #[command(name = "example-6-6")]
    Example66,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Banach,
    Kannan,
    Chatterjea,
    Crr,
    Perimeter,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Apriori,
    Residual,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// real_line, squared_line or string_ultrametric.
    #[arg(long, conflicts_with = "input", required_unless_present = "input")]
    space: Option<String>,
    /// Finite-space JSON file carrying its own map.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Expression in `x` for the real-line spaces, or a catalog map name.
    #[arg(long, conflicts_with = "input")]
    map: Option<String>,
    #[arg(long, value_enum)]
    family: FamilyArg,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    /// Start point: a number, a binary string, or a finite-space label.
    #[arg(long)]
    x0: Option<String>,
    #[arg(long, default_value_t = 1e-9)]
    eps: f64,
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    #[arg(long, value_enum, default_value = "apriori")]
    mode: ModeArg,
    /// Write the iteration trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// String length for string_ultrametric.
    #[arg(long)]
    m: Option<usize>,
    /// Triangle function override for squared_line.
    #[arg(long, value_enum)]
    phi: Option<PhiFamily>,
    #[arg(long = "K", requires = "phi")]
    k: Option<f64>,
    #[arg(long, requires = "phi")]
    q: Option<f64>,
}

impl SolveArgs {
    fn spec(&self) -> Result<ContractionSpec> {
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| Error::InvalidParameter(format!("--{name} is required for this family")))
        };
        match self.family {
            FamilyArg::Banach => ContractionSpec::banach(need(self.alpha, "alpha")?),
            FamilyArg::Kannan => ContractionSpec::kannan(need(self.beta, "beta")?),
            FamilyArg::Chatterjea => ContractionSpec::chatterjea(need(self.beta, "beta")?),
            FamilyArg::Crr => ContractionSpec::crr(
                need(self.alpha, "alpha")?,
                need(self.beta, "beta")?,
                need(self.gamma, "gamma")?,
            ),
            FamilyArg::Perimeter => ContractionSpec::perimeter(need(self.alpha, "alpha")?),
        }
    }

    fn config(&self) -> SolveConfig {
        SolveConfig {
            epsilon: self.eps,
            max_iter: self.max_iter,
            mode: match self.mode {
                ModeArg::Apriori => StopRule::APriori,
                ModeArg::Residual => StopRule::Residual,
            },
            record_trace: self.trace.is_some(),
        }
    }
}

/// Runs the CLI with the process's standard streams.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    run_with(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// Runs the CLI against arbitrary output streams.
pub fn run_with<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(out, "{e}");
            return EXIT_OK;
        }
        Err(e) => {
            let obj = json!({"error": "usage", "message": e.to_string().trim_end()});
            let _ = writeln!(err, "{obj}");
            return EXIT_INVALID;
        }
    };
    match dispatch(&cli, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "{}", error_json(&e));
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotApplicable(_) => EXIT_NOT_APPLICABLE,
        Error::ConclusionViolation { .. } => EXIT_FAILURE,
        _ => EXIT_INVALID,
    }
}

/// `{"error": kind, "message": text, ...}` with kind-specific extras.
pub fn error_json(e: &Error) -> Value {
    let mut obj = json!({"error": e.kind(), "message": e.to_string()});
    let extra = match e {
        Error::NotApplicable(a) => Some(("ledger", serde_json::to_value(a))),
        Error::ConclusionViolation { repro, .. } => Some(("repro", serde_json::to_value(repro))),
        Error::Syntax { offset, expected } => {
            obj["offset"] = json!(offset);
            Some(("expected", serde_json::to_value(expected)))
        }
        Error::UnknownIdentifier { offset, .. } => Some(("offset", serde_json::to_value(offset))),
        _ => None,
    };
    if let Some((key, Ok(v))) = extra {
        obj[key] = v;
    }
    obj
}

fn emit<T: Serialize>(out: &mut dyn Write, format: Format, value: &T) -> Result<()> {
    let v = serde_json::to_value(value)?;
    match format {
        Format::Json => writeln!(out, "{v}")?,
        Format::Table => write!(out, "{}", render_table(&v))?,
    }
    Ok(())
}

/// Six significant digits; exponent notation outside `[1e-4, 1e6)`.
pub fn sig6(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let a = x.abs();
    if (1e-4..1e6).contains(&a) {
        let rounded: f64 = format!("{x:.5e}").parse().expect("formatted float");
        format!("{rounded}")
    } else {
        let s = format!("{x:.5e}");
        let (mant, exp) = s.split_once('e').expect("exponent form");
        let mant = mant.trim_end_matches('0').trim_end_matches('.');
        format!("{mant}e{exp}")
    }
}

/// Flattens JSON into aligned `key  value` rows.
pub fn render_table(v: &Value) -> String {
    fn walk(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
        let key = |k: &str| {
            if prefix.is_empty() {
                k.to_owned()
            } else {
                format!("{prefix}.{k}")
            }
        };
        match v {
            Value::Object(m) => {
                for (k, v) in m {
                    walk(&key(k), v, rows);
                }
            }
            Value::Array(items) if items.iter().all(|i| !i.is_object() && !i.is_array()) => {
                let cells: Vec<String> = items.iter().map(scalar).collect();
                rows.push((prefix.to_owned(), format!("[{}]", cells.join(", "))));
            }
            Value::Array(items) => {
                for (i, v) in items.iter().enumerate() {
                    walk(&key(&i.to_string()), v, rows);
                }
            }
            other => rows.push((prefix.to_owned(), scalar(other))),
        }
    }
    fn scalar(v: &Value) -> String {
        match v {
            Value::Number(n) if n.is_f64() => sig6(n.as_f64().expect("f64")),
            Value::String(s) => s.clone(),
            other => other.to_string(),
        }
    }
    let mut rows = Vec::new();
    walk("", v, &mut rows);
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter().map(|(k, v)| format!("{k:<width$}  {v}\n")).collect()
}

fn read_space_file(path: &Path) -> Result<(FiniteSpace, Option<SelfMap>)> {
    let text = fs::read_to_string(path)?;
    let file: FiniteSpaceFile = serde_json::from_str(&text)?;
    file.into_space()
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<i32> {
    let format = cli.format;
    match &cli.command {
        Command::Solve(args) => solve(args, format, out),
        Command::Phi(PhiCommand::Cbound { phi, alpha, p_cap }) => {
            let v = c_alpha(&phi.build()?, *alpha, *p_cap)?;
            emit(out, format, &v)?;
            Ok(EXIT_OK)
        }
        Command::Phi(PhiCommand::Inverse { phi, tau }) => {
            let v = psi_inverse(&phi.build()?, *tau)?;
            emit(out, format, &json!({"tau": tau, "value": v}))?;
            Ok(EXIT_OK)
        }
        Command::Validate { input } => {
            let (space, _) = read_space_file(input)?;
            let matrix = validate_finite(&space);
            let triangle = check_tr_finite(&space, space.tf())?;
            let valid = matrix.passed && triangle.passed;
            let worst = triangle.worst.as_ref().map(|w| {
                json!({
                    "x": space.label(w.x), "y": space.label(w.y), "z": space.label(w.z),
                    "excess": w.excess,
                })
            });
            emit(
                out,
                format,
                &json!({
                    "valid": valid,
                    "matrix": matrix,
                    "triangle": {"passed": triangle.passed, "checked": triangle.checked, "worst": worst},
                }),
            )?;
            Ok(if valid { EXIT_OK } else { EXIT_FAILURE })
        }
        Command::Lab(LabCommand::Classify { input }) => {
            let (space, map) = read_space_file(input)?;
            let map = map.ok_or_else(|| Error::Format("the input file has no \"map\"".into()))?;
            let report = classify(&space, &map)?;
            emit(out, format, &report)?;
            Ok(if report.violations().next().is_some() { EXIT_FAILURE } else { EXIT_OK })
        }
        Command::Lab(LabCommand::Audit {
            count,
            n_max,
            seed,
            models,
            repro_dir,
            inject_example,
        }) => {
            let models = models
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(str::parse)
                .collect::<Result<Vec<Model>>>()?;
            let cfg = AuditConfig {
                count: *count,
                n_max: *n_max,
                seed: *seed,
                models,
                inject_example: *inject_example,
            };
            match theorem_audit(&cfg) {
                Ok(summary) => {
                    emit(out, format, &summary)?;
                    Ok(EXIT_OK)
                }
                Err(Error::ConclusionViolation { theorem, repro }) => {
                    if let Some(dir) = repro_dir {
                        fs::create_dir_all(dir)?;
                        let path = dir.join(format!("repro-{}.json", repro.index));
                        fs::write(&path, serde_json::to_string_pretty(&repro)?)?;
                    }
                    Err(Error::ConclusionViolation { theorem, repro })
                }
                Err(e) => Err(e),
            }
        }
        Command::Lab(LabCommand::Example66) => {
            emit(out, format, &counterexample_report()?)?;
            Ok(EXIT_OK)
        }
    }
}

fn finish<S: Space>(
    space: &S,
    result: FixedPointResult<S::Point>,
    args: &SolveArgs,
    format: Format,
    out: &mut dyn Write,
) -> Result<i32> {
    if let Some(path) = &args.trace {
        write_trace_csv(&result.trace, io::BufWriter::new(fs::File::create(path)?))?;
    }
    emit(out, format, &result.report(space))?;
    Ok(if result.trace.termination.converged() { EXIT_OK } else { EXIT_FAILURE })
}

fn parse_real(s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| Error::InvalidParameter(format!("--x0 must be a finite number, got `{s}`")))
}

type RealMap = Box<dyn Fn(&f64) -> Result<f64>>;

fn real_line_map(args: &SolveArgs) -> Result<RealMap> {
    let src = args
        .map
        .as_deref()
        .ok_or_else(|| Error::InvalidParameter("--map is required".into()))?;
    if let Some(f) = real_map(src) {
        return Ok(Box::new(move |x: &f64| Ok(f(*x))));
    }
    let e = parse_map(src)?;
    Ok(Box::new(move |x: &f64| e.eval(*x)))
}

fn solve(args: &SolveArgs, format: Format, out: &mut dyn Write) -> Result<i32> {
    let spec = args.spec()?;
    let cfg = args.config();

    if let Some(path) = &args.input {
        let (space, map) = read_space_file(path)?;
        let map = map.ok_or_else(|| Error::Format("the input file has no \"map\"".into()))?;
        let x0 = match &args.x0 {
            None => 0,
            Some(l) => space
                .labels()
                .iter()
                .position(|x| x == l)
                .ok_or_else(|| Error::InvalidParameter(format!("unknown label `{l}`")))?,
        };
        let result = picard_solve(&space, |i: &usize| Ok(map.apply(*i)), &x0, &spec, &cfg)?;
        return finish(&space, result, args, format, out);
    }

    let name = args.space.as_deref().expect("clap enforces --space or --input");
    let params = BuiltinParams {
        m: args.m,
        tf: args
            .phi
            .map(|family| make_builtin(family.into(), args.k.or(args.q)))
            .transpose()?,
    };
    if params.tf.is_some() && name != "squared_line" {
        return Err(Error::InvalidParameter("--phi applies to squared_line only".into()));
    }
    match builtin_space(name, &params)? {
        BuiltinSpace::RealLine(space) => {
            let f = real_line_map(args)?;
            let x0 = args.x0.as_deref().map(parse_real).transpose()?.unwrap_or(0.0);
            let result = picard_solve(&space, f, &x0, &spec, &cfg)?;
            finish(&space, result, args, format, out)
        }
        BuiltinSpace::SquaredLine(space) => {
            let f = real_line_map(args)?;
            let x0 = args.x0.as_deref().map(parse_real).transpose()?.unwrap_or(0.0);
            let result = picard_solve(&space, f, &x0, &spec, &cfg)?;
            finish(&space, result, args, format, out)
        }
        BuiltinSpace::StringUltrametric(space) => {
            let name = args.map.as_deref().unwrap_or("shift_zero");
            let f = string_map(name).ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown string map `{name}`; expected one of {}",
                    BuiltinSpace::StringUltrametric(space.clone()).catalog().join(", ")
                ))
            })?;
            let x0 = match &args.x0 {
                Some(s) => space.parse_point(s)?,
                None => "1".repeat(space.len()),
            };
            let result = picard_solve(&space, |s: &String| Ok(f(s)), &x0, &spec, &cfg)?;
            finish(&space, result, args, format, out)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("semifix").chain(args.iter().copied());
        let code = run_with(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn cbound_golden() {
        let (code, out, _) = run_capture(&["phi", "cbound", "--family", "sum", "--alpha", "0.5"]);
        assert_eq!(code, 0);
        assert_eq!(out.trim(), r#"{"value":2.0,"method":"closed_form"}"#);
    }

    #[test]
    fn usage_errors_are_json() {
        let (code, _, err) = run_capture(&["phi", "cbound", "--family", "nope", "--alpha", "0.5"]);
        assert_eq!(code, EXIT_INVALID);
        let v: Value = serde_json::from_str(err.trim()).unwrap();
        assert_eq!(v["error"], "usage");
    }

    #[test]
    fn not_applicable_exit() {
        let (code, _, err) = run_capture(&[
            "solve", "--space", "real_line", "--map", "x/2", "--family", "banach", "--alpha", "1.5",
        ]);
        assert_eq!(code, EXIT_INVALID, "{err}");
        let (code, _, err) = run_capture(&[
            "solve", "--space", "real_line", "--map", "x/2", "--family", "kannan", "--beta", "0.6",
        ]);
        assert_eq!(code, EXIT_INVALID, "{err}");
    }

    #[test]
    fn sig6_formatting() {
        assert_eq!(sig6(2.0 / 3.0), "0.666667");
        assert_eq!(sig6(2.0), "2");
        assert_eq!(sig6(1.23456789e-7), "1.23457e-7");
        assert_eq!(sig6(0.0), "0");
    }
}
