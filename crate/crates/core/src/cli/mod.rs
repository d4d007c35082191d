//! The `pklt-lab` command line: load a model file, run one computation,
//! print a report.
//!
//! Exit codes: 0 success, 1 computation failure, 2 parse or schema error,
//! 3 model validation failure, 4 golden corpus mismatch.

pub mod corpus;
pub mod model_file;
pub mod render;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, ValueEnum};
use serde_json::Value;

use crate::lattice::{parse_rational, Rational};
use crate::potential::{fano_type_test, PairError, PairSpec};
use crate::zariski::ZariskiError;
use model_file::{load_model, LoadError, LoadedModel, NamedDivisor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Check,
    Zariski,
    Potential,
    Pnklt,
    Classify,
    Fano,
    Rcc,
    Examples,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "pklt-lab", version, about = "Exact potential-klt computations on blow-up towers of surfaces")]
pub struct Args {
    pub command: Command,
    /// Model file (schema pklt-lab/1).
    pub model: Option<PathBuf>,
    /// Divisor name for `zariski`; `antiK` and `K` are built in.
    #[arg(long)]
    pub divisor: Option<String>,
    /// Tower level; defaults to the declared pair level, else the top.
    #[arg(long)]
    pub level: Option<usize>,
    /// Thresholds for the epsilon-loci, as p/q. Repeatable.
    #[arg(long)]
    pub eps: Vec<String>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(i32)]
pub enum Exit {
    Ok = 0,
    Computation = 1,
    Schema = 2,
    Validation = 3,
    GoldenMismatch = 4,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit: Exit,
    pub stdout: String,
}

struct Failure {
    exit: Exit,
    report: Value,
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        match e {
            LoadError::Parse(m) => Failure { exit: Exit::Schema, report: report::error("parse", &m, None) },
            LoadError::Schema(l) => Failure { exit: Exit::Schema, report: report::error("schema", &l.message, Some(&l.pointer)) },
            LoadError::Validation(v) => {
                let violations: Vec<Value> =
                    v.iter().map(|l| serde_json::json!({"pointer": l.pointer, "message": l.message})).collect();
                Failure {
                    exit: Exit::Validation,
                    report: serde_json::json!({"error": {"kind": "validation", "violations": violations}}),
                }
            }
        }
    }
}

impl From<PairError> for Failure {
    fn from(e: PairError) -> Self {
        Failure { exit: Exit::Computation, report: report::error(report::pair_error_kind(&e), &e.to_string(), None) }
    }
}

impl From<ZariskiError> for Failure {
    fn from(e: ZariskiError) -> Self {
        let kind = match e {
            ZariskiError::NotPseudoeffective(_) => "not-pseudoeffective",
            ZariskiError::Model(_) => "model",
        };
        Failure { exit: Exit::Computation, report: report::error(kind, &e.to_string(), None) }
    }
}

fn usage(message: &str) -> Failure {
    Failure { exit: Exit::Schema, report: report::error("usage", message, None) }
}

fn read_model(args: &Args) -> Result<LoadedModel, Failure> {
    let path = args.model.as_ref().ok_or_else(|| usage("this command needs a model file"))?;
    let text = std::fs::read_to_string(path).map_err(|e| usage(&format!("cannot read {}: {e}", path.display())))?;
    Ok(load_model(&text)?)
}

fn parse_eps(args: &Args) -> Result<Vec<Rational>, Failure> {
    args.eps
        .iter()
        .map(|s| parse_rational(s).map_err(|e| usage(&format!("--eps {s}: {e}"))))
        .collect()
}

fn pair(loaded: &LoadedModel, args: &Args) -> Result<PairSpec, Failure> {
    let (level, delta) = loaded.pair_parts(args.level)?;
    Ok(PairSpec::new(loaded.model.clone(), level, delta)?)
}

fn execute(args: &Args) -> Result<(Exit, Value), Failure> {
    if args.command == Command::Examples {
        let (report, ok) = corpus::run_examples();
        return Ok((if ok { Exit::Ok } else { Exit::GoldenMismatch }, report));
    }
    let eps = parse_eps(args)?;
    if args.command == Command::Check {
        // Construction already validates; a model that loads is valid.
        let loaded = read_model(args)?;
        return Ok((Exit::Ok, report::check(&loaded.model, &loaded.model.validate())));
    }
    let loaded = read_model(args)?;
    let report = match args.command {
        Command::Zariski => {
            let level = args.level.unwrap_or(loaded.model.top_index());
            if level > loaded.model.top_index() {
                return Err(usage(&format!("--level {level} is above the top level {}", loaded.model.top_index())));
            }
            let name = args.divisor.as_deref().unwrap_or("antiK");
            let class = match loaded.resolve(name, level)? {
                NamedDivisor::Divisor(d) => loaded.model.class_of(&d).map_err(|e| Failure::from(PairError::from(e)))?,
                NamedDivisor::Class(c) => c,
            };
            report::zariski_command(&loaded.model, level, name, &class)?
        }
        Command::Potential => report::potential(&pair(&loaded, args)?),
        Command::Pnklt => report::pnklt(&pair(&loaded, args)?, &eps)?,
        Command::Classify => report::classify(&pair(&loaded, args)?, &eps)?,
        Command::Fano => {
            let level = args.level.or(loaded.pair.as_ref().map(|p| p.level)).unwrap_or(loaded.model.top_index());
            if level > loaded.model.top_index() {
                return Err(usage(&format!("--level {level} is above the top level {}", loaded.model.top_index())));
            }
            report::fano(&fano_type_test(&loaded.model, level)?, level)
        }
        Command::Rcc => {
            let p = pair(&loaded, args)?;
            let r = report::rcc_command(&p);
            if r["applicable"] == Value::Bool(false) {
                return Err(Failure {
                    exit: Exit::Computation,
                    report: report::error("not-applicable", r["explanation"].as_str().unwrap_or_default(), None),
                });
            }
            r
        }
        Command::Check | Command::Examples => unreachable!("handled above"),
    };
    Ok((Exit::Ok, report))
}

fn format_output(v: &Value, format: Format, color: bool) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(v).expect("reports serialize");
            s.push('\n');
            s
        }
        Format::Text => render::render_text(v, color),
    }
}

/// Runs one invocation. `color` applies to text output only.
pub fn run<I, T>(argv: I, color: bool) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args = match Args::try_parse_from(argv) {
        Ok(a) => a,
        Err(e) => {
            use clap::error::ErrorKind;
            let exit = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => Exit::Ok,
                _ => Exit::Schema,
            };
            return Outcome { exit, stdout: e.to_string() };
        }
    };
    let (exit, value) = match execute(&args) {
        Ok(r) => r,
        Err(f) => (f.exit, f.report),
    };
    Outcome { exit, stdout: format_output(&value, args.format, color) }
}
