//! Front-end operations shared by the `whdt` binary and the browser demo:
//! running a program over a schedule, building reports, and verifying the
//! corpus against the expectations embedded in each file.

mod config;
mod corpus;
mod report;
mod schedule;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::exactnum::{parse_rational, ExactReal, Rational};
use crate::oracles::{bind, OracleError, OracleSet, OracleSource};
use crate::resources::CostModel;
use crate::semantics::{self, default_schedule, EvalConfig, SetupError, DEFAULT_FUEL};
use crate::syntax::{parse, Program, SyntaxError};

pub use config::{apply_cost, load_cost_config};
pub use corpus::{cmd_corpus, corpus_dir, parse_header, CorpusEntry, CorpusHeader, CorpusSummary};
pub use report::{EnergyView, NamedValue, OutputReport, Report, StageRow, SupertaskReport, VerdictView};
pub use schedule::parse_schedule;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Text,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "text" => Ok(ReportFormat::Text),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown report format `{other}` (text or json)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Input values, positional or `NAME=VALUE`, as exact rationals.
    pub inputs: Vec<String>,
    pub schedule: Vec<u64>,
    pub fuel: u64,
    pub cmp_fuel: u64,
    pub oracles: Vec<(String, OracleSource)>,
    pub cost: CostModel,
    pub format: ReportFormat,
    pub parallel: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let eval = EvalConfig::default();
        RunConfig {
            inputs: Vec::new(),
            schedule: default_schedule(),
            fuel: DEFAULT_FUEL,
            cmp_fuel: eval.cmp_fuel,
            oracles: Vec::new(),
            cost: CostModel::default(),
            format: ReportFormat::Text,
            parallel: false,
        }
    }
}

impl RunConfig {
    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            fuel: self.fuel,
            cmp_fuel: self.cmp_fuel,
            cost: self.cost.clone(),
            parallel: self.parallel,
            ..EvalConfig::default()
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{name}: {error}")]
    Syntax { name: String, error: SyntaxError },
    #[error(transparent)]
    Setup(#[from] SetupError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("corpus: {0}")]
    Corpus(String),
}

impl CliError {
    /// 2 for usage and input problems, 1 for corpus failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Corpus(_) => 1,
            _ => 2,
        }
    }
}

pub fn read_program(path: &Path) -> Result<(String, Program), CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let name = path.display().to_string();
    let program = parse(&text).map_err(|error| CliError::Syntax {
        name: name.clone(),
        error,
    })?;
    Ok((name, program))
}

/// Matches raw input strings to the program's declared inputs.
pub fn resolve_inputs(p: &Program, raw: &[String]) -> Result<Vec<Rational>, CliError> {
    let mut values: Vec<Option<Rational>> = vec![None; p.inputs.len()];
    let mut next = 0;
    for item in raw {
        let (slot, text) = match item.split_once('=') {
            Some((name, v)) => {
                let i = p
                    .inputs
                    .iter()
                    .position(|x| x == name.trim())
                    .ok_or_else(|| CliError::Usage(format!("program has no input `{}`", name.trim())))?;
                (i, v)
            }
            None => {
                while next < values.len() && values[next].is_some() {
                    next += 1;
                }
                if next >= values.len() {
                    return Err(CliError::Usage(format!(
                        "too many inputs: program takes {}",
                        p.inputs.len()
                    )));
                }
                (next, item.as_str())
            }
        };
        let q = parse_rational(text.trim()).map_err(|e| CliError::Usage(format!("input `{item}`: {e}")))?;
        values[slot] = Some(q);
    }
    values
        .into_iter()
        .zip(&p.inputs)
        .map(|(v, name)| v.ok_or_else(|| CliError::Usage(format!("missing value for input `{name}`"))))
        .collect()
}

/// Runs a parsed program over the configured schedule.
pub fn run_program(name: &str, p: &Program, config: &RunConfig) -> Result<Report, CliError> {
    if config.fuel == 0 || config.cmp_fuel == 0 {
        return Err(CliError::Usage("fuel values must be positive".into()));
    }
    config.cost.validate().map_err(CliError::Usage)?;
    let inputs = resolve_inputs(p, &config.inputs)?;
    let mut sets = Vec::new();
    for (oracle, source) in &config.oracles {
        sets.push(OracleSet::build(oracle, source.clone(), p)?);
    }
    let oracles = bind(sets);
    if let Some(missing) = p.oracles().into_iter().find(|a| !oracles.contains_key(a)) {
        return Err(CliError::Usage(format!(
            "oracle `{missing}` is not bound (use --oracle {missing}=SOURCE)"
        )));
    }
    let exact: Vec<ExactReal> = inputs.iter().cloned().map(ExactReal::Rational).collect();
    let seq = semantics::eval_stages(p, &exact, &config.schedule, &oracles, &config.eval_config())?;
    let named = p
        .inputs
        .iter()
        .zip(&inputs)
        .map(|(n, v)| NamedValue {
            name: n.clone(),
            value: crate::exactnum::format_rational(v),
        })
        .collect();
    Ok(report::build_report(name, named, &seq, config.cost.energy_var.as_deref()))
}

/// Parses and runs program text.
pub fn run_source(name: &str, source: &str, config: &RunConfig) -> Result<Report, CliError> {
    let p = parse(source).map_err(|error| CliError::Syntax {
        name: name.to_string(),
        error,
    })?;
    run_program(name, &p, config)
}

/// The `run` command: the report and the process exit code.
pub fn cmd_run(path: &Path, config: &RunConfig) -> Result<(Report, i32), CliError> {
    let (name, p) = read_program(path)?;
    let report = run_program(&name, &p, config)?;
    let code = report.exit_code();
    Ok((report, code))
}

pub fn render(report: &Report, format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => report.render_text(),
        ReportFormat::Json => report.to_json() + "\n",
    }
}

/// Parses `NAME=SOURCE`.
pub fn parse_oracle_arg(arg: &str) -> Result<(String, OracleSource), CliError> {
    let (name, src) = arg
        .split_once('=')
        .ok_or_else(|| CliError::Usage(format!("oracle binding `{arg}` is not NAME=SOURCE")))?;
    Ok((name.trim().to_string(), OracleSource::parse(src.trim())?))
}

/// Parses a positive natural given as an exact rational (`10000000`, `1e7` is not accepted).
pub fn parse_natural(flag: &str, text: &str) -> Result<u64, CliError> {
    let q = parse_rational(text).map_err(|e| CliError::Usage(format!("{flag}: {e}")))?;
    if !q.is_integer() {
        return Err(CliError::Usage(format!("{flag}: {text} is not a whole number")));
    }
    num_traits::ToPrimitive::to_u64(&q.to_integer())
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("{flag}: {text} must be a positive natural")))
}
