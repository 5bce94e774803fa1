//! Stagewise big-step evaluation.
//!
//! Stage `n` interprets `dt` as `1/(n+1)` and `infinity` as `n+1`. Each
//! stage runs the ordinary While semantics with exact arithmetic, bounded by
//! a step budget, and produces a final store plus a resource ledger.

mod eval;
mod macros;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use thiserror::Error;

use crate::exactnum::{ExactReal, NumError, OracleReal, Rational, DEFAULT_CMP_FUEL, DEFAULT_QUERY_LIMIT};
use crate::resources::{CostModel, ResourceLedger};
use crate::syntax::{check, Diagnostic, Loc, Program};

pub use macros::{expand_macros, MacroError};

/// Oracle names bound to their encoded reals.
pub type OracleBinding = BTreeMap<String, Arc<OracleReal>>;

pub const DEFAULT_FUEL: u64 = 10_000_000;

/// Stages 0..=15 followed by 31, 63, 127.
pub fn default_schedule() -> Vec<u64> {
    (0..16).chain([31, 63, 127]).collect()
}

#[derive(Debug, Clone)]
pub struct EvalConfig {
    /// Steps (skip, assignment, guard) allowed per stage.
    pub fuel: u64,
    pub cmp_fuel: u64,
    pub query_limit: u64,
    pub fast_path: bool,
    pub cost: CostModel,
    /// Evaluate stages on worker threads.
    pub parallel: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            fuel: DEFAULT_FUEL,
            cmp_fuel: DEFAULT_CMP_FUEL,
            query_limit: DEFAULT_QUERY_LIMIT,
            fast_path: true,
            cost: CostModel::default(),
            parallel: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct StageContext {
    pub stage: u64,
    pub dt: Rational,
    pub infinity: BigInt,
    pub fuel: u64,
    pub cmp_fuel: u64,
    pub query_limit: u64,
    pub fast_path: bool,
    pub cost: CostModel,
}

impl StageContext {
    pub fn new(stage: u64, config: &EvalConfig) -> StageContext {
        let infinity = BigInt::from(stage) + 1u8;
        StageContext {
            stage,
            dt: Rational::new(BigInt::from(1), infinity.clone()),
            infinity,
            fuel: config.fuel,
            cmp_fuel: config.cmp_fuel,
            query_limit: config.query_limit,
            fast_path: config.fast_path,
            cost: config.cost.clone(),
        }
    }
}

/// Final variable values of one stage.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Store(pub BTreeMap<String, ExactReal>);

impl Store {
    pub fn get(&self, var: &str) -> Option<&ExactReal> {
        self.0.get(var)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &ExactReal)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuntimeError {
    #[error(transparent)]
    Num(#[from] NumError),
    #[error("oracle `{0}` is not bound")]
    UnknownOracle(String),
    #[error("{context} must be a natural number, got {value}")]
    NotNatural { context: &'static str, value: String },
    #[error("variable `{0}` read before assignment")]
    UnboundVariable(String),
    #[error("macro call `{0}` was not expanded")]
    UnexpandedMacro(String),
}

#[derive(Debug, Clone, PartialEq)]
pub enum HaltStatus {
    Halted,
    /// Step budget ran out; the location is the innermost active `while`.
    FuelExhausted(Loc),
    RuntimeError(RuntimeError),
}

impl HaltStatus {
    pub fn is_halted(&self) -> bool {
        matches!(self, HaltStatus::Halted)
    }

    /// Human-readable reason when the stage did not halt normally.
    pub fn failure(&self) -> Option<String> {
        match self {
            HaltStatus::Halted => None,
            s => Some(s.to_string()),
        }
    }
}

impl fmt::Display for HaltStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HaltStatus::Halted => f.write_str("halted"),
            HaltStatus::FuelExhausted(loc) => write!(f, "fuel exhausted in loop at {loc}"),
            HaltStatus::RuntimeError(e) => write!(f, "runtime error: {e}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageResult {
    pub stage: u64,
    pub dt: Rational,
    pub store: Store,
    pub status: HaltStatus,
    pub ledger: ResourceLedger,
    /// Completed iterations of each `while`, keyed by its position.
    pub loop_iterations: BTreeMap<Loc, u64>,
    /// Steps consumed against the fuel.
    pub steps: u64,
}

impl StageResult {
    /// Total iterations over all loops.
    pub fn iterations(&self) -> u64 {
        self.loop_iterations.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SetupError {
    #[error("program is not well formed: {}", list(.0))]
    Diagnostics(Vec<Diagnostic>),
    #[error("program takes {expected} input(s), {found} given")]
    Arity { expected: usize, found: usize },
    #[error("bad schedule: {0}")]
    BadSchedule(String),
    #[error(transparent)]
    Macro(#[from] MacroError),
}

fn list(diags: &[Diagnostic]) -> String {
    diags.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; ")
}

/// Hooks called by the evaluator. `site` is the innermost enclosing `while`.
pub trait Observer {
    fn assign(&mut self, _var: &str, _value: &ExactReal, _site: Option<Loc>) {}
    fn guard(&mut self, _site: Option<Loc>) {}
    fn oracle_digits(&mut self, _count: u64, _site: Option<Loc>) {}
    fn store_size(&mut self, _size: usize) {}
}

/// Checks the program, expands macros and checks the result again.
pub fn prepare(p: &Program) -> Result<Program, SetupError> {
    let diags = check(p);
    if !diags.is_empty() {
        return Err(SetupError::Diagnostics(diags));
    }
    if p.defs.is_empty() {
        return Ok(p.clone());
    }
    let expanded = expand_macros(&p.defs, p)?;
    let diags = check(&expanded);
    if !diags.is_empty() {
        return Err(SetupError::Diagnostics(diags));
    }
    Ok(expanded)
}

fn check_arity(p: &Program, inputs: &[ExactReal]) -> Result<(), SetupError> {
    if p.inputs.len() != inputs.len() {
        return Err(SetupError::Arity {
            expected: p.inputs.len(),
            found: inputs.len(),
        });
    }
    Ok(())
}

/// Evaluates one stage.
pub fn eval_stage(
    p: &Program,
    inputs: &[ExactReal],
    ctx: &StageContext,
    oracles: &OracleBinding,
) -> Result<StageResult, SetupError> {
    let p = prepare(p)?;
    check_arity(&p, inputs)?;
    Ok(eval::run(&p, inputs, ctx, oracles, None))
}

/// [`eval_stage`] with an extra observer receiving every hook.
pub fn eval_stage_observed(
    p: &Program,
    inputs: &[ExactReal],
    ctx: &StageContext,
    oracles: &OracleBinding,
    observer: &mut dyn Observer,
) -> Result<StageResult, SetupError> {
    let p = prepare(p)?;
    check_arity(&p, inputs)?;
    Ok(eval::run(&p, inputs, ctx, oracles, Some(observer)))
}

/// Results of one program over a schedule of stages, in schedule order.
#[derive(Debug, Clone, PartialEq)]
pub struct StageSequence {
    pub outputs: Vec<String>,
    pub results: Vec<StageResult>,
}

impl StageSequence {
    pub fn stages(&self) -> Vec<u64> {
        self.results.iter().map(|r| r.stage).collect()
    }

    /// Value of `var` at every stage; `None` where the stage failed or never assigned it.
    pub fn values(&self, var: &str) -> Vec<(u64, Option<ExactReal>)> {
        self.results
            .iter()
            .map(|r| {
                let v = if r.status.is_halted() { r.store.get(var).cloned() } else { None };
                (r.stage, v)
            })
            .collect()
    }

    /// Values of `var` at halted stages only.
    pub fn halted_values(&self, var: &str) -> Vec<(u64, ExactReal)> {
        self.values(var).into_iter().filter_map(|(n, v)| v.map(|v| (n, v))).collect()
    }

    pub fn ledgers(&self) -> Vec<(u64, &ResourceLedger)> {
        self.results
            .iter()
            .filter(|r| r.status.is_halted())
            .map(|r| (r.stage, &r.ledger))
            .collect()
    }

    pub fn result(&self, stage: u64) -> Option<&StageResult> {
        self.results.iter().find(|r| r.stage == stage)
    }
}

pub fn validate_schedule(schedule: &[u64]) -> Result<(), SetupError> {
    if schedule.is_empty() {
        return Err(SetupError::BadSchedule("schedule is empty".into()));
    }
    if let Some(w) = schedule.windows(2).find(|w| w[1] <= w[0]) {
        return Err(SetupError::BadSchedule(format!(
            "stages must be strictly increasing ({} then {})",
            w[0], w[1]
        )));
    }
    Ok(())
}

/// Evaluates every stage of `schedule`. A failing stage is recorded in its
/// result and does not stop the others.
pub fn eval_stages(
    p: &Program,
    inputs: &[ExactReal],
    schedule: &[u64],
    oracles: &OracleBinding,
    config: &EvalConfig,
) -> Result<StageSequence, SetupError> {
    validate_schedule(schedule)?;
    let p = prepare(p)?;
    check_arity(&p, inputs)?;
    let run_one = |n: u64| eval::run(&p, inputs, &StageContext::new(n, config), oracles, None);

    let results = if config.parallel && schedule.len() > 1 {
        let workers = std::thread::available_parallelism().map_or(4, |n| n.get()).min(schedule.len());
        let chunk = schedule.len().div_ceil(workers);
        std::thread::scope(|s| {
            let handles: Vec<_> = schedule
                .chunks(chunk)
                .map(|part| s.spawn(|| part.iter().map(|&n| run_one(n)).collect::<Vec<_>>()))
                .collect();
            handles
                .into_iter()
                .flat_map(|h| h.join().expect("stage worker panicked"))
                .collect()
        })
    } else {
        schedule.iter().map(|&n| run_one(n)).collect()
    };
    Ok(StageSequence {
        outputs: p.outputs.clone(),
        results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::syntax::parse;

    fn stages(src: &str, inputs: &[i64], schedule: &[u64]) -> StageSequence {
        let p = parse(src).unwrap();
        let inputs: Vec<ExactReal> = inputs.iter().map(|&x| ExactReal::from(x)).collect();
        eval_stages(&p, &inputs, schedule, &OracleBinding::new(), &EvalConfig::default()).unwrap()
    }

    const THOMSON: &str = "input; output lamp;
        time := 0; lamp := 0;
        while time < 1 do { time := time + dt; lamp := 1 - lamp }";

    #[test]
    fn stage_context_values() {
        let c = StageContext::new(3, &EvalConfig::default());
        assert_eq!(c.dt, Rational::new(1.into(), 4.into()));
        assert_eq!(c.infinity, BigInt::from(4));
    }

    #[test]
    fn thomson_lamp_alternates() {
        let seq = stages(THOMSON, &[], &(0..8).collect::<Vec<_>>());
        let lamps: Vec<ExactReal> = seq.halted_values("lamp").into_iter().map(|(_, v)| v).collect();
        let expected: Vec<ExactReal> = [1, 0, 1, 0, 1, 0, 1, 0].iter().map(|&v| ExactReal::from(v)).collect();
        assert_eq!(lamps, expected);
        for r in &seq.results {
            assert_eq!(r.iterations(), r.stage + 1);
        }
    }

    #[test]
    fn empty_body_keeps_inputs() {
        let seq = stages("input a, b; output; skip", &[4, -2], &[0, 5, 9]);
        for r in &seq.results {
            assert_eq!(r.store.get("a"), Some(&ExactReal::from(4)));
            assert_eq!(r.store.get("b"), Some(&ExactReal::from(-2)));
            assert_eq!(r.store.len(), 2);
        }
    }

    #[test]
    fn fuel_exhaustion_names_the_loop() {
        let p = parse("input; output y; y := 0;\nwhile 0 < 1 do y := y + 1").unwrap();
        let config = EvalConfig {
            fuel: 100,
            ..EvalConfig::default()
        };
        let r = eval_stage(&p, &[], &StageContext::new(0, &config), &OracleBinding::new()).unwrap();
        assert_eq!(r.status, HaltStatus::FuelExhausted(Loc { line: 2, col: 1 }));
    }

    #[test]
    fn runtime_errors_are_per_stage() {
        let seq = stages("input; output y; y := 1 / (infinity - 3)", &[], &[0, 1, 2, 3]);
        assert!(seq.results[2].status.failure().unwrap().contains("division by zero"));
        assert!(seq.results[3].status.is_halted());
    }

    #[test]
    fn setup_errors() {
        let p = parse("input x; output y; y := x").unwrap();
        let e = eval_stages(&p, &[], &[0], &OracleBinding::new(), &EvalConfig::default());
        assert_eq!(e.unwrap_err(), SetupError::Arity { expected: 1, found: 0 });
        let e = eval_stages(&p, &[ExactReal::from(1)], &[2, 1], &OracleBinding::new(), &EvalConfig::default());
        assert!(matches!(e, Err(SetupError::BadSchedule(_))));
        let e = eval_stages(&p, &[ExactReal::from(1)], &[], &OracleBinding::new(), &EvalConfig::default());
        assert!(matches!(e, Err(SetupError::BadSchedule(_))));
    }

    #[test]
    fn parallel_matches_sequential() {
        let p = parse(THOMSON).unwrap();
        let sched = default_schedule();
        let seq = eval_stages(&p, &[], &sched, &OracleBinding::new(), &EvalConfig::default()).unwrap();
        let config = EvalConfig {
            parallel: true,
            ..EvalConfig::default()
        };
        let par = eval_stages(&p, &[], &sched, &OracleBinding::new(), &config).unwrap();
        assert_eq!(seq, par);
    }

    #[test]
    fn chained_comparison_short_circuits() {
        // the right conjunct would divide by zero
        let seq = stages("input x; output y; y := 0; if 1 < x < 1 / x then y := 1", &[0], &[0]);
        assert!(seq.results[0].status.is_halted());
        assert_eq!(seq.results[0].store.get("y"), Some(&ExactReal::from(0)));
    }
}
