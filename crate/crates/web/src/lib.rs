//! Browser bindings: run a program, explore Thomson's lamp across stages,
//! and trace the bouncing ball at one stage. Every function returns JSON.

use serde::Serialize;
use wasm_bindgen::prelude::*;
use whdt::cli::{parse_oracle_arg, parse_schedule, run_source, RunConfig};
use whdt::exactnum::{parse_rational, ExactReal, Rational};
use whdt::semantics::{eval_stage_observed, EvalConfig, Observer, OracleBinding, StageContext};
use whdt::syntax::{parse, Loc};

pub const THOMSON: &str = include_str!("../../../corpus/thomson.whdt");
pub const BALL: &str = include_str!("../../../corpus/ball.whdt");

/// Largest stage the demo evaluates, to keep the page responsive.
const MAX_STAGE: u32 = 4096;

fn error_json(message: impl std::fmt::Display) -> String {
    serde_json::json!({ "error": message.to_string() }).to_string()
}

fn to_f64(q: &Rational) -> f64 {
    num_traits::ToPrimitive::to_f64(q).unwrap_or(f64::NAN)
}

fn list(s: &str) -> Vec<String> {
    s.split(',').map(str::trim).filter(|x| !x.is_empty()).map(String::from).collect()
}

/// Runs `source` and returns the report (the CLI's JSON schema).
/// `inputs` is a comma list such as `x=7, y=1/2`; `oracles` is a
/// whitespace-separated list such as `A=primes B=finite:1,4`.
#[wasm_bindgen]
pub fn run_program(source: &str, inputs: &str, stages: &str, oracles: &str, energy_var: &str) -> String {
    let mut config = RunConfig {
        inputs: list(inputs),
        ..RunConfig::default()
    };
    if !stages.trim().is_empty() {
        match parse_schedule(stages) {
            Ok(s) => config.schedule = s,
            Err(e) => return error_json(e),
        }
    }
    if config.schedule.last().is_some_and(|&n| n > MAX_STAGE as u64) {
        return error_json(format!("stages above {MAX_STAGE} are disabled in the demo"));
    }
    for o in oracles.split_whitespace() {
        match parse_oracle_arg(o) {
            Ok(b) => config.oracles.push(b),
            Err(e) => return error_json(e),
        }
    }
    if !energy_var.trim().is_empty() {
        config.cost.energy_var = Some(energy_var.trim().to_string());
    }
    match run_source("program", source, &config) {
        Ok(report) => report.to_json(),
        Err(e) => error_json(e),
    }
}

#[derive(Serialize)]
struct LampPoint {
    stage: u64,
    lamp: String,
    cost: String,
}

/// Lamp value and metered cost at stages `0..=max_stage`.
#[wasm_bindgen]
pub fn thomson_series(max_stage: u32) -> String {
    if max_stage > MAX_STAGE {
        return error_json(format!("max stage is {MAX_STAGE}"));
    }
    let program = parse(THOMSON).expect("corpus program parses");
    let config = EvalConfig::default();
    let mut points = Vec::new();
    for n in 0..=max_stage as u64 {
        let ctx = StageContext::new(n, &config);
        let r = match whdt::semantics::eval_stage(&program, &[], &ctx, &OracleBinding::new()) {
            Ok(r) => r,
            Err(e) => return error_json(e),
        };
        points.push(LampPoint {
            stage: n,
            lamp: r.store.get("lamp").map(ToString::to_string).unwrap_or_default(),
            cost: whdt::exactnum::format_rational(&r.ledger.total),
        });
    }
    serde_json::to_string(&points).expect("serializes")
}

/// Records `(t, h)` at the end of every step of the ball loop.
#[derive(Default)]
struct Trajectory {
    h: f64,
    samples: Vec<(f64, f64)>,
}

impl Observer for Trajectory {
    fn assign(&mut self, var: &str, value: &ExactReal, _site: Option<Loc>) {
        let Some(q) = value.as_rational() else { return };
        match var {
            "h" => self.h = to_f64(q),
            "t" => self.samples.push((to_f64(q), self.h)),
            _ => {}
        }
    }
}

#[derive(Serialize)]
struct BallTrace {
    stage: u64,
    dt: String,
    bounces: String,
    energy_initial: String,
    energy_final: String,
    steps: u64,
    cost: String,
    t: Vec<f64>,
    h: Vec<f64>,
}

/// Height of the ball after each step at one stage, for plotting.
#[wasm_bindgen]
pub fn ball_trace(restitution: &str, horizon: &str, stage: u32) -> String {
    if stage > MAX_STAGE {
        return error_json(format!("max stage is {MAX_STAGE}"));
    }
    let c = match parse_rational(restitution) {
        Ok(c) if c >= Rational::from_integer(0.into()) && c <= Rational::from_integer(1.into()) => c,
        Ok(_) => return error_json("restitution must lie in [0, 1]"),
        Err(e) => return error_json(e),
    };
    let horizon = match parse_rational(horizon) {
        Ok(h) if h > Rational::from_integer(0.into()) && h <= Rational::from_integer(20.into()) => h,
        Ok(_) => return error_json("horizon must lie in (0, 20]"),
        Err(e) => return error_json(e),
    };
    let program = parse(BALL).expect("corpus program parses");
    let mut config = EvalConfig::default();
    config.cost.energy_var = Some("E".into());
    let ctx = StageContext::new(stage as u64, &config);
    let inputs = [
        ExactReal::Rational(c),
        ExactReal::from(8),
        ExactReal::Rational(horizon),
    ];
    // `t := 0` runs before `h` is set, so seed the drop height
    let mut traj = Trajectory {
        h: 4.0,
        samples: Vec::new(),
    };
    let r = match eval_stage_observed(&program, &inputs, &ctx, &OracleBinding::new(), &mut traj) {
        Ok(r) => r,
        Err(e) => return error_json(e),
    };
    if let Some(f) = r.status.failure() {
        return error_json(f);
    }
    let energy = r.ledger.energy.clone().unwrap_or_default();
    let fmt = |q: Option<Rational>| q.map(|q| whdt::exactnum::format_rational(&q)).unwrap_or_default();
    let trace = BallTrace {
        stage: stage as u64,
        dt: whdt::exactnum::format_rational(&r.dt),
        bounces: r.store.get("bounces").map(ToString::to_string).unwrap_or_default(),
        energy_initial: fmt(energy.initial),
        energy_final: fmt(energy.last),
        steps: r.steps,
        cost: whdt::exactnum::format_rational(&r.ledger.total),
        t: traj.samples.iter().map(|s| s.0).collect(),
        h: traj.samples.iter().map(|s| s.1).collect(),
    };
    serde_json::to_string(&trace).expect("serializes")
}
