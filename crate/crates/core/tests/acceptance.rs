//! Acceptance criteria, one PASS/FAIL line each. Expected values come from
//! oracles written here, independent of the interpreter.

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use num_bigint::BigInt;
use num_traits::{One, Zero};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use whdt::cli::{cmd_corpus, run_program, RunConfig};
use whdt::exactnum::{Budget, DigitSource, ExactReal, OracleReal, Rational};
use whdt::hyperreal::{classify_value, ultrafilter_report, Direction, HyperrealClass, MIN_STAGES};
use whdt::oracles::{bind, run_limit, LimitSpec, OracleError, OracleSet, OracleSource};
use whdt::resources::{bounce_count, classify_supertask, SupertaskClass};
use whdt::semantics::{
    default_schedule, eval_stage_observed, eval_stages, EvalConfig, Observer, OracleBinding, StageContext,
};
use whdt::syntax::{parse, Loc, Program};

const SEED: u64 = 0x5eed_2024;
const FLOOR_LIMIT: Duration = Duration::from_secs(5);
const DECIDE_LIMIT: Duration = Duration::from_secs(10);
const BALL_STAGE_LIMIT: Duration = Duration::from_secs(30);
const DECIDE_MAX_X: u64 = 64;
const GRAPH_BOUND: u64 = 20;
const LIMIT_MAX_X: u64 = 10;
const FULL_RANGE: u64 = 127;
const BALL_RANGE: u64 = 63;
const PREFIX_LEN: u32 = 8;
const FIELD_TRIPLES: usize = 1000;

type Outcome = Result<String, String>;

fn corpus_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus").join(name)
}

fn corpus(name: &str) -> Program {
    let text = std::fs::read_to_string(corpus_path(name)).expect("corpus file readable");
    parse(&text).expect("corpus file parses")
}

fn q(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

fn int(n: i64) -> ExactReal {
    ExactReal::Rational(q(n, 1))
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn value_at(seq: &whdt::semantics::StageSequence, stage: u64, var: &str) -> Result<Rational, String> {
    let r = seq.result(stage).ok_or_else(|| format!("stage {stage} missing"))?;
    if let Some(f) = r.status.failure() {
        return Err(format!("stage {stage}: {f}"));
    }
    r.store
        .get(var)
        .and_then(ExactReal::as_rational)
        .cloned()
        .ok_or_else(|| format!("stage {stage}: `{var}` is not a rational"))
}

fn floor_oracle(num: i64, den: i64) -> i64 {
    num.div_euclid(den)
}

fn criterion_1() -> Outcome {
    let p = corpus("floor.whdt");
    let mut rng = StdRng::seed_from_u64(SEED);
    let mut cases: Vec<(i64, i64)> = vec![(37, 10), (-23, 10), (0, 1), (-1, 1)];
    for _ in 0..200 {
        let den = rng.gen_range(1..=100i64);
        cases.push((rng.gen_range(-50 * den..=50 * den), den));
    }
    let schedule = default_schedule();
    let config = EvalConfig::default();
    let start = Instant::now();
    for &(num, den) in &cases {
        let seq = eval_stages(&p, &[ExactReal::Rational(q(num, den))], &schedule, &OracleBinding::new(), &config)
            .map_err(|e| e.to_string())?;
        let want = q(floor_oracle(num, den), 1);
        for &n in &schedule {
            let got = value_at(&seq, n, "y")?;
            ensure(got == want, || format!("x = {num}/{den}, stage {n}: got {got}, want {want}"))?;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < FLOOR_LIMIT, || format!("took {elapsed:?}, limit {FLOOR_LIMIT:?}"))?;
    Ok(format!("{} inputs x {} stages exact in {elapsed:.2?}", cases.len(), schedule.len()))
}

fn prime(n: u64) -> bool {
    n >= 2 && (2..n).take_while(|d| d * d <= n).all(|d| n % d != 0)
}

fn square(n: u64) -> bool {
    (0..=n).take_while(|r| r * r <= n).any(|r| r * r == n)
}

fn criterion_2() -> Outcome {
    let p = corpus("decide.whdt");
    let schedule = default_schedule();
    let sets: [(OracleSource, fn(u64) -> bool); 3] = [
        (OracleSource::Primes, prime),
        (OracleSource::Evens, |n| n % 2 == 0),
        (OracleSource::Squares, square),
    ];
    let fast = EvalConfig::default();
    let slow = EvalConfig {
        fast_path: false,
        ..EvalConfig::default()
    };
    let start = Instant::now();
    let (mut checked, mut resolved) = (0, 0);
    for (source, member) in sets {
        let name = source.to_string();
        let oracles = bind(vec![OracleSet::builtin("A", source).map_err(|e| e.to_string())?]);
        for x in 0..=DECIDE_MAX_X {
            let want = q(member(x) as i64, 1);
            let input = [int(x as i64)];
            let seq = eval_stages(&p, &input, &schedule, &oracles, &fast).map_err(|e| e.to_string())?;
            let interval = eval_stages(&p, &input, &schedule, &oracles, &slow).map_err(|e| e.to_string())?;
            for &n in &schedule {
                let got = value_at(&seq, n, "y")?;
                ensure(got == want, || format!("{name}, x = {x}, stage {n}: got {got}, want {want}"))?;
                checked += 1;
                if let Ok(v) = value_at(&interval, n, "y") {
                    ensure(v == want, || format!("{name}, x = {x}, stage {n}: interval route gave {v}"))?;
                    resolved += 1;
                }
            }
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < DECIDE_LIMIT, || format!("took {elapsed:?}, limit {DECIDE_LIMIT:?}"))?;
    Ok(format!(
        "{checked} fast-path runs exact, interval route agreed on {resolved}/{checked}, {elapsed:.2?}"
    ))
}

fn criterion_3() -> Outcome {
    let p = corpus("compute.whdt");
    let set = OracleSet::build(
        "A",
        OracleSource::Graph {
            macro_name: "sq".into(),
            bound: GRAPH_BOUND,
        },
        &p,
    )
    .map_err(|e| e.to_string())?;
    let oracles = bind(vec![set]);
    let schedule = default_schedule();
    for x in 0..=GRAPH_BOUND as i64 {
        let seq = eval_stages(&p, &[int(x)], &schedule, &oracles, &EvalConfig::default()).map_err(|e| e.to_string())?;
        for &n in &schedule {
            let got = value_at(&seq, n, "y")?;
            ensure(got == q(x * x, 1), || format!("x = {x}, stage {n}: got {got}"))?;
        }
    }
    Ok(format!("y = x^2 for x <= {GRAPH_BOUND} at every stage"))
}

/// `F(s, x) = x if s >= x else 0`, evaluated directly at `s = n + 1`.
fn limit_f(s: u64, x: u64) -> u64 {
    if s >= x {
        x
    } else {
        0
    }
}

fn criterion_4() -> Outcome {
    let spec = LimitSpec::new(corpus("limit.whdt"), "F", "x if s >= x else 0");
    let schedule = default_schedule();
    for x in 0..=LIMIT_MAX_X {
        let seq = run_limit(&spec, x, &schedule, &EvalConfig::default()).map_err(|e| e.to_string())?;
        // first stage from which the direct values stay at x
        let expected_from = schedule
            .iter()
            .rev()
            .take_while(|&&n| limit_f(n + 1, x) == x)
            .last()
            .copied()
            .ok_or_else(|| format!("x = {x}: never stabilizes on this schedule"))?;
        let cls = classify_value(&seq.halted_values("y")).map_err(|e| e.to_string())?;
        match &cls {
            HyperrealClass::EventuallyConstant { value, from_stage }
                if value.as_rational() == Some(&q(x as i64, 1)) && *from_stage == expected_from => {}
            other => return Err(format!("x = {x}: {} (want eventually-constant({x}) from stage {expected_from})", other.summary())),
        }
        ensure(expected_from == x.saturating_sub(1), || format!("x = {x}: oracle stage {expected_from}"))?;
    }
    Ok(format!("eventually-constant(x) from stage x-1 for x <= {LIMIT_MAX_X}"))
}

const INF_DIRECT: &str = "def F {
  input s, x; output r;
  if s >= x then r := x else r := 0
}

input x; output y;
y := F(infinity, x)";

const INF_LOOP: &str = "def F {
  input s, x; output r;
  if s >= x then r := x else r := 0
}

input x; output y;
t := 0;
u := 0;
while t < 1 do {
  t := t + dt;
  u := u + 1
};
y := F(u, x)";

fn criterion_5() -> Outcome {
    let schedule: Vec<u64> = (0..=FULL_RANGE).collect();
    let config = EvalConfig::default();
    let seq = eval_stages(&corpus("inf-elim.whdt"), &[], &schedule, &OracleBinding::new(), &config)
        .map_err(|e| e.to_string())?;
    for &n in &schedule {
        let got = value_at(&seq, n, "u")?;
        ensure(got == q(n as i64 + 1, 1), || format!("stage {n}: u = {got}"))?;
    }
    match classify_value(&seq.halted_values("u")).map_err(|e| e.to_string())? {
        HyperrealClass::Unbounded {
            direction: Direction::Positive, ..
        } => {}
        other => return Err(format!("u classified {}", other.summary())),
    }
    let direct = parse(INF_DIRECT).map_err(|e| e.to_string())?;
    let looped = parse(INF_LOOP).map_err(|e| e.to_string())?;
    for x in 0..=LIMIT_MAX_X as i64 {
        let a = eval_stages(&direct, &[int(x)], &schedule, &OracleBinding::new(), &config).map_err(|e| e.to_string())?;
        let b = eval_stages(&looped, &[int(x)], &schedule, &OracleBinding::new(), &config).map_err(|e| e.to_string())?;
        for &n in &schedule {
            let (va, vb) = (value_at(&a, n, "y")?, value_at(&b, n, "y")?);
            ensure(va == vb, || format!("x = {x}, stage {n}: infinity gives {va}, loop gives {vb}"))?;
        }
    }
    Ok(format!("u = n+1 for n <= {FULL_RANGE}, unbounded(+), both F(inf, x) forms agree"))
}

fn criterion_6() -> Outcome {
    let schedule: Vec<u64> = (0..=FULL_RANGE).collect();
    let seq = eval_stages(&corpus("thomson.whdt"), &[], &schedule, &OracleBinding::new(), &EvalConfig::default())
        .map_err(|e| e.to_string())?;
    for &n in &schedule {
        let got = value_at(&seq, n, "lamp")?;
        ensure(got == q(((n + 1) % 2) as i64, 1), || format!("stage {n}: lamp = {got}"))?;
    }
    let cls = classify_value(&seq.halted_values("lamp")).map_err(|e| e.to_string())?;
    ensure(matches!(cls, HyperrealClass::Periodic { period: 2, .. }), || {
        format!("lamp classified {}", cls.summary())
    })?;
    let candidates = ultrafilter_report(&cls).unwrap_or_default();
    ensure(candidates.len() == 2, || format!("{} ultrafilter candidates", candidates.len()))?;
    let ledgers = seq.ledgers();
    ensure(ledgers.windows(2).all(|w| w[1].1.total > w[0].1.total), || {
        "metered totals not strictly increasing".into()
    })?;
    let verdict = classify_supertask(&ledgers, MIN_STAGES).map_err(|e| e.to_string())?;
    ensure(matches!(verdict.metered, SupertaskClass::Bad { .. }), || {
        format!("supertask {}", verdict.metered.label())
    })?;
    Ok("lamp = (n+1) mod 2, periodic(2) with 2 candidates, supertask bad".into())
}

/// Every value assigned to `E`, checked afterwards against the first.
#[derive(Default)]
struct EnergyTrace(Vec<Option<Rational>>);

impl Observer for EnergyTrace {
    fn assign(&mut self, var: &str, value: &ExactReal, _site: Option<Loc>) {
        if var == "E" {
            self.0.push(value.as_rational().cloned());
        }
    }
}

fn ball_config() -> RunConfig {
    let mut c = RunConfig {
        inputs: vec!["c=1/2".into(), "v0=8".into(), "horizon=5".into()],
        schedule: (0..=BALL_RANGE).collect(),
        ..RunConfig::default()
    };
    c.cost.energy_var = Some("E".into());
    c
}

fn criterion_7() -> Outcome {
    let p = corpus("ball.whdt");
    let rc = ball_config();
    let config = rc.eval_config();
    let inputs = [ExactReal::Rational(q(1, 2)), int(8), int(5)];
    let seq = eval_stages(&p, &inputs, &rc.schedule, &OracleBinding::new(), &config).map_err(|e| e.to_string())?;

    let bounces = bounce_count(&seq, "bounces");
    ensure(bounces.counts.len() == rc.schedule.len(), || "some stages did not halt".into())?;
    ensure(bounces.nondecreasing, || format!("bounce counts decrease: {:?}", bounces.counts))?;
    let at = |n: u64| bounces.counts.iter().find(|c| c.0 == n).map(|c| c.1).unwrap_or(0);
    ensure(at(BALL_RANGE) > at(15), || format!("stage {BALL_RANGE}: {}, stage 15: {}", at(BALL_RANGE), at(15)))?;

    let mut stage_time = Duration::ZERO;
    for &n in &rc.schedule {
        let mut trace = EnergyTrace::default();
        let start = Instant::now();
        let r = eval_stage_observed(&p, &inputs, &StageContext::new(n, &config), &OracleBinding::new(), &mut trace)
            .map_err(|e| e.to_string())?;
        if n == BALL_RANGE {
            stage_time = start.elapsed();
        }
        ensure(r.status.is_halted(), || format!("stage {n}: {}", r.status))?;
        let values: Option<Vec<Rational>> = trace.0.into_iter().collect();
        let values = values.ok_or_else(|| format!("stage {n}: E left the rationals"))?;
        let e0 = values.first().cloned().ok_or_else(|| format!("stage {n}: E never assigned"))?;
        ensure(values.iter().all(|e| e <= &e0), || format!("stage {n}: E exceeded {e0}"))?;
    }
    ensure(stage_time < BALL_STAGE_LIMIT, || format!("stage {BALL_RANGE} took {stage_time:?}"))?;

    let report = run_program("ball.whdt", &p, &rc).map_err(|e| e.to_string())?;
    let st = report.supertask.as_ref().ok_or("no supertask verdict")?;
    let energy = st.energy.as_ref().ok_or("no energy verdict")?;
    ensure(energy.class == "good" && energy.within_initial, || format!("energy view {}", energy.class))?;
    ensure(st.metered.class == "bad", || format!("metered view {}", st.metered.class))?;
    Ok(format!(
        "bounces {} at stage 15, {} at stage {BALL_RANGE}; E <= E0 at every assignment; energy good, metered bad; stage {BALL_RANGE} in {stage_time:.2?}",
        at(15),
        at(BALL_RANGE)
    ))
}

/// `PREFIX_LEN` fixed digits followed by a constant tail.
#[derive(Debug)]
struct Prefix {
    bits: u32,
    tail: bool,
}

impl DigitSource for Prefix {
    fn digit(&self, index: u64) -> Result<bool, OracleError> {
        Ok(if index < PREFIX_LEN as u64 {
            self.bits >> index & 1 == 1
        } else {
            self.tail
        })
    }
}

fn pow3(k: u32) -> BigInt {
    BigInt::from(3u8).pow(k)
}

/// Exact value `sum_i 3^-i d_i`: the prefix, plus `3^-(L-1)/2` for an all-ones tail.
fn prefix_value(bits: u32, tail: bool) -> Rational {
    let mut v = Rational::zero();
    for i in 0..PREFIX_LEN {
        if bits >> i & 1 == 1 {
            v += Rational::new(BigInt::one(), pow3(i));
        }
    }
    if tail {
        v += Rational::new(BigInt::one(), pow3(PREFIX_LEN - 1) * 2u8);
    }
    v
}

fn substrate_prefixes() -> Result<usize, String> {
    let mut checks = 0;
    for bits in 0..1u32 << PREFIX_LEN {
        for tail in [false, true] {
            let exact = prefix_value(bits, tail);
            let oracle = OracleReal::new("P", Arc::new(Prefix { bits, tail }));
            let r = ExactReal::oracle(oracle.clone());
            let mut budget = Budget::default();
            for m in 0..PREFIX_LEN as u64 + 4 {
                let iv = r.enclosure(m, &mut budget).map_err(|e| e.to_string())?;
                ensure(iv.contains(&exact), || format!("{bits:08b}/{tail}: enclosure at m = {m} misses the value"))?;
                checks += 1;
            }
            for k in 0..PREFIX_LEN {
                let target = Rational::new(BigInt::one(), pow3(k));
                let iv = r.refine(k as u64, &mut budget).map_err(|e| e.to_string())?;
                ensure(iv.width() <= target && iv.contains(&exact), || {
                    format!("{bits:08b}/{tail}: refine({k}) width {}", iv.width())
                })?;

                let scale = ExactReal::Rational(Rational::from_integer(pow3(k)));
                let shifted = scale.mul(&r);
                let prefix: BigInt = (0..=k)
                    .filter(|&i| bits >> i & 1 == 1)
                    .map(|i| pow3(k - i))
                    .sum();
                let want = Rational::from_integer(prefix);
                let true_floor = (exact.clone() * Rational::from_integer(pow3(k))).floor();
                let fast = shifted.floor(&mut budget).map_err(|e| e.to_string())?;
                let slow = shifted
                    .floor_by_refinement(&mut Budget::default().with_fast_path(false))
                    .map_err(|e| e.to_string())?;
                for (route, got) in [("digit", fast), ("interval", slow)] {
                    ensure(got.as_rational() == Some(&want) && want == true_floor, || {
                        format!("{bits:08b}/{tail}: {route} floor(3^{k} r) = {got}, prefix {want}")
                    })?;
                }
                checks += 3;
            }
        }
    }
    Ok(checks)
}

fn random_rational(rng: &mut StdRng) -> Rational {
    let den = rng.gen_range(1..=1000i64);
    q(rng.gen_range(-10_000..=10_000), den)
}

fn field_axioms() -> Result<(), String> {
    let mut rng = StdRng::seed_from_u64(SEED ^ 1);
    let zero = ExactReal::zero();
    let one = int(1);
    for i in 0..FIELD_TRIPLES {
        let (qa, qb, qc) = (random_rational(&mut rng), random_rational(&mut rng), random_rational(&mut rng));
        let (a, b, c) = (
            ExactReal::Rational(qa.clone()),
            ExactReal::Rational(qb.clone()),
            ExactReal::Rational(qc.clone()),
        );
        let laws = [
            ("add assoc", a.add(&b).add(&c) == a.add(&b.add(&c))),
            ("add comm", a.add(&b) == b.add(&a)),
            ("mul assoc", a.mul(&b).mul(&c) == a.mul(&b.mul(&c))),
            ("mul comm", a.mul(&b) == b.mul(&a)),
            ("distrib", a.mul(&b.add(&c)) == a.mul(&b).add(&a.mul(&c))),
            ("add id", a.add(&zero) == a),
            ("mul id", a.mul(&one) == a),
            ("add inv", a.add(&a.neg()) == zero),
            ("sub", a.sub(&b).as_rational() == Some(&(&qa - &qb))),
            ("mul", a.mul(&b).as_rational() == Some(&(&qa * &qb))),
        ];
        if let Some((law, _)) = laws.iter().find(|(_, ok)| !ok) {
            return Err(format!("triple {i} ({qa}, {qb}, {qc}): {law}"));
        }
        if !qa.is_zero() {
            let inv = one.div(&a, &mut Budget::default()).map_err(|e| e.to_string())?;
            ensure(a.mul(&inv) == one, || format!("triple {i}: mul inv of {qa}"))?;
        }
    }
    Ok(())
}

fn criterion_8() -> Outcome {
    let checks = substrate_prefixes()?;
    field_axioms()?;
    Ok(format!(
        "{} prefixes x 2 tails ({checks} checks), {FIELD_TRIPLES} field-axiom triples exact",
        1u32 << PREFIX_LEN
    ))
}

fn criterion_9() -> Outcome {
    let dir = corpus_path("");
    let sequential = RunConfig::default();
    let parallel = RunConfig {
        parallel: true,
        ..RunConfig::default()
    };
    let first = cmd_corpus(&dir, &sequential).map_err(|e| e.to_string())?;
    let second = cmd_corpus(&dir, &sequential).map_err(|e| e.to_string())?;
    let third = cmd_corpus(&dir, &parallel).map_err(|e| e.to_string())?;
    ensure(first.all_passed(), || first.render_text())?;
    let (a, b, c) = (first.to_json(), second.to_json(), third.to_json());
    ensure(a == b, || "two sequential runs differ".into())?;
    ensure(a == c, || "parallel run differs from sequential".into())?;
    Ok(format!("{} corpus programs, {} bytes of identical JSON x 3", first.entries.len(), a.len()))
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("floor program", criterion_1),
        ("decision program", criterion_2),
        ("function program", criterion_3),
        ("limit harness", criterion_4),
        ("infinity elimination", criterion_5),
        ("Thomson's lamp", criterion_6),
        ("bouncing ball", criterion_7),
        ("numeric substrate", criterion_8),
        ("determinism", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {} PASS: {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL: {name}: {why}", i + 1);
            }
        }
    }
    println!("{}/{} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
