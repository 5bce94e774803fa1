use whdt::exactnum::{ExactReal, Rational};
use whdt::resources::{CostModel, Meter};
use whdt::semantics::{
    default_schedule, eval_stage, eval_stage_observed, eval_stages, EvalConfig, HaltStatus, Observer,
    OracleBinding, StageContext,
};
use whdt::syntax::{parse, Loc};

fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn rat(v: &ExactReal) -> Rational {
    v.as_rational().cloned().expect("rational value")
}

#[test]
fn dt_free_programs_agree_at_every_stage() {
    let p = parse(
        "input x; output y;
         y := 0;
         n := x;
         while n > 0 do { y := y + n * n; n := n - 1 }",
    )
    .unwrap();
    assert!(p.is_stage_independent());
    let seq = eval_stages(&p, &[ExactReal::from(12)], &default_schedule(), &OracleBinding::new(), &EvalConfig::default())
        .unwrap();
    let values = seq.halted_values("y");
    assert_eq!(values.len(), default_schedule().len());
    // 1^2 + ... + 12^2
    assert!(values.iter().all(|(_, v)| rat(v) == q(650, 1)));
}

#[test]
fn dt_loop_runs_ceil_t_over_dt_times() {
    let p = parse(
        "input T; output k;
         t := 0; k := 0;
         while t < T do { t := t + dt; k := k + 1 }",
    )
    .unwrap();
    let config = EvalConfig::default();
    for (tn, td) in [(1, 1), (5, 2), (1, 3), (7, 4)] {
        for n in [0u64, 1, 2, 5, 9, 30] {
            let ctx = StageContext::new(n, &config);
            let r = eval_stage(&p, &[ExactReal::Rational(q(tn, td))], &ctx, &OracleBinding::new()).unwrap();
            // smallest k with k / (n + 1) >= tn / td
            let want = (tn * (n as i64 + 1) + td - 1) / td;
            assert_eq!(rat(r.store.get("k").unwrap()), q(want, 1), "T = {tn}/{td}, stage {n}");
            assert_eq!(r.iterations(), want as u64);
            assert_eq!(r.dt, q(1, n as i64 + 1));
        }
    }
}

#[test]
fn infinity_is_stage_plus_one() {
    let p = parse("input; output w; w := infinity * dt + infinity").unwrap();
    let config = EvalConfig::default();
    for n in 0..20u64 {
        let r = eval_stage(&p, &[], &StageContext::new(n, &config), &OracleBinding::new()).unwrap();
        assert_eq!(rat(r.store.get("w").unwrap()), q(n as i64 + 2, 1));
    }
}

#[derive(Default)]
struct Counter {
    assigns: u64,
    guards: u64,
}

impl Observer for Counter {
    fn assign(&mut self, _: &str, _: &ExactReal, _: Option<Loc>) {
        self.assigns += 1;
    }
    fn guard(&mut self, _: Option<Loc>) {
        self.guards += 1;
    }
}

#[test]
fn metering_does_not_change_results() {
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus/thomson.whdt")).unwrap();
    let p = parse(&src).unwrap();
    let plain = EvalConfig::default();
    let mut heavy = EvalConfig::default();
    heavy.cost = CostModel {
        assign_cost: q(7, 3),
        guard_cost: q(0, 1),
        ..CostModel::default()
    };
    heavy.cost.clock_vars.insert("time".into());
    for n in [0u64, 3, 10, 31] {
        let a = eval_stage(&p, &[], &StageContext::new(n, &plain), &OracleBinding::new()).unwrap();
        let mut counter = Counter::default();
        let b = eval_stage_observed(&p, &[], &StageContext::new(n, &heavy), &OracleBinding::new(), &mut counter)
            .unwrap();
        assert_eq!(a.store, b.store);
        assert_eq!(a.steps, b.steps);
        assert_ne!(a.ledger.total, b.ledger.total);
        assert_eq!(counter.assigns, b.ledger.assignments);
        assert_eq!(counter.guards, b.ledger.guards);
    }
}

#[test]
fn meter_alone_matches_ledger() {
    let p = parse("input; output x; x := 1; while x < 10 do x := x + 1").unwrap();
    let config = EvalConfig::default();
    let r = eval_stage(&p, &[], &StageContext::new(0, &config), &OracleBinding::new()).unwrap();
    let mut meter = Meter::new(CostModel::default());
    let again = eval_stage_observed(&p, &[], &StageContext::new(0, &config), &OracleBinding::new(), &mut meter).unwrap();
    assert_eq!(meter.finish(), again.ledger);
    assert_eq!(r.ledger, again.ledger);
    // 10 assignments and 10 guard tests
    assert_eq!(r.ledger.total, q(20, 1));
}

#[test]
fn fuel_exhaustion_is_reported_not_fatal() {
    let p = parse("input; output x; x := 0; while x >= 0 do x := x + 1").unwrap();
    let config = EvalConfig {
        fuel: 1000,
        ..EvalConfig::default()
    };
    let seq = eval_stages(&p, &[], &[0, 1, 2], &OracleBinding::new(), &config).unwrap();
    assert_eq!(seq.results.len(), 3);
    assert!(seq.results.iter().all(|r| matches!(r.status, HaltStatus::FuelExhausted(_))));
    assert!(seq.halted_values("x").is_empty());
}

#[test]
fn parallel_and_sequential_stages_match() {
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../corpus/inf-elim.whdt")).unwrap();
    let p = parse(&src).unwrap();
    let schedule: Vec<u64> = (0..40).collect();
    let seq = eval_stages(&p, &[], &schedule, &OracleBinding::new(), &EvalConfig::default()).unwrap();
    let par = eval_stages(
        &p,
        &[],
        &schedule,
        &OracleBinding::new(),
        &EvalConfig {
            parallel: true,
            ..EvalConfig::default()
        },
    )
    .unwrap();
    assert_eq!(seq, par);
}
