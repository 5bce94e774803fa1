//! Resource metering and the good/bad supertask classification.
//!
//! Two views are kept side by side. The metered view charges every
//! discrete step, so any loop whose iteration count grows with the stage
//! is a bad supertask. The energy view watches a program variable that
//! models physical energy; a bouncing ball can be good in that view while
//! still taking unboundedly many metered steps.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::exactnum::{q_add, ExactReal, Rational};
use crate::hyperreal::ClassifyError;
use crate::semantics::{Observer, StageSequence};
use crate::syntax::Loc;

/// Number of trailing stages the trend tests look at.
pub const TREND_WINDOW: usize = 6;

/// Per-instruction charges.
#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    pub assign_cost: Rational,
    pub guard_cost: Rational,
    pub oracle_cost: Rational,
    /// Assignments to these variables are free (pure passage of time).
    pub clock_vars: BTreeSet<String>,
    /// Program variable watched as physical energy.
    pub energy_var: Option<String>,
}

impl Default for CostModel {
    fn default() -> Self {
        CostModel {
            assign_cost: Rational::one(),
            guard_cost: Rational::one(),
            oracle_cost: Rational::one(),
            clock_vars: BTreeSet::new(),
            energy_var: None,
        }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<(), String> {
        for (key, c) in [
            ("assign_cost", &self.assign_cost),
            ("guard_cost", &self.guard_cost),
            ("oracle_cost", &self.oracle_cost),
        ] {
            if c.is_negative() {
                return Err(format!("{key} must be nonnegative"));
            }
        }
        Ok(())
    }
}

/// Energy variable statistics over one stage.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct EnergyWatch {
    pub initial: Option<Rational>,
    pub peak: Option<Rational>,
    pub last: Option<Rational>,
    /// Set when the variable took a non-rational value.
    pub symbolic: bool,
}

impl EnergyWatch {
    fn record(&mut self, value: &ExactReal) {
        let Some(q) = value.as_rational() else {
            self.symbolic = true;
            return;
        };
        if self.initial.is_none() {
            self.initial = Some(q.clone());
        }
        if self.peak.as_ref().map_or(true, |p| q > p) {
            self.peak = Some(q.clone());
        }
        self.last = Some(q.clone());
    }

    /// The variable never rose above its first value.
    pub fn within_initial(&self) -> bool {
        !self.symbolic && self.initial.is_some() && self.peak <= self.initial
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResourceLedger {
    pub total: Rational,
    /// Charges attributed to the innermost enclosing `while`.
    pub per_loop: BTreeMap<Loc, Rational>,
    pub outside_loops: Rational,
    pub assignments: u64,
    pub guards: u64,
    /// Distinct oracle digits read during the stage.
    pub oracle_queries: u64,
    pub peak_store: usize,
    pub energy: Option<EnergyWatch>,
}

/// Accumulates a [`ResourceLedger`] from evaluator hooks.
#[derive(Debug, Clone)]
pub struct Meter {
    model: CostModel,
    ledger: ResourceLedger,
}

impl Meter {
    pub fn new(model: CostModel) -> Meter {
        let energy = model.energy_var.as_ref().map(|_| EnergyWatch::default());
        Meter {
            model,
            ledger: ResourceLedger {
                energy,
                ..ResourceLedger::default()
            },
        }
    }

    pub fn model(&self) -> &CostModel {
        &self.model
    }

    fn charge(&mut self, amount: &Rational, site: Option<Loc>) {
        if amount.is_zero() {
            return;
        }
        self.ledger.total = q_add(&self.ledger.total, amount);
        let slot = match site {
            Some(loc) => self.ledger.per_loop.entry(loc).or_insert_with(Rational::zero),
            None => &mut self.ledger.outside_loops,
        };
        *slot = q_add(slot, amount);
    }

    /// Seeds the energy watch when the energy variable is an input.
    pub fn observe_input(&mut self, var: &str, value: &ExactReal) {
        if self.model.energy_var.as_deref() == Some(var) {
            if let Some(w) = self.ledger.energy.as_mut() {
                w.record(value);
            }
        }
    }

    pub fn finish(self) -> ResourceLedger {
        self.ledger
    }
}

impl Observer for Meter {
    fn assign(&mut self, var: &str, value: &ExactReal, site: Option<Loc>) {
        self.ledger.assignments += 1;
        if !self.model.clock_vars.contains(var) {
            let c = self.model.assign_cost.clone();
            self.charge(&c, site);
        }
        self.observe_input(var, value);
    }

    fn guard(&mut self, site: Option<Loc>) {
        self.ledger.guards += 1;
        let c = self.model.guard_cost.clone();
        self.charge(&c, site);
    }

    fn oracle_digits(&mut self, count: u64, site: Option<Loc>) {
        self.ledger.oracle_queries += count;
        let c = &self.model.oracle_cost * Rational::from_integer(count.into());
        self.charge(&c, site);
    }

    fn store_size(&mut self, size: usize) {
        self.ledger.peak_store = self.ledger.peak_store.max(size);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SupertaskClass {
    /// Bounded with per-stage increments that at least halve each time;
    /// `bound` is the largest observed magnitude plus the last increment.
    Good { bound: Rational },
    /// Strictly increasing with growth at least `sqrt(n)`.
    Bad { growth_exponent: f64, last: Rational },
    Undetermined,
}

impl SupertaskClass {
    pub fn label(&self) -> &'static str {
        match self {
            SupertaskClass::Good { .. } => "good",
            SupertaskClass::Bad { .. } => "bad",
            SupertaskClass::Undetermined => "undetermined",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyVerdict {
    pub var: String,
    pub class: SupertaskClass,
    /// At every stage the variable stayed at or below its initial value.
    pub within_initial: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupertaskVerdict {
    pub metered: SupertaskClass,
    pub energy: Option<EnergyVerdict>,
}

/// `log(v_b / v_a) / log((n_b + 1) / (n_a + 1))`, for display.
pub(crate) fn growth_exponent(a: (u64, &Rational), b: (u64, &Rational)) -> f64 {
    let ratio = (b.1 / a.1).abs().to_f64().unwrap_or(f64::INFINITY);
    let span = (b.0 as f64 + 1.0) / (a.0 as f64 + 1.0);
    if span <= 1.0 {
        return 0.0;
    }
    ratio.ln() / span.ln()
}

/// Exact test that `|v|` grew at least like `(n + 1)^(1/2)` from `a` to `b`.
pub(crate) fn grows_like_sqrt(a: (u64, &Rational), b: (u64, &Rational)) -> bool {
    if a.1.is_zero() || b.0 <= a.0 {
        return false;
    }
    let ratio = (b.1 / a.1).abs();
    let span = Rational::new(BigInt::from(b.0 + 1), BigInt::from(a.0 + 1));
    &ratio * &ratio >= span
}

/// Good / bad / undetermined for a cross-stage series.
pub fn classify_series(points: &[(u64, Rational)]) -> SupertaskClass {
    if points.is_empty() {
        return SupertaskClass::Undetermined;
    }
    let window = &points[points.len().saturating_sub(TREND_WINDOW)..];
    let first = &window[0];
    let last = &window[window.len() - 1];

    let increasing = window.windows(2).all(|w| w[1].1 > w[0].1);
    if increasing && first.1.is_positive() && grows_like_sqrt((first.0, &first.1), (last.0, &last.1)) {
        return SupertaskClass::Bad {
            growth_exponent: growth_exponent((first.0, &first.1), (last.0, &last.1)),
            last: last.1.clone(),
        };
    }

    // increments per stage step, so uneven schedules compare fairly
    let gaps: Vec<Rational> = window
        .windows(2)
        .map(|w| (&w[1].1 - &w[0].1).abs() / Rational::from_integer(BigInt::from(w[1].0 - w[0].0)))
        .collect();
    let half = Rational::new(BigInt::one(), BigInt::from(2u8));
    let shrinking = gaps.windows(2).all(|g| g[1] <= &g[0] * &half);
    if shrinking {
        let peak = points.iter().map(|(_, v)| v.abs()).max().unwrap_or_else(Rational::zero);
        let tail = gaps.last().cloned().unwrap_or_else(Rational::zero);
        return SupertaskClass::Good { bound: peak + tail };
    }
    SupertaskClass::Undetermined
}

/// Classifies metered totals and, when an energy variable is watched, its per-stage peaks.
pub fn classify_supertask(ledgers: &[(u64, &ResourceLedger)], min_stages: usize) -> Result<SupertaskVerdict, ClassifyError> {
    if ledgers.len() < min_stages {
        return Err(ClassifyError::InsufficientStages {
            found: ledgers.len(),
            needed: min_stages,
        });
    }
    let totals: Vec<(u64, Rational)> = ledgers.iter().map(|(n, l)| (*n, l.total.clone())).collect();
    let metered = classify_series(&totals);

    let energy = match ledgers.first().and_then(|(_, l)| l.energy.as_ref()) {
        None => None,
        Some(_) => {
            let watches: Vec<(u64, Option<&EnergyWatch>)> = ledgers.iter().map(|(n, l)| (*n, l.energy.as_ref())).collect();
            let within_initial = watches.iter().all(|(_, w)| w.is_some_and(EnergyWatch::within_initial));
            let peaks: Option<Vec<(u64, Rational)>> = watches
                .iter()
                .map(|(n, w)| w.filter(|w| !w.symbolic).and_then(|w| w.peak.clone()).map(|p| (*n, p)))
                .collect();
            let class = match peaks {
                Some(p) if within_initial => classify_series(&p),
                _ => SupertaskClass::Undetermined,
            };
            Some(EnergyVerdict {
                var: String::new(),
                class,
                within_initial,
            })
        }
    };
    Ok(SupertaskVerdict { metered, energy })
}

/// Per-stage bounce totals of the ball program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BounceReport {
    pub counts: Vec<(u64, u64)>,
    pub nondecreasing: bool,
    /// Nondecreasing and strictly larger at the last stage than at the first.
    pub unbounded_trend: bool,
}

/// Reads the bounce counter `var` from each halted stage.
pub fn bounce_count(seq: &StageSequence, var: &str) -> BounceReport {
    let counts: Vec<(u64, u64)> = seq
        .halted_values(var)
        .into_iter()
        .filter_map(|(n, v)| v.as_rational().and_then(|q| q.to_integer().to_u64()).map(|c| (n, c)))
        .collect();
    let nondecreasing = counts.windows(2).all(|w| w[1].1 >= w[0].1);
    let unbounded_trend = nondecreasing && counts.len() >= 2 && counts[counts.len() - 1].1 > counts[0].1;
    BounceReport {
        counts,
        nondecreasing,
        unbounded_trend,
    }
}
