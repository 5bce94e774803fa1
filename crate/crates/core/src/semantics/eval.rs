use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive};

use super::{HaltStatus, Observer, OracleBinding, RuntimeError, StageContext, StageResult, Store};
use crate::exactnum::{Budget, ExactReal, Rational};
use crate::oracles::cantor_pair;
use crate::resources::Meter;
use crate::syntax::{ArithExpr, ArithOp, BoolExpr, Command, Loc, Program};

enum Stop {
    Fuel(Loc),
    Error(RuntimeError),
}

impl From<RuntimeError> for Stop {
    fn from(e: RuntimeError) -> Stop {
        Stop::Error(e)
    }
}

struct Machine<'a> {
    ctx: &'a StageContext,
    oracles: &'a OracleBinding,
    store: BTreeMap<String, ExactReal>,
    budget: Budget,
    steps: u64,
    loops: Vec<Loc>,
    iterations: BTreeMap<Loc, u64>,
    meter: Meter,
    extra: Option<&'a mut dyn Observer>,
}

/// Runs an expanded, checked program. Inputs must match the declared arity.
pub(super) fn run<'a>(
    p: &Program,
    inputs: &[ExactReal],
    ctx: &'a StageContext,
    oracles: &'a OracleBinding,
    extra: Option<&'a mut dyn Observer>,
) -> StageResult {
    let mut m = Machine {
        ctx,
        oracles,
        store: BTreeMap::new(),
        budget: Budget::new(ctx.cmp_fuel)
            .with_query_limit(ctx.query_limit)
            .with_fast_path(ctx.fast_path),
        steps: 0,
        loops: Vec::new(),
        iterations: BTreeMap::new(),
        meter: Meter::new(ctx.cost.clone()),
        extra,
    };
    for (name, v) in p.inputs.iter().zip(inputs) {
        m.meter.observe_input(name, v);
        m.store.insert(name.clone(), v.clone());
    }
    let size = m.store.len();
    m.notify(|o| o.store_size(size));

    let status = match m.exec(&p.body) {
        Ok(()) => HaltStatus::Halted,
        Err(Stop::Fuel(loc)) => HaltStatus::FuelExhausted(loc),
        Err(Stop::Error(e)) => HaltStatus::RuntimeError(e),
    };
    StageResult {
        stage: ctx.stage,
        dt: ctx.dt.clone(),
        store: Store(m.store),
        status,
        ledger: m.meter.finish(),
        loop_iterations: m.iterations,
        steps: m.steps,
    }
}

impl Machine<'_> {
    fn site(&self) -> Option<Loc> {
        self.loops.last().copied()
    }

    fn notify(&mut self, mut f: impl FnMut(&mut dyn Observer)) {
        f(&mut self.meter);
        if let Some(o) = self.extra.as_deref_mut() {
            f(o);
        }
    }

    fn tick(&mut self) -> Result<(), Stop> {
        self.steps += 1;
        if self.steps > self.ctx.fuel {
            return Err(Stop::Fuel(self.site().unwrap_or_default()));
        }
        Ok(())
    }

    /// Reports oracle digits read since `before` against the current site.
    fn account(&mut self, before: u64) {
        let delta = self.budget.queries() - before;
        if delta > 0 {
            let site = self.site();
            self.notify(|o| o.oracle_digits(delta, site));
        }
    }

    fn exec(&mut self, c: &Command) -> Result<(), Stop> {
        match c {
            Command::Skip => self.tick(),
            Command::Assign(v, e) => {
                self.tick()?;
                let before = self.budget.queries();
                let value = self.arith(e);
                self.account(before);
                let value = value?;
                let site = self.site();
                self.notify(|o| o.assign(v, &value, site));
                self.store.insert(v.clone(), value);
                let size = self.store.len();
                self.notify(|o| o.store_size(size));
                Ok(())
            }
            Command::Seq(a, b) => {
                self.exec(a)?;
                self.exec(b)
            }
            Command::If(g, a, b) => {
                if self.guard(g)? {
                    self.exec(a)
                } else {
                    self.exec(b)
                }
            }
            Command::While { guard, body, loc } => {
                self.loops.push(*loc);
                while self.guard(guard)? {
                    *self.iterations.entry(*loc).or_insert(0) += 1;
                    self.exec(body)?;
                }
                self.loops.pop();
                Ok(())
            }
        }
    }

    fn guard(&mut self, g: &BoolExpr) -> Result<bool, Stop> {
        self.tick()?;
        let site = self.site();
        self.notify(|o| o.guard(site));
        let before = self.budget.queries();
        let value = self.boolean(g);
        self.account(before);
        Ok(value?)
    }

    fn boolean(&mut self, b: &BoolExpr) -> Result<bool, RuntimeError> {
        match b {
            BoolExpr::Cmp(r, x, y) => {
                let x = self.arith(x)?;
                let y = self.arith(y)?;
                Ok(x.relate(*r, &y, &mut self.budget)?)
            }
            BoolExpr::Chain(x, r1, y, r2, z) => {
                let x = self.arith(x)?;
                let y = self.arith(y)?;
                if !x.relate(*r1, &y, &mut self.budget)? {
                    return Ok(false);
                }
                let z = self.arith(z)?;
                Ok(y.relate(*r2, &z, &mut self.budget)?)
            }
            BoolExpr::Member(e, a) => {
                let n = self.natural(e, "membership index")?;
                let index = n.to_u64().ok_or_else(|| RuntimeError::NotNatural {
                    context: "membership index",
                    value: n.to_string(),
                })?;
                let oracle = self.oracles.get(a).ok_or_else(|| RuntimeError::UnknownOracle(a.clone()))?;
                Ok(self.budget.digit(oracle, index)?)
            }
            BoolExpr::Not(x) => Ok(!self.boolean(x)?),
            BoolExpr::And(x, y) => Ok(self.boolean(x)? && self.boolean(y)?),
            BoolExpr::Or(x, y) => Ok(self.boolean(x)? || self.boolean(y)?),
        }
    }

    fn natural(&mut self, e: &ArithExpr, context: &'static str) -> Result<BigInt, RuntimeError> {
        let v = self.arith(e)?;
        match v.as_rational() {
            Some(q) if q.is_integer() && !q.is_negative() => Ok(q.to_integer()),
            _ => Err(RuntimeError::NotNatural {
                context,
                value: v.to_string(),
            }),
        }
    }

    fn arith(&mut self, e: &ArithExpr) -> Result<ExactReal, RuntimeError> {
        Ok(match e {
            ArithExpr::Lit(q) => ExactReal::Rational(q.clone()),
            ArithExpr::Var(v) => self
                .store
                .get(v)
                .cloned()
                .ok_or_else(|| RuntimeError::UnboundVariable(v.clone()))?,
            ArithExpr::Dt => ExactReal::Rational(self.ctx.dt.clone()),
            ArithExpr::Infinity => ExactReal::Rational(Rational::from_integer(self.ctx.infinity.clone())),
            ArithExpr::Real3(a) => {
                let o = self.oracles.get(a).ok_or_else(|| RuntimeError::UnknownOracle(a.clone()))?;
                ExactReal::oracle(o.clone())
            }
            ArithExpr::Neg(x) => self.arith(x)?.neg(),
            ArithExpr::Bin(op, a, b) => {
                let a = self.arith(a)?;
                let b = self.arith(b)?;
                match op {
                    ArithOp::Add => a.add(&b),
                    ArithOp::Sub => a.sub(&b),
                    ArithOp::Mul => a.mul(&b),
                    ArithOp::Div => a.div(&b, &mut self.budget)?,
                }
            }
            ArithExpr::Floor(x) => self.arith(x)?.floor(&mut self.budget)?,
            ArithExpr::Pair(a, b) => {
                let a = self.natural(a, "pairing argument")?;
                let b = self.natural(b, "pairing argument")?;
                ExactReal::Rational(Rational::from_integer(cantor_pair(&a, &b)))
            }
            ArithExpr::Call(name, _) => return Err(RuntimeError::UnexpandedMacro(name.clone())),
        })
    }
}
