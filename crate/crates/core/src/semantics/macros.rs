//! Compile-time expansion of `def` macros.
//!
//! A call `F(a1, .., ak)` inside an expression is replaced by a fresh
//! variable holding F's single output. The statements computing it are
//! hoisted in front of the statement containing the call: fresh copies of
//! F's inputs receive the argument values, then F's body runs with every
//! variable renamed. Guards of `while` loops are recomputed at the end of
//! each iteration.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::syntax::{ArithExpr, BoolExpr, Command, Program};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MacroError {
    #[error("macro `{0}` calls itself (directly or indirectly); recursion is not supported")]
    RecursionNotSupported(String),
    #[error("unknown macro `{0}`")]
    UnknownMacro(String),
    #[error("macro `{name}` used in an expression must have exactly one output, it has {outputs}")]
    BadSignature { name: String, outputs: usize },
    #[error("macro `{name}` takes {expected} argument(s), {found} given")]
    Arity { name: String, expected: usize, found: usize },
}

/// Inlines every macro call in `main`, returning a closed program without definitions.
pub fn expand_macros(defs: &[Program], main: &Program) -> Result<Program, MacroError> {
    let mut taken = BTreeSet::new();
    for p in defs.iter().chain(std::iter::once(main)) {
        taken.extend(p.inputs.iter().cloned());
        taken.extend(p.outputs.iter().cloned());
        p.body.identifiers(&mut taken);
    }
    let mut ex = Expander {
        defs,
        taken,
        counter: 0,
        stack: Vec::new(),
    };
    let body = ex.command(&main.body)?;
    Ok(Program {
        name: main.name.clone(),
        inputs: main.inputs.clone(),
        outputs: main.outputs.clone(),
        body,
        defs: Vec::new(),
    })
}

struct Expander<'a> {
    defs: &'a [Program],
    taken: BTreeSet<String>,
    counter: u64,
    /// Macros currently being expanded.
    stack: Vec<String>,
}

impl Expander<'_> {
    fn command(&mut self, c: &Command) -> Result<Command, MacroError> {
        Ok(match c {
            Command::Skip => Command::Skip,
            Command::Assign(v, e) => {
                let mut pre = Vec::new();
                let e = self.arith(e, &mut pre)?;
                pre.push(Command::Assign(v.clone(), e));
                Command::seq(pre)
            }
            Command::Seq(a, b) => Command::Seq(Box::new(self.command(a)?), Box::new(self.command(b)?)),
            Command::If(g, a, b) => {
                let mut pre = Vec::new();
                let g = self.boolean(g, &mut pre)?;
                pre.push(Command::If(g, Box::new(self.command(a)?), Box::new(self.command(b)?)));
                Command::seq(pre)
            }
            Command::While { guard, body, loc } => {
                let mut pre = Vec::new();
                let guard = self.boolean(guard, &mut pre)?;
                let mut body = vec![self.command(body)?];
                body.extend(pre.iter().cloned());
                pre.push(Command::While {
                    guard,
                    body: Box::new(Command::seq(body)),
                    loc: *loc,
                });
                Command::seq(pre)
            }
        })
    }

    fn boolean(&mut self, b: &BoolExpr, pre: &mut Vec<Command>) -> Result<BoolExpr, MacroError> {
        Ok(match b {
            BoolExpr::Cmp(r, x, y) => BoolExpr::Cmp(*r, self.arith(x, pre)?, self.arith(y, pre)?),
            BoolExpr::Chain(x, r1, y, r2, z) => {
                BoolExpr::Chain(self.arith(x, pre)?, *r1, self.arith(y, pre)?, *r2, self.arith(z, pre)?)
            }
            BoolExpr::Member(e, a) => BoolExpr::Member(self.arith(e, pre)?, a.clone()),
            BoolExpr::Not(x) => BoolExpr::Not(Box::new(self.boolean(x, pre)?)),
            BoolExpr::And(x, y) => BoolExpr::And(Box::new(self.boolean(x, pre)?), Box::new(self.boolean(y, pre)?)),
            BoolExpr::Or(x, y) => BoolExpr::Or(Box::new(self.boolean(x, pre)?), Box::new(self.boolean(y, pre)?)),
        })
    }

    fn arith(&mut self, e: &ArithExpr, pre: &mut Vec<Command>) -> Result<ArithExpr, MacroError> {
        Ok(match e {
            ArithExpr::Lit(_) | ArithExpr::Var(_) | ArithExpr::Dt | ArithExpr::Infinity | ArithExpr::Real3(_) => e.clone(),
            ArithExpr::Neg(x) => ArithExpr::Neg(Box::new(self.arith(x, pre)?)),
            ArithExpr::Floor(x) => ArithExpr::Floor(Box::new(self.arith(x, pre)?)),
            ArithExpr::Bin(op, a, b) => ArithExpr::bin(*op, self.arith(a, pre)?, self.arith(b, pre)?),
            ArithExpr::Pair(a, b) => ArithExpr::Pair(Box::new(self.arith(a, pre)?), Box::new(self.arith(b, pre)?)),
            ArithExpr::Call(name, args) => {
                let args = args.iter().map(|a| self.arith(a, pre)).collect::<Result<Vec<_>, _>>()?;
                let out = self.inline(name, args, pre)?;
                ArithExpr::Var(out)
            }
        })
    }

    /// Emits the statements of one call into `pre` and returns the variable holding its result.
    fn inline(&mut self, name: &str, args: Vec<ArithExpr>, pre: &mut Vec<Command>) -> Result<String, MacroError> {
        let def = self
            .defs
            .iter()
            .find(|d| d.name.as_deref() == Some(name))
            .ok_or_else(|| MacroError::UnknownMacro(name.to_string()))?;
        if self.stack.iter().any(|s| s == name) {
            return Err(MacroError::RecursionNotSupported(name.to_string()));
        }
        if def.outputs.len() != 1 {
            return Err(MacroError::BadSignature {
                name: name.to_string(),
                outputs: def.outputs.len(),
            });
        }
        if def.inputs.len() != args.len() {
            return Err(MacroError::Arity {
                name: name.to_string(),
                expected: def.inputs.len(),
                found: args.len(),
            });
        }

        self.stack.push(name.to_string());
        let body = self.command(&def.body);
        self.stack.pop();
        let body = body?;

        self.counter += 1;
        let id = self.counter;
        let mut vars = BTreeSet::new();
        vars.extend(def.inputs.iter().cloned());
        vars.extend(def.outputs.iter().cloned());
        body.identifiers(&mut vars);
        let mut map = BTreeMap::new();
        for v in vars {
            let fresh = self.fresh(name, id, &v);
            map.insert(v, fresh);
        }

        for (param, arg) in def.inputs.iter().zip(args) {
            pre.push(Command::Assign(map[param].clone(), arg));
        }
        pre.push(rename_command(&body, &map));
        Ok(map[&def.outputs[0]].clone())
    }

    fn fresh(&mut self, name: &str, id: u64, var: &str) -> String {
        let mut candidate = format!("{name}__{id}_{var}");
        let mut bump = 0;
        while self.taken.contains(&candidate) {
            bump += 1;
            candidate = format!("{name}__{id}_{var}_{bump}");
        }
        self.taken.insert(candidate.clone());
        candidate
    }
}

fn rename_command(c: &Command, map: &BTreeMap<String, String>) -> Command {
    match c {
        Command::Skip => Command::Skip,
        Command::Assign(v, e) => Command::Assign(map[v].clone(), rename_arith(e, map)),
        Command::Seq(a, b) => Command::Seq(Box::new(rename_command(a, map)), Box::new(rename_command(b, map))),
        Command::If(g, a, b) => Command::If(
            rename_bool(g, map),
            Box::new(rename_command(a, map)),
            Box::new(rename_command(b, map)),
        ),
        Command::While { guard, body, loc } => Command::While {
            guard: rename_bool(guard, map),
            body: Box::new(rename_command(body, map)),
            loc: *loc,
        },
    }
}

fn rename_bool(b: &BoolExpr, map: &BTreeMap<String, String>) -> BoolExpr {
    let r = |e: &ArithExpr| rename_arith(e, map);
    match b {
        BoolExpr::Cmp(rel, x, y) => BoolExpr::Cmp(*rel, r(x), r(y)),
        BoolExpr::Chain(x, r1, y, r2, z) => BoolExpr::Chain(r(x), *r1, r(y), *r2, r(z)),
        BoolExpr::Member(e, a) => BoolExpr::Member(r(e), a.clone()),
        BoolExpr::Not(x) => BoolExpr::Not(Box::new(rename_bool(x, map))),
        BoolExpr::And(x, y) => BoolExpr::And(Box::new(rename_bool(x, map)), Box::new(rename_bool(y, map))),
        BoolExpr::Or(x, y) => BoolExpr::Or(Box::new(rename_bool(x, map)), Box::new(rename_bool(y, map))),
    }
}

fn rename_arith(e: &ArithExpr, map: &BTreeMap<String, String>) -> ArithExpr {
    match e {
        ArithExpr::Var(v) => ArithExpr::Var(map[v].clone()),
        ArithExpr::Neg(x) => ArithExpr::Neg(Box::new(rename_arith(x, map))),
        ArithExpr::Floor(x) => ArithExpr::Floor(Box::new(rename_arith(x, map))),
        ArithExpr::Bin(op, a, b) => ArithExpr::bin(*op, rename_arith(a, map), rename_arith(b, map)),
        ArithExpr::Pair(a, b) => ArithExpr::Pair(Box::new(rename_arith(a, map)), Box::new(rename_arith(b, map))),
        ArithExpr::Call(f, args) => ArithExpr::Call(f.clone(), args.iter().map(|a| rename_arith(a, map)).collect()),
        ArithExpr::Lit(_) | ArithExpr::Dt | ArithExpr::Infinity | ArithExpr::Real3(_) => e.clone(),
    }
}
