use std::collections::BTreeSet;
use std::fmt;

use crate::exactnum::{Rational, Relation};

/// Source position (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Loc {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Loc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ArithExpr {
    Lit(Rational),
    Var(String),
    Dt,
    Infinity,
    /// `real3(A)`: the base-3 oracle constant of the set bound to `A`.
    Real3(String),
    Neg(Box<ArithExpr>),
    Bin(ArithOp, Box<ArithExpr>, Box<ArithExpr>),
    Floor(Box<ArithExpr>),
    /// `J(x, y)`, the Cantor pairing of two naturals.
    Pair(Box<ArithExpr>, Box<ArithExpr>),
    /// Macro invocation; removed by macro expansion before evaluation.
    Call(String, Vec<ArithExpr>),
}

impl ArithExpr {
    pub fn bin(op: ArithOp, l: ArithExpr, r: ArithExpr) -> ArithExpr {
        ArithExpr::Bin(op, Box::new(l), Box::new(r))
    }

    pub fn var(name: &str) -> ArithExpr {
        ArithExpr::Var(name.to_string())
    }

    pub fn int(n: i64) -> ArithExpr {
        ArithExpr::Lit(Rational::from_integer(n.into()))
    }

    fn visit(&self, f: &mut dyn FnMut(&ArithExpr)) {
        f(self);
        match self {
            ArithExpr::Neg(e) | ArithExpr::Floor(e) => e.visit(f),
            ArithExpr::Bin(_, a, b) | ArithExpr::Pair(a, b) => {
                a.visit(f);
                b.visit(f);
            }
            ArithExpr::Call(_, args) => args.iter().for_each(|a| a.visit(f)),
            _ => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoolExpr {
    Cmp(Relation, ArithExpr, ArithExpr),
    /// `lo op1 mid op2 hi`, meaning `lo op1 mid and mid op2 hi` with `mid` evaluated once.
    Chain(ArithExpr, Relation, ArithExpr, Relation, ArithExpr),
    /// `e in A`.
    Member(ArithExpr, String),
    Not(Box<BoolExpr>),
    And(Box<BoolExpr>, Box<BoolExpr>),
    Or(Box<BoolExpr>, Box<BoolExpr>),
}

impl BoolExpr {
    pub fn arith_operands(&self) -> Vec<&ArithExpr> {
        match self {
            BoolExpr::Cmp(_, a, b) => vec![a, b],
            BoolExpr::Chain(a, _, b, _, c) => vec![a, b, c],
            BoolExpr::Member(e, _) => vec![e],
            BoolExpr::Not(b) => b.arith_operands(),
            BoolExpr::And(a, b) | BoolExpr::Or(a, b) => {
                let mut v = a.arith_operands();
                v.extend(b.arith_operands());
                v
            }
        }
    }

    fn oracle_names(&self, out: &mut BTreeSet<String>) {
        match self {
            BoolExpr::Member(_, a) => {
                out.insert(a.clone());
            }
            BoolExpr::Not(b) => b.oracle_names(out),
            BoolExpr::And(a, b) | BoolExpr::Or(a, b) => {
                a.oracle_names(out);
                b.oracle_names(out);
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone)]
pub enum Command {
    Skip,
    Assign(String, ArithExpr),
    Seq(Box<Command>, Box<Command>),
    If(BoolExpr, Box<Command>, Box<Command>),
    While { guard: BoolExpr, body: Box<Command>, loc: Loc },
}

/// Structural equality; source positions are ignored.
impl PartialEq for Command {
    fn eq(&self, other: &Command) -> bool {
        use Command::*;
        match (self, other) {
            (Skip, Skip) => true,
            (Assign(a, e), Assign(b, f)) => a == b && e == f,
            (Seq(a, b), Seq(c, d)) => a == c && b == d,
            (If(g, a, b), If(h, c, d)) => g == h && a == c && b == d,
            (While { guard: g, body: a, .. }, While { guard: h, body: b, .. }) => g == h && a == b,
            _ => false,
        }
    }
}

impl Command {
    /// Right-nested sequence of `cmds`; `Skip` when empty.
    pub fn seq(cmds: Vec<Command>) -> Command {
        let mut iter = cmds.into_iter().rev();
        let Some(mut acc) = iter.next() else {
            return Command::Skip;
        };
        for c in iter {
            acc = Command::Seq(Box::new(c), Box::new(acc));
        }
        acc
    }

    /// Flattened statement list of a sequence.
    pub fn statements(&self) -> Vec<&Command> {
        match self {
            Command::Seq(a, b) => {
                let mut v = a.statements();
                v.extend(b.statements());
                v
            }
            c => vec![c],
        }
    }

    pub(crate) fn for_each_arith(&self, f: &mut dyn FnMut(&ArithExpr)) {
        match self {
            Command::Skip => {}
            Command::Assign(_, e) => e.visit(f),
            Command::Seq(a, b) => {
                a.for_each_arith(f);
                b.for_each_arith(f);
            }
            Command::If(g, a, b) => {
                g.arith_operands().into_iter().for_each(|e| e.visit(f));
                a.for_each_arith(f);
                b.for_each_arith(f);
            }
            Command::While { guard, body, .. } => {
                guard.arith_operands().into_iter().for_each(|e| e.visit(f));
                body.for_each_arith(f);
            }
        }
    }

    fn for_each_guard(&self, f: &mut dyn FnMut(&BoolExpr)) {
        match self {
            Command::Seq(a, b) => {
                a.for_each_guard(f);
                b.for_each_guard(f);
            }
            Command::If(g, a, b) => {
                f(g);
                a.for_each_guard(f);
                b.for_each_guard(f);
            }
            Command::While { guard, body, .. } => {
                f(guard);
                body.for_each_guard(f);
            }
            _ => {}
        }
    }

    /// Every variable name assigned or read.
    pub fn identifiers(&self, out: &mut BTreeSet<String>) {
        self.for_each_arith(&mut |e| {
            if let ArithExpr::Var(v) = e {
                out.insert(v.clone());
            }
        });
        fn assigned(c: &Command, out: &mut BTreeSet<String>) {
            match c {
                Command::Assign(v, _) => {
                    out.insert(v.clone());
                }
                Command::Seq(a, b) | Command::If(_, a, b) => {
                    assigned(a, out);
                    assigned(b, out);
                }
                Command::While { body, .. } => assigned(body, out),
                Command::Skip => {}
            }
        }
        assigned(self, out);
    }
}

/// A program: `input ...; output ...;` header and a body. Named programs
/// appear as macro definitions (`def F { ... }`) of an enclosing file.
#[derive(Debug, Clone, PartialEq)]
pub struct Program {
    pub name: Option<String>,
    pub inputs: Vec<String>,
    pub outputs: Vec<String>,
    pub body: Command,
    pub defs: Vec<Program>,
}

impl Program {
    pub fn new(inputs: Vec<String>, outputs: Vec<String>, body: Command) -> Program {
        Program {
            name: None,
            inputs,
            outputs,
            body,
            defs: Vec::new(),
        }
    }

    /// Oracle names referenced by `real3(A)` or `e in A`, including inside definitions.
    pub fn oracles(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.body.for_each_arith(&mut |e| {
            if let ArithExpr::Real3(a) = e {
                out.insert(a.clone());
            }
        });
        self.body.for_each_guard(&mut |g| g.oracle_names(&mut out));
        for d in &self.defs {
            out.extend(d.oracles());
        }
        out
    }

    /// True when the body mentions neither `dt` nor `infinity` (definitions included).
    pub fn is_stage_independent(&self) -> bool {
        let mut hit = false;
        self.body.for_each_arith(&mut |e| {
            if matches!(e, ArithExpr::Dt | ArithExpr::Infinity) {
                hit = true;
            }
        });
        !hit && self.defs.iter().all(Program::is_stage_independent)
    }

    pub fn def(&self, name: &str) -> Option<&Program> {
        self.defs.iter().find(|d| d.name.as_deref() == Some(name))
    }

    /// Names of macros invoked by the body.
    pub fn calls(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.body.for_each_arith(&mut |e| {
            if let ArithExpr::Call(name, _) = e {
                out.insert(name.clone());
            }
        });
        out
    }
}
