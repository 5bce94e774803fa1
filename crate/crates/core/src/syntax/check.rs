use std::collections::{BTreeSet, HashSet};
use std::fmt;

use super::{ArithExpr, BoolExpr, Command, Program};

/// Static diagnostic reported by [`check`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    UseBeforeAssign(String),
    DuplicateDecl(String),
    DuplicateDef(String),
    UnknownMacro(String),
    ArityMismatch { name: String, expected: usize, found: usize },
    OutputNotAssigned(String),
    /// A diagnostic inside the body of macro `name`.
    InDef(String, Box<Diagnostic>),
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Diagnostic::UseBeforeAssign(v) => write!(f, "variable `{v}` may be read before it is assigned"),
            Diagnostic::DuplicateDecl(v) => write!(f, "`{v}` is declared more than once"),
            Diagnostic::DuplicateDef(v) => write!(f, "macro `{v}` is defined more than once"),
            Diagnostic::UnknownMacro(v) => write!(f, "unknown macro `{v}`"),
            Diagnostic::ArityMismatch { name, expected, found } => {
                write!(f, "macro `{name}` takes {expected} argument(s), {found} given")
            }
            Diagnostic::OutputNotAssigned(v) => write!(f, "output `{v}` is not assigned on every path"),
            Diagnostic::InDef(name, d) => write!(f, "in def {name}: {d}"),
        }
    }
}

/// Reports use-before-assignment, unknown macros and duplicate declarations.
/// An empty list means the program is well formed.
pub fn check(p: &Program) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut seen_defs = HashSet::new();
    for d in &p.defs {
        let name = d.name.clone().unwrap_or_default();
        if !seen_defs.insert(name.clone()) {
            diags.push(Diagnostic::DuplicateDef(name.clone()));
        }
        for inner in check_one(d, p) {
            diags.push(Diagnostic::InDef(name.clone(), Box::new(inner)));
        }
    }
    diags.extend(check_one(p, p));
    diags
}

fn check_one(p: &Program, file: &Program) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut declared = HashSet::new();
    for v in p.inputs.iter().chain(&p.outputs) {
        if !declared.insert(v.as_str()) {
            diags.push(Diagnostic::DuplicateDecl(v.clone()));
        }
    }
    let mut cx = Flow {
        file,
        diags: &mut diags,
        reported: BTreeSet::new(),
    };
    let start: BTreeSet<String> = p.inputs.iter().cloned().collect();
    let assigned = cx.command(&p.body, start);
    for out in &p.outputs {
        if !assigned.contains(out) {
            diags.push(Diagnostic::OutputNotAssigned(out.clone()));
        }
    }
    diags
}

/// Definite-assignment analysis.
struct Flow<'a> {
    file: &'a Program,
    diags: &'a mut Vec<Diagnostic>,
    reported: BTreeSet<String>,
}

impl Flow<'_> {
    fn command(&mut self, c: &Command, defined: BTreeSet<String>) -> BTreeSet<String> {
        match c {
            Command::Skip => defined,
            Command::Assign(v, e) => {
                self.arith(e, &defined);
                let mut d = defined;
                d.insert(v.clone());
                d
            }
            Command::Seq(a, b) => {
                let d = self.command(a, defined);
                self.command(b, d)
            }
            Command::If(g, a, b) => {
                self.boolean(g, &defined);
                let da = self.command(a, defined.clone());
                let db = self.command(b, defined);
                da.intersection(&db).cloned().collect()
            }
            Command::While { guard, body, .. } => {
                self.boolean(guard, &defined);
                self.command(body, defined.clone());
                defined
            }
        }
    }

    fn boolean(&mut self, b: &BoolExpr, defined: &BTreeSet<String>) {
        for e in b.arith_operands() {
            self.arith(e, defined);
        }
    }

    fn arith(&mut self, e: &ArithExpr, defined: &BTreeSet<String>) {
        match e {
            ArithExpr::Var(v) => {
                if !defined.contains(v) && self.reported.insert(v.clone()) {
                    self.diags.push(Diagnostic::UseBeforeAssign(v.clone()));
                }
            }
            ArithExpr::Neg(x) | ArithExpr::Floor(x) => self.arith(x, defined),
            ArithExpr::Bin(_, a, b) | ArithExpr::Pair(a, b) => {
                self.arith(a, defined);
                self.arith(b, defined);
            }
            ArithExpr::Call(name, args) => {
                match self.file.def(name) {
                    None => self.diags.push(Diagnostic::UnknownMacro(name.clone())),
                    Some(d) if d.inputs.len() != args.len() => self.diags.push(Diagnostic::ArityMismatch {
                        name: name.clone(),
                        expected: d.inputs.len(),
                        found: args.len(),
                    }),
                    Some(_) => {}
                }
                for a in args {
                    self.arith(a, defined);
                }
            }
            ArithExpr::Lit(_) | ArithExpr::Dt | ArithExpr::Infinity | ArithExpr::Real3(_) => {}
        }
    }
}
