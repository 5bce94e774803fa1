use std::fmt::Write;

use super::{ArithExpr, ArithOp, BoolExpr, Command, Program};
use crate::exactnum::format_rational;

/// Canonical concrete syntax. `parse(pretty_print(p)) == p` for parsed programs.
pub fn pretty_print(p: &Program) -> String {
    let mut out = String::new();
    for d in &p.defs {
        let name = d.name.as_deref().unwrap_or("_");
        let _ = writeln!(out, "def {name} {{");
        program(&mut out, d, 1);
        out.push_str("}\n\n");
    }
    program(&mut out, p, 0);
    out
}

fn program(out: &mut String, p: &Program, depth: usize) {
    let pad = "  ".repeat(depth);
    let _ = write!(
        out,
        "{pad}input{}; output{};",
        list(&p.inputs),
        list(&p.outputs)
    );
    if matches!(p.body, Command::Skip | Command::Assign(..)) {
        let _ = writeln!(out, " {}", stmt_inline(&p.body, depth));
        return;
    }
    out.push('\n');
    block_lines(out, &p.body, depth);
}

fn list(names: &[String]) -> String {
    if names.is_empty() {
        String::new()
    } else {
        format!(" {}", names.join(", "))
    }
}

fn block_lines(out: &mut String, c: &Command, depth: usize) {
    let stmts = c.statements();
    let pad = "  ".repeat(depth);
    for (i, s) in stmts.iter().enumerate() {
        let sep = if i + 1 < stmts.len() { ";" } else { "" };
        let _ = writeln!(out, "{pad}{}{sep}", stmt_inline(s, depth));
    }
}

/// A statement starting at the current indentation; nested blocks break lines.
fn stmt_inline(c: &Command, depth: usize) -> String {
    match c {
        Command::Skip => "skip".to_string(),
        Command::Assign(v, e) => format!("{v} := {}", arith(e, 0)),
        Command::Seq(..) => braced(c, depth),
        Command::If(g, a, b) => format!(
            "if {} then {} else {}",
            boolean(g, 0),
            branch(a, depth),
            branch(b, depth)
        ),
        Command::While { guard, body, .. } => format!("while {} do {}", boolean(guard, 0), branch(body, depth)),
    }
}

fn branch(c: &Command, depth: usize) -> String {
    match c {
        Command::Seq(..) => braced(c, depth),
        _ => stmt_inline(c, depth),
    }
}

fn braced(c: &Command, depth: usize) -> String {
    let mut s = String::from("{\n");
    block_lines(&mut s, c, depth + 1);
    s.push_str(&"  ".repeat(depth));
    s.push('}');
    s
}

fn prec(op: ArithOp) -> u8 {
    match op {
        ArithOp::Add | ArithOp::Sub => 1,
        ArithOp::Mul | ArithOp::Div => 2,
    }
}

/// Arithmetic with the fewest parentheses that preserve the tree.
pub fn arith(e: &ArithExpr, min: u8) -> String {
    let (text, p) = match e {
        ArithExpr::Lit(q) => (format_rational(q), 4),
        ArithExpr::Var(v) => (v.clone(), 4),
        ArithExpr::Dt => ("dt".into(), 4),
        ArithExpr::Infinity => ("infinity".into(), 4),
        ArithExpr::Real3(a) => (format!("real3({a})"), 4),
        ArithExpr::Floor(x) => (format!("floor({})", arith(x, 0)), 4),
        ArithExpr::Pair(a, b) => (format!("J({}, {})", arith(a, 0), arith(b, 0)), 4),
        ArithExpr::Call(f, args) => {
            let args: Vec<String> = args.iter().map(|a| arith(a, 0)).collect();
            (format!("{f}({})", args.join(", ")), 4)
        }
        ArithExpr::Neg(x) => (format!("-{}", arith(x, 3)), 3),
        ArithExpr::Bin(op, l, r) => {
            let p = prec(*op);
            (format!("{} {} {}", arith(l, p), op.symbol(), arith(r, p + 1)), p)
        }
    };
    if p < min {
        format!("({text})")
    } else {
        text
    }
}

pub fn boolean(b: &BoolExpr, min: u8) -> String {
    let (text, p) = match b {
        BoolExpr::Cmp(r, x, y) => (format!("{} {} {}", arith(x, 0), r.symbol(), arith(y, 0)), 4),
        BoolExpr::Chain(x, r1, y, r2, z) => (
            format!(
                "{} {} {} {} {}",
                arith(x, 0),
                r1.symbol(),
                arith(y, 0),
                r2.symbol(),
                arith(z, 0)
            ),
            4,
        ),
        BoolExpr::Member(e, a) => (format!("{} in {a}", arith(e, 0)), 4),
        BoolExpr::Not(x) => (format!("not {}", boolean(x, 3)), 3),
        BoolExpr::And(x, y) => (format!("{} and {}", boolean(x, 2), boolean(y, 3)), 2),
        BoolExpr::Or(x, y) => (format!("{} or {}", boolean(x, 1), boolean(y, 2)), 1),
    };
    if p < min {
        format!("({text})")
    } else {
        text
    }
}
