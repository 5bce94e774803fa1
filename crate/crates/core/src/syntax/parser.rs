use super::lexer::{tokenize, Tok, Token};
use super::{ArithExpr, ArithOp, BoolExpr, Command, Loc, Program, SyntaxError};
use crate::exactnum::Relation;

/// Parses a `.whdt` source file: zero or more `def` blocks, then the main program.
pub fn parse(source: &str) -> Result<Program, SyntaxError> {
    let tokens = tokenize(source)?;
    let mut p = Parser { tokens, pos: 0 };
    let mut defs = Vec::new();
    while p.peek() == &Tok::Kw("def") {
        defs.push(p.definition()?);
    }
    let mut main = p.program()?;
    p.expect_eof()?;
    main.defs = defs;
    Ok(main)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

type PResult<T> = Result<T, SyntaxError>;

fn relation(tok: &Tok) -> Option<Relation> {
    Some(match tok {
        Tok::Sym("<") => Relation::Lt,
        Tok::Sym("<=") => Relation::Le,
        Tok::Sym("=") => Relation::Eq,
        Tok::Sym("!=") => Relation::Ne,
        Tok::Sym(">=") => Relation::Ge,
        Tok::Sym(">") => Relation::Gt,
        _ => return None,
    })
}

impl Parser {
    fn peek(&self) -> &Tok {
        &self.tokens[self.pos].tok
    }

    fn loc(&self) -> Loc {
        self.tokens[self.pos].loc
    }

    fn bump(&mut self) -> Tok {
        let t = self.tokens[self.pos].tok.clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn error<T>(&self, expected: &[&str]) -> PResult<T> {
        Err(SyntaxError {
            loc: self.loc(),
            expected: expected.iter().map(|s| s.to_string()).collect(),
            found: self.peek().describe(),
        })
    }

    fn eat(&mut self, tok: Tok) -> bool {
        if *self.peek() == tok {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect_sym(&mut self, s: &'static str) -> PResult<()> {
        if self.eat(Tok::Sym(s)) {
            Ok(())
        } else {
            self.error(&[&format!("`{s}`")])
        }
    }

    fn expect_kw(&mut self, k: &'static str) -> PResult<()> {
        if self.eat(Tok::Kw(k)) {
            Ok(())
        } else {
            self.error(&[&format!("`{k}`")])
        }
    }

    fn expect_eof(&mut self) -> PResult<()> {
        if *self.peek() == Tok::Eof {
            Ok(())
        } else {
            self.error(&["`;`", "end of input"])
        }
    }

    fn ident(&mut self) -> PResult<String> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.bump();
                Ok(s)
            }
            _ => self.error(&["identifier"]),
        }
    }

    fn definition(&mut self) -> PResult<Program> {
        self.expect_kw("def")?;
        let name = self.ident()?;
        self.expect_sym("{")?;
        let mut prog = self.program()?;
        self.expect_sym("}")?;
        prog.name = Some(name);
        Ok(prog)
    }

    fn program(&mut self) -> PResult<Program> {
        self.expect_kw("input")?;
        let inputs = self.ident_list()?;
        self.expect_sym(";")?;
        self.expect_kw("output")?;
        let outputs = self.ident_list()?;
        self.expect_sym(";")?;
        let body = self.statements()?;
        Ok(Program::new(inputs, outputs, body))
    }

    fn ident_list(&mut self) -> PResult<Vec<String>> {
        let mut out = Vec::new();
        if let Tok::Ident(_) = self.peek() {
            out.push(self.ident()?);
            while self.eat(Tok::Sym(",")) {
                out.push(self.ident()?);
            }
        }
        Ok(out)
    }

    /// `stmt (; stmt)* ;?` — blocks nested in a sequence are flattened.
    fn statements(&mut self) -> PResult<Command> {
        let mut cmds = Vec::new();
        loop {
            match self.statement()? {
                Command::Seq(a, b) => cmds.extend(Command::Seq(a, b).statements().into_iter().cloned()),
                c => cmds.push(c),
            }
            if !self.eat(Tok::Sym(";")) {
                break;
            }
            if matches!(self.peek(), Tok::Sym("}") | Tok::Eof) {
                break;
            }
        }
        Ok(Command::seq(cmds))
    }

    fn statement(&mut self) -> PResult<Command> {
        let loc = self.loc();
        match self.peek().clone() {
            Tok::Kw("skip") => {
                self.bump();
                Ok(Command::Skip)
            }
            Tok::Ident(name) => {
                self.bump();
                self.expect_sym(":=")?;
                Ok(Command::Assign(name, self.arith()?))
            }
            Tok::Kw("if") => {
                self.bump();
                let guard = self.boolean()?;
                self.expect_kw("then")?;
                let then = self.statement()?;
                let otherwise = if self.eat(Tok::Kw("else")) {
                    self.statement()?
                } else {
                    Command::Skip
                };
                Ok(Command::If(guard, Box::new(then), Box::new(otherwise)))
            }
            Tok::Kw("while") => {
                self.bump();
                let guard = self.boolean()?;
                self.expect_kw("do")?;
                let body = self.statement()?;
                Ok(Command::While {
                    guard,
                    body: Box::new(body),
                    loc,
                })
            }
            Tok::Sym("{") => {
                self.bump();
                let body = self.statements()?;
                self.expect_sym("}")?;
                Ok(body)
            }
            _ => self.error(&["statement"]),
        }
    }

    fn boolean(&mut self) -> PResult<BoolExpr> {
        let mut lhs = self.bool_term()?;
        while self.eat(Tok::Kw("or")) {
            lhs = BoolExpr::Or(Box::new(lhs), Box::new(self.bool_term()?));
        }
        Ok(lhs)
    }

    fn bool_term(&mut self) -> PResult<BoolExpr> {
        let mut lhs = self.bool_factor()?;
        while self.eat(Tok::Kw("and")) {
            lhs = BoolExpr::And(Box::new(lhs), Box::new(self.bool_factor()?));
        }
        Ok(lhs)
    }

    fn bool_factor(&mut self) -> PResult<BoolExpr> {
        if self.eat(Tok::Kw("not")) {
            return Ok(BoolExpr::Not(Box::new(self.bool_factor()?)));
        }
        if *self.peek() == Tok::Sym("(") {
            // `(` opens either a boolean or an arithmetic operand; try boolean first.
            let save = self.pos;
            self.bump();
            if let Ok(inner) = self.boolean() {
                if self.eat(Tok::Sym(")")) && !self.continues_arith() {
                    return Ok(inner);
                }
            }
            self.pos = save;
        }
        self.comparison()
    }

    fn continues_arith(&self) -> bool {
        relation(self.peek()).is_some()
            || matches!(self.peek(), Tok::Kw("in") | Tok::Sym("+") | Tok::Sym("-") | Tok::Sym("*") | Tok::Sym("/"))
    }

    fn comparison(&mut self) -> PResult<BoolExpr> {
        let lhs = self.arith()?;
        if self.eat(Tok::Kw("in")) {
            return Ok(BoolExpr::Member(lhs, self.ident()?));
        }
        let Some(r1) = relation(self.peek()) else {
            return self.error(&["comparison operator", "`in`"]);
        };
        self.bump();
        let mid = self.arith()?;
        if let Some(r2) = relation(self.peek()) {
            self.bump();
            let hi = self.arith()?;
            return Ok(BoolExpr::Chain(lhs, r1, mid, r2, hi));
        }
        Ok(BoolExpr::Cmp(r1, lhs, mid))
    }

    fn arith(&mut self) -> PResult<ArithExpr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("+") => ArithOp::Add,
                Tok::Sym("-") => ArithOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = ArithExpr::bin(op, lhs, self.term()?);
        }
    }

    fn term(&mut self) -> PResult<ArithExpr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Tok::Sym("*") => ArithOp::Mul,
                Tok::Sym("/") => ArithOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            lhs = ArithExpr::bin(op, lhs, self.unary()?);
        }
    }

    fn unary(&mut self) -> PResult<ArithExpr> {
        if self.eat(Tok::Sym("-")) {
            return Ok(ArithExpr::Neg(Box::new(self.unary()?)));
        }
        self.atom()
    }

    fn atom(&mut self) -> PResult<ArithExpr> {
        match self.peek().clone() {
            Tok::Number(q) => {
                self.bump();
                Ok(ArithExpr::Lit(q))
            }
            Tok::Ident(name) => {
                self.bump();
                if self.eat(Tok::Sym("(")) {
                    let mut args = Vec::new();
                    if !self.eat(Tok::Sym(")")) {
                        args.push(self.arith()?);
                        while self.eat(Tok::Sym(",")) {
                            args.push(self.arith()?);
                        }
                        self.expect_sym(")")?;
                    }
                    return Ok(ArithExpr::Call(name, args));
                }
                Ok(ArithExpr::Var(name))
            }
            Tok::Kw("dt") => {
                self.bump();
                Ok(ArithExpr::Dt)
            }
            Tok::Kw("infinity") => {
                self.bump();
                Ok(ArithExpr::Infinity)
            }
            Tok::Kw("floor") => {
                self.bump();
                self.expect_sym("(")?;
                let e = self.arith()?;
                self.expect_sym(")")?;
                Ok(ArithExpr::Floor(Box::new(e)))
            }
            Tok::Kw("real3") => {
                self.bump();
                self.expect_sym("(")?;
                let name = self.ident()?;
                self.expect_sym(")")?;
                Ok(ArithExpr::Real3(name))
            }
            Tok::Kw("J") => {
                self.bump();
                self.expect_sym("(")?;
                let a = self.arith()?;
                self.expect_sym(",")?;
                let b = self.arith()?;
                self.expect_sym(")")?;
                Ok(ArithExpr::Pair(Box::new(a), Box::new(b)))
            }
            Tok::Sym("(") => {
                self.bump();
                let e = self.arith()?;
                self.expect_sym(")")?;
                Ok(e)
            }
            _ => self.error(&["expression"]),
        }
    }
}
