use num_bigint::BigInt;

use super::{Loc, SyntaxError};
use crate::exactnum::Rational;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Ident(String),
    Number(Rational),
    Kw(&'static str),
    Sym(&'static str),
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(_) => "number".to_string(),
            Tok::Kw(k) | Tok::Sym(k) => format!("`{k}`"),
            Tok::Eof => "end of input".to_string(),
        }
    }
}

pub const KEYWORDS: &[&str] = &[
    "input", "output", "skip", "if", "then", "else", "while", "do", "not", "and", "or", "in", "dt", "infinity",
    "floor", "real3", "J", "def",
];

// Longest match first.
const SYMBOLS: &[&str] = &[":=", "<=", ">=", "!=", ";", ",", "(", ")", "{", "}", "+", "-", "*", "/", "<", ">", "="];

#[derive(Debug, Clone)]
pub struct Token {
    pub tok: Tok,
    pub loc: Loc,
}

pub fn tokenize(src: &str) -> Result<Vec<Token>, SyntaxError> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let (mut i, mut line, mut col) = (0usize, 1u32, 1u32);
    let advance = |i: &mut usize, line: &mut u32, col: &mut u32, n: usize| {
        for _ in 0..n {
            if chars[*i] == '\n' {
                *line += 1;
                *col = 1;
            } else {
                *col += 1;
            }
            *i += 1;
        }
    };
    while i < chars.len() {
        let c = chars[i];
        let loc = Loc { line, col };
        if c.is_whitespace() {
            advance(&mut i, &mut line, &mut col, 1);
            continue;
        }
        if c == '#' {
            while i < chars.len() && chars[i] != '\n' {
                advance(&mut i, &mut line, &mut col, 1);
            }
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            let mut j = i;
            while j < chars.len() && (chars[j].is_ascii_alphanumeric() || chars[j] == '_' || chars[j] == '\'') {
                j += 1;
            }
            let word: String = chars[start..j].iter().collect();
            let tok = match KEYWORDS.iter().find(|k| **k == word) {
                Some(k) => Tok::Kw(k),
                None => Tok::Ident(word),
            };
            advance(&mut i, &mut line, &mut col, j - start);
            out.push(Token { tok, loc });
            continue;
        }
        if c.is_ascii_digit() {
            let (value, len) = number(&chars[i..]).ok_or_else(|| SyntaxError {
                loc,
                expected: vec!["number".into()],
                found: "malformed number".into(),
            })?;
            advance(&mut i, &mut line, &mut col, len);
            out.push(Token {
                tok: Tok::Number(value),
                loc,
            });
            continue;
        }
        let rest: String = chars[i..chars.len().min(i + 2)].iter().collect();
        match SYMBOLS.iter().find(|s| rest.starts_with(**s)) {
            Some(s) => {
                advance(&mut i, &mut line, &mut col, s.len());
                out.push(Token { tok: Tok::Sym(s), loc });
            }
            None => {
                return Err(SyntaxError {
                    loc,
                    expected: vec!["token".into()],
                    found: format!("character {c:?}"),
                })
            }
        }
    }
    out.push(Token {
        tok: Tok::Eof,
        loc: Loc { line, col },
    });
    Ok(out)
}

/// `123`, `3.70` or the fraction literal `23/10` (no whitespace around `/`).
fn number(chars: &[char]) -> Option<(Rational, usize)> {
    let digits = |from: usize| chars[from..].iter().take_while(|c| c.is_ascii_digit()).count();
    let whole = digits(0);
    let int_text: String = chars[..whole].iter().collect();
    let int: BigInt = int_text.parse().ok()?;
    match chars.get(whole) {
        Some('.') => {
            let frac = digits(whole + 1);
            if frac == 0 {
                return None;
            }
            let text: String = chars[..whole].iter().chain(&chars[whole + 1..whole + 1 + frac]).collect();
            let scale = num_traits::pow(BigInt::from(10u8), frac);
            Some((Rational::new(text.parse().ok()?, scale), whole + 1 + frac))
        }
        Some('/') if chars.get(whole + 1).is_some_and(|c| c.is_ascii_digit()) => {
            let den_len = digits(whole + 1);
            let den_text: String = chars[whole + 1..whole + 1 + den_len].iter().collect();
            let den: BigInt = den_text.parse().ok()?;
            if den == BigInt::from(0u8) {
                return None;
            }
            Some((Rational::new(int, den), whole + 1 + den_len))
        }
        _ => Some((Rational::from_integer(int), whole)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<Tok> {
        tokenize(s).unwrap().into_iter().map(|t| t.tok).collect()
    }

    #[test]
    fn fraction_literal_needs_adjacent_slash() {
        let q = |n: i64, d: i64| Tok::Number(Rational::new(n.into(), d.into()));
        assert_eq!(toks("23/10"), vec![q(23, 10), Tok::Eof]);
        assert_eq!(toks("23 / 10"), vec![q(23, 1), Tok::Sym("/"), q(10, 1), Tok::Eof]);
        assert_eq!(toks("x/2"), vec![Tok::Ident("x".into()), Tok::Sym("/"), q(2, 1), Tok::Eof]);
        assert_eq!(toks("3.7"), vec![q(37, 10), Tok::Eof]);
    }

    #[test]
    fn comments_and_positions() {
        let t = tokenize("# header\n  x := 1 # trailing\ny").unwrap();
        assert_eq!(t[0].loc, Loc { line: 2, col: 3 });
        assert_eq!(t[1].tok, Tok::Sym(":="));
        assert_eq!(t[3].loc, Loc { line: 3, col: 1 });
    }

    #[test]
    fn rejects_zero_denominator_and_stray_chars() {
        assert!(tokenize("1/0").is_err());
        assert!(tokenize("x := 1 @ 2").is_err());
        assert!(tokenize("3.").is_err());
    }
}
