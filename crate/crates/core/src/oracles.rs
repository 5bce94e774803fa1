//! Oracle sets, their base-3 real encodings, Cantor pairing and the
//! limit-lemma harness.
//!
//! None of this is hypercomputation: every set here is computable (or a
//! finite bit file). The point is to exercise the mechanism by which a
//! single real constant, compared exactly, answers membership queries.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Roots;
use num_traits::{Signed, ToPrimitive};
use thiserror::Error;

use crate::exactnum::{DigitSource, ExactReal, OracleReal, Rational};
use crate::semantics::{self, EvalConfig, OracleBinding, SetupError, StageContext, StageSequence};
use crate::syntax::{ArithExpr, Command, Program};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("bit file has {len} digits, index {index} is out of range")]
    BitfileRange { index: u64, len: u64 },
    #[error("J-index {index} decodes to x = {x}, beyond the graph bound {bound}")]
    BoundExceeded { index: u64, x: BigInt, bound: u64 },
    #[error("bit file {path}: {reason}")]
    BadBitfile { path: String, reason: String },
    #[error("unknown oracle source {0:?}")]
    UnknownSource(String),
    #[error("graph oracle needs macro `{0}` with one input and one output")]
    BadGraphMacro(String),
    #[error("graph macro `{name}` failed at x = {x}: {reason}")]
    GraphEvaluation { name: String, x: u64, reason: String },
}

/// Where an oracle set's membership comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleSource {
    Primes,
    Evens,
    Squares,
    /// `{ J(x, f(x)) : x <= bound }` for a one-argument macro `f`.
    Graph { macro_name: String, bound: u64 },
    Bitfile(PathBuf),
    Finite(BTreeSet<u64>),
}

impl OracleSource {
    /// `primes`, `evens`, `squares`, `graph:<macro>:<bound>`, `finite:1,2,3`,
    /// `file:<path>`; anything else is taken as a bit-file path.
    pub fn parse(spec: &str) -> Result<OracleSource, OracleError> {
        Ok(match spec {
            "primes" => OracleSource::Primes,
            "evens" => OracleSource::Evens,
            "squares" => OracleSource::Squares,
            _ => {
                if let Some(rest) = spec.strip_prefix("graph:") {
                    let (name, bound) = rest
                        .rsplit_once(':')
                        .ok_or_else(|| OracleError::UnknownSource(spec.to_string()))?;
                    let bound = bound
                        .parse()
                        .map_err(|_| OracleError::UnknownSource(spec.to_string()))?;
                    OracleSource::Graph {
                        macro_name: name.to_string(),
                        bound,
                    }
                } else if let Some(rest) = spec.strip_prefix("finite:") {
                    let set = rest
                        .split(',')
                        .map(str::trim)
                        .filter(|s| !s.is_empty())
                        .map(|s| s.parse::<u64>())
                        .collect::<Result<_, _>>()
                        .map_err(|_| OracleError::UnknownSource(spec.to_string()))?;
                    OracleSource::Finite(set)
                } else if let Some(path) = spec.strip_prefix("file:") {
                    OracleSource::Bitfile(PathBuf::from(path))
                } else if spec.is_empty() {
                    return Err(OracleError::UnknownSource(spec.to_string()));
                } else {
                    OracleSource::Bitfile(PathBuf::from(spec))
                }
            }
        })
    }
}

impl fmt::Display for OracleSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleSource::Primes => f.write_str("primes"),
            OracleSource::Evens => f.write_str("evens"),
            OracleSource::Squares => f.write_str("squares"),
            OracleSource::Graph { macro_name, bound } => write!(f, "graph:{macro_name}:{bound}"),
            OracleSource::Bitfile(p) => write!(f, "file:{}", p.display()),
            OracleSource::Finite(s) => {
                let items: Vec<String> = s.iter().map(u64::to_string).collect();
                write!(f, "finite:{}", items.join(","))
            }
        }
    }
}

#[derive(Debug)]
enum Membership {
    Primes,
    Evens,
    Squares,
    Graph { table: Vec<BigInt>, bound: u64 },
    Bits(Vec<bool>),
    Finite(BTreeSet<u64>),
}

/// A set `A` of naturals with a deterministic membership test.
#[derive(Debug)]
pub struct OracleSet {
    name: String,
    source: OracleSource,
    membership: Membership,
}

impl OracleSet {
    pub fn builtin(name: &str, source: OracleSource) -> Result<OracleSet, OracleError> {
        let membership = match &source {
            OracleSource::Primes => Membership::Primes,
            OracleSource::Evens => Membership::Evens,
            OracleSource::Squares => Membership::Squares,
            OracleSource::Finite(s) => Membership::Finite(s.clone()),
            OracleSource::Bitfile(p) => Membership::Bits(read_bitfile(p)?),
            OracleSource::Graph { macro_name, .. } => return Err(OracleError::BadGraphMacro(macro_name.clone())),
        };
        Ok(OracleSet {
            name: name.to_string(),
            source,
            membership,
        })
    }

    /// Builds any source; graph sources look their macro up in `defs_of`.
    pub fn build(name: &str, source: OracleSource, defs_of: &Program) -> Result<OracleSet, OracleError> {
        match source {
            OracleSource::Graph { macro_name, bound } => {
                let f = defs_of
                    .def(&macro_name)
                    .ok_or_else(|| OracleError::BadGraphMacro(macro_name.clone()))?;
                let mut set = graph_oracle(f, bound)?;
                set.name = name.to_string();
                Ok(set)
            }
            other => OracleSet::builtin(name, other),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn source(&self) -> &OracleSource {
        &self.source
    }

    pub fn contains(&self, n: u64) -> Result<bool, OracleError> {
        Ok(match &self.membership {
            Membership::Primes => is_prime(n),
            Membership::Evens => n % 2 == 0,
            Membership::Squares => {
                let r = n.sqrt();
                r * r == n
            }
            Membership::Finite(s) => s.contains(&n),
            Membership::Bits(bits) => *bits.get(n as usize).ok_or(OracleError::BitfileRange {
                index: n,
                len: bits.len() as u64,
            })?,
            Membership::Graph { table, bound } => {
                let (x, y) = cantor_unpair(&BigInt::from(n));
                match x.to_u64().filter(|x| x <= bound) {
                    Some(x) => table[x as usize] == y,
                    None => return Err(OracleError::BoundExceeded { index: n, x, bound: *bound }),
                }
            }
        })
    }
}

impl DigitSource for OracleSet {
    fn digit(&self, index: u64) -> Result<bool, OracleError> {
        self.contains(index)
    }
}

fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

fn read_bitfile(path: &Path) -> Result<Vec<bool>, OracleError> {
    let bad = |reason: String| OracleError::BadBitfile {
        path: path.display().to_string(),
        reason,
    };
    let text = std::fs::read_to_string(path).map_err(|e| bad(e.to_string()))?;
    let text = text.trim_end_matches(['\n', '\r']);
    text.bytes()
        .enumerate()
        .map(|(i, b)| match b {
            b'0' => Ok(false),
            b'1' => Ok(true),
            _ => Err(bad(format!("byte {i} is not an ASCII 0 or 1"))),
        })
        .collect()
}

/// The oracle real `sum_i 3^-i * chi_A(i)`, in `[0, 3/2]`.
pub fn encode_set(set: OracleSet) -> Arc<OracleReal> {
    let name = set.name.clone();
    OracleReal::new(name, Arc::new(set))
}

/// Binding map from oracle names to their encodings.
pub fn bind(sets: Vec<OracleSet>) -> OracleBinding {
    sets.into_iter().map(|s| (s.name.clone(), encode_set(s))).collect()
}

/// Cantor pairing `(x + y)(x + y + 1)/2 + y`.
pub fn cantor_pair(x: &BigInt, y: &BigInt) -> BigInt {
    let s = x + y;
    (&s * (&s + 1u8)) / 2u8 + y
}

/// Inverse of [`cantor_pair`] on naturals.
pub fn cantor_unpair(z: &BigInt) -> (BigInt, BigInt) {
    let w = ((z * 8u8 + 1u8).sqrt() - 1u8) / 2u8;
    let t = (&w * (&w + 1u8)) / 2u8;
    let y = z - t;
    let x = &w - &y;
    (x, y)
}

/// Graph oracle `{ J(x, f(x)) : x <= bound }`, tabulating `f` up front.
pub fn graph_oracle(f: &Program, bound: u64) -> Result<OracleSet, OracleError> {
    let name = f.name.clone().unwrap_or_else(|| "f".to_string());
    if f.inputs.len() != 1 || f.outputs.len() != 1 {
        return Err(OracleError::BadGraphMacro(name));
    }
    let config = EvalConfig::default();
    let ctx = StageContext::new(0, &config);
    let mut table = Vec::with_capacity(bound as usize + 1);
    for x in 0..=bound {
        let fail = |reason: String| OracleError::GraphEvaluation {
            name: name.clone(),
            x,
            reason,
        };
        let result = semantics::eval_stage(f, &[ExactReal::from(x as i64)], &ctx, &OracleBinding::new())
            .map_err(|e| fail(e.to_string()))?;
        if let Some(err) = result.status.failure() {
            return Err(fail(err));
        }
        let value = result.store.get(&f.outputs[0]).and_then(ExactReal::as_rational).cloned();
        match value {
            Some(q) if q.is_integer() && !q.numer().is_negative() => table.push(q.numer().clone()),
            _ => return Err(fail("result is not a natural number".to_string())),
        }
    }
    Ok(OracleSet {
        name: name.clone(),
        source: OracleSource::Graph {
            macro_name: name,
            bound,
        },
        membership: Membership::Graph { table, bound },
    })
}

/// A two-argument computable `F(s, x)` whose pointwise limit in `s` is the
/// function of interest.
#[derive(Debug, Clone)]
pub struct LimitSpec {
    /// File holding the definition of `F`.
    pub program: Program,
    pub macro_name: String,
    pub description: String,
}

impl LimitSpec {
    pub fn new(program: Program, macro_name: &str, description: &str) -> LimitSpec {
        LimitSpec {
            program,
            macro_name: macro_name.to_string(),
            description: description.to_string(),
        }
    }

    /// `input x; output y; y := F(infinity, x)` with this spec's definitions.
    pub fn harness(&self) -> Program {
        let body = Command::Assign(
            "y".into(),
            ArithExpr::Call(self.macro_name.clone(), vec![ArithExpr::Infinity, ArithExpr::var("x")]),
        );
        let mut p = Program::new(vec!["x".into()], vec!["y".into()], body);
        p.defs = self.program.defs.clone();
        p
    }
}

/// Runs `F(infinity, x)` over the schedule; at stage `n` that is `F(n + 1, x)`.
pub fn run_limit(
    spec: &LimitSpec,
    x: u64,
    schedule: &[u64],
    config: &EvalConfig,
) -> Result<StageSequence, SetupError> {
    let program = spec.harness();
    semantics::eval_stages(
        &program,
        &[ExactReal::Rational(Rational::from_integer(x.into()))],
        schedule,
        &OracleBinding::new(),
        config,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::{parse_rational, Budget};
    use num_traits::Zero;
    use crate::syntax::parse;

    fn int(n: u64) -> BigInt {
        BigInt::from(n)
    }

    #[test]
    fn pairing_small_values() {
        assert_eq!(cantor_pair(&int(0), &int(0)), int(0));
        assert_eq!(cantor_pair(&int(1), &int(0)), int(1));
        assert_eq!(cantor_pair(&int(0), &int(1)), int(2));
        assert_eq!(cantor_pair(&int(3), &int(9)), int(87));
    }

    #[test]
    fn pairing_round_trips_below_ten_thousand() {
        for z in 0..10_000u64 {
            let (x, y) = cantor_unpair(&int(z));
            assert_eq!(cantor_pair(&x, &y), int(z));
        }
        for x in 0..100u64 {
            for y in 0..100u64 {
                assert_eq!(cantor_unpair(&cantor_pair(&int(x), &int(y))), (int(x), int(y)));
            }
        }
    }

    #[test]
    fn encoded_values() {
        let mut budget = Budget::default();
        let empty = encode_set(OracleSet::builtin("E", OracleSource::Finite(BTreeSet::new())).unwrap());
        let iv = ExactReal::oracle(empty).refine(10, &mut budget).unwrap();
        assert_eq!(*iv.lo(), Rational::zero());

        // All ones: sum 3^-i = 3/2; evens: sum 9^-k = 9/8.
        let all = encode_set(OracleSet::builtin("N", OracleSource::Finite((0..200).collect())).unwrap());
        let evens = encode_set(OracleSet::builtin("V", OracleSource::Evens).unwrap());
        for (o, v) in [(all, "3/2"), (evens, "9/8")] {
            let target = parse_rational(v).unwrap();
            for k in [0, 5, 40] {
                let iv = ExactReal::oracle(o.clone()).refine(k, &mut budget).unwrap();
                assert!(iv.contains(&target), "{v} not in {iv} at k={k}");
            }
        }
    }

    #[test]
    fn graph_oracle_membership() {
        let p = parse("def sq { input x; output y; y := x * x } input; output; skip").unwrap();
        let g = graph_oracle(p.def("sq").unwrap(), 20).unwrap();
        let j = |x: u64, y: u64| cantor_pair(&int(x), &int(y)).to_u64().unwrap();
        assert!(g.contains(j(3, 9)).unwrap());
        assert!(!g.contains(j(3, 8)).unwrap());
        assert!(matches!(g.contains(j(25, 0)), Err(OracleError::BoundExceeded { .. })));
    }

    #[test]
    fn builtin_sets() {
        let primes = OracleSet::builtin("P", OracleSource::Primes).unwrap();
        let got: Vec<u64> = (0..30).filter(|n| primes.contains(*n).unwrap()).collect();
        assert_eq!(got, vec![2, 3, 5, 7, 11, 13, 17, 19, 23, 29]);
        let sq = OracleSet::builtin("S", OracleSource::Squares).unwrap();
        let got: Vec<u64> = (0..50).filter(|n| sq.contains(*n).unwrap()).collect();
        assert_eq!(got, vec![0, 1, 4, 9, 16, 25, 36, 49]);
    }

    #[test]
    fn bitfile_source() {
        let dir = std::env::temp_dir().join(format!("whdt-bits-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("a.bits");
        std::fs::write(&path, "1011\n").unwrap();
        let set = OracleSet::builtin("A", OracleSource::parse(path.to_str().unwrap()).unwrap()).unwrap();
        assert!(set.contains(0).unwrap());
        assert!(!set.contains(1).unwrap());
        assert_eq!(set.contains(4), Err(OracleError::BitfileRange { index: 4, len: 4 }));
        std::fs::write(&path, "10x1").unwrap();
        assert!(OracleSet::builtin("A", OracleSource::Bitfile(path.clone())).is_err());
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn source_specs() {
        assert_eq!(OracleSource::parse("primes").unwrap(), OracleSource::Primes);
        assert_eq!(
            OracleSource::parse("graph:sq:20").unwrap(),
            OracleSource::Graph {
                macro_name: "sq".into(),
                bound: 20
            }
        );
        assert_eq!(
            OracleSource::parse("finite:1, 4,9").unwrap(),
            OracleSource::Finite([1, 4, 9].into_iter().collect())
        );
        assert!(OracleSource::parse("graph:sq").is_err());
        assert_eq!(OracleSource::parse("finite:").unwrap().to_string(), "finite:");
    }
}
