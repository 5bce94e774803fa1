//! Exact numerics for stage evaluation.
//!
//! Values are either canonical big rationals or symbolic expressions over
//! rationals and base-3 oracle reals. Symbolic values are compared and
//! floored by interval refinement, which is bounded by a digit-query fuel:
//! when the fuel runs out the comparison is reported as unresolved instead
//! of being guessed.

mod interval;
mod oracle_real;
mod real;

use std::collections::HashSet;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

pub use interval::Interval;
pub use oracle_real::{DigitSource, OracleReal};
pub use real::{ExactReal, Relation};

use crate::oracles::OracleError;

/// Arbitrary-precision rational, always in lowest terms with positive denominator.
pub type Rational = num_rational::BigRational;

/// Default number of oracle digits a single comparison may consult.
pub const DEFAULT_CMP_FUEL: u64 = 4096;

/// Default cap on distinct oracle digits read during one stage.
pub const DEFAULT_QUERY_LIMIT: u64 = 1 << 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("comparison unresolved after {fuel} oracle digits (witness {left} vs {right})")]
    UnresolvedComparison {
        fuel: u64,
        left: Interval,
        right: Interval,
    },
    #[error("oracle query limit of {limit} digits exceeded")]
    OracleQueryLimit { limit: u64 },
    #[error("value is not of the form 3^{expected} * real3(A)")]
    NotShiftedOracle { expected: i64 },
    #[error("oracle {oracle}: {source}")]
    Oracle {
        oracle: String,
        #[source]
        source: OracleError,
    },
}

/// Per-evaluation refinement settings and digit-query accounting.
///
/// Every digit read from an oracle real goes through [`Budget::digit`], so
/// the set of distinct `(oracle, index)` pairs touched during a stage is
/// known exactly.
#[derive(Debug, Clone)]
pub struct Budget {
    /// Highest number of digits (per oracle leaf) one comparison may use.
    pub cmp_fuel: u64,
    /// Cap on distinct digits read over the lifetime of this budget.
    pub query_limit: u64,
    /// Use exact digit extraction for `floor(3^k * real3(A))`.
    pub fast_path: bool,
    seen: HashSet<(usize, u64)>,
}

impl Default for Budget {
    fn default() -> Self {
        Self::new(DEFAULT_CMP_FUEL)
    }
}

impl Budget {
    pub fn new(cmp_fuel: u64) -> Self {
        Budget {
            cmp_fuel,
            query_limit: DEFAULT_QUERY_LIMIT,
            fast_path: true,
            seen: HashSet::new(),
        }
    }

    pub fn with_query_limit(mut self, limit: u64) -> Self {
        self.query_limit = limit;
        self
    }

    pub fn with_fast_path(mut self, on: bool) -> Self {
        self.fast_path = on;
        self
    }

    /// Number of distinct oracle digits read so far.
    pub fn queries(&self) -> u64 {
        self.seen.len() as u64
    }

    pub fn digit(&mut self, oracle: &OracleReal, index: u64) -> Result<bool, NumError> {
        let key = (oracle.id(), index);
        if !self.seen.contains(&key) {
            if self.seen.len() as u64 >= self.query_limit {
                return Err(NumError::OracleQueryLimit {
                    limit: self.query_limit,
                });
            }
            self.seen.insert(key);
        }
        oracle.digit(index).map_err(|source| NumError::Oracle {
            oracle: oracle.name().to_string(),
            source,
        })
    }

    /// Leaf precisions tried by a comparison: every precision from `start`
    /// to `start + 64`, then doubling, always ending at the last precision
    /// the fuel allows.
    pub(crate) fn schedule(&self, start: u64) -> Vec<u64> {
        let mut out = Vec::new();
        if self.cmp_fuel == 0 {
            return out;
        }
        let last = self.cmp_fuel - 1;
        let mut m = start.min(last);
        while m <= last && m <= start + 64 {
            out.push(m);
            m += 1;
        }
        let mut m = 2 * (start + 64);
        while m < last {
            out.push(m);
            m *= 2;
        }
        if out.last() != Some(&last) {
            out.push(last);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid rational literal {0:?}")]
pub struct ParseRationalError(pub String);

/// Parses `-2.3`, `37/10`, `5` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError(text.to_string());
    let s = text.trim();
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let digits = |d: &str| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit());
    let value = if let Some((n, d)) = body.split_once('/') {
        if !digits(n) || !digits(d) {
            return Err(err());
        }
        let den: BigInt = d.parse().map_err(|_| err())?;
        if den.is_zero() {
            return Err(err());
        }
        Rational::new(n.parse().map_err(|_| err())?, den)
    } else if let Some((i, f)) = body.split_once('.') {
        if !digits(i) || !digits(f) {
            return Err(err());
        }
        let scale = BigInt::from(10u8).pow(f.len() as u32);
        let whole: BigInt = format!("{i}{f}").parse().map_err(|_| err())?;
        Rational::new(whole, scale)
    } else {
        if !digits(body) {
            return Err(err());
        }
        Rational::from_integer(body.parse().map_err(|_| err())?)
    };
    Ok(if neg { -value } else { value })
}

/// Canonical text form: `3`, `-37/10`.
pub fn format_rational(q: &Rational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Short decimal rendering for diagnostics only.
pub(crate) fn approx(q: &Rational) -> String {
    use num_traits::ToPrimitive;
    match q.to_f64() {
        Some(f) if f.is_finite() => format!("{f:.6}"),
        _ => format_rational(q),
    }
}

/// Compares by cross-multiplication; cheaper than `Ord` for very large
/// denominators that agree in many leading continued-fraction terms.
pub(crate) fn cmp_rational(a: &Rational, b: &Rational) -> std::cmp::Ordering {
    if a.denom() == b.denom() {
        return a.numer().cmp(b.numer());
    }
    (a.numer() * b.denom()).cmp(&(b.numer() * a.denom()))
}

/// `a + b` without a gcd when both are integers.
pub(crate) fn q_add(a: &Rational, b: &Rational) -> Rational {
    if a.is_integer() && b.is_integer() {
        Rational::from_integer(a.numer() + b.numer())
    } else {
        a + b
    }
}

/// `a * b` without a gcd when both are integers.
pub(crate) fn q_mul(a: &Rational, b: &Rational) -> Rational {
    if a.is_integer() && b.is_integer() {
        Rational::from_integer(a.numer() * b.numer())
    } else {
        a * b
    }
}

pub(crate) fn pow3(k: u64) -> BigInt {
    num_traits::pow(BigInt::from(3u8), k as usize)
}

/// Smallest `j` with `3^j >= q`, for positive `q`.
pub(crate) fn ceil_log3(q: &Rational) -> i64 {
    debug_assert!(q.is_positive());
    let (n, d) = (q.numer(), q.denom());
    let mut j = 0i64;
    if n > d {
        // 3^j >= n/d  <=>  d * 3^j >= n
        let mut p = d.clone();
        while p < *n {
            p *= 3u8;
            j += 1;
        }
    } else {
        // 3^-i >= n/d  <=>  n * 3^i <= d; find the largest such i
        let mut p = n * 3u8;
        while p <= *d {
            p *= 3u8;
            j -= 1;
        }
    }
    j
}

/// Exponent `k` such that `q == 3^k`, if any.
pub(crate) fn log3_exact(q: &Rational) -> Option<i64> {
    fn power_of_three(n: &BigInt) -> Option<i64> {
        let three = BigInt::from(3u8);
        let mut n = n.clone();
        let mut k = 0;
        while !n.is_one() {
            if n.is_zero() || !(&n % &three).is_zero() {
                return None;
            }
            n /= &three;
            k += 1;
        }
        Some(k)
    }
    if !q.is_positive() {
        return None;
    }
    if q.denom().is_one() {
        power_of_three(q.numer())
    } else if q.numer().is_one() {
        power_of_three(q.denom()).map(|k| -k)
    } else {
        None
    }
}

pub(crate) struct Approx<'a>(pub &'a Rational);

impl fmt::Display for Approx<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&approx(self.0))
    }
}
