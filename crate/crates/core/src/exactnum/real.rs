use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::{ceil_log3, format_rational, log3_exact, pow3, q_add, q_mul, Budget, Interval, NumError, OracleReal, Rational};

/// Comparison relation appearing in guards.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Lt,
    Le,
    Eq,
    Ne,
    Ge,
    Gt,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Lt => "<",
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ne => "!=",
            Relation::Ge => ">=",
            Relation::Gt => ">",
        }
    }

    pub fn holds(self, ord: Ordering) -> bool {
        match self {
            Relation::Lt => ord == Ordering::Less,
            Relation::Le => ord != Ordering::Greater,
            Relation::Eq => ord == Ordering::Equal,
            Relation::Ne => ord != Ordering::Equal,
            Relation::Ge => ord != Ordering::Less,
            Relation::Gt => ord == Ordering::Greater,
        }
    }

    /// Decides `a rel b` from enclosures alone, when they suffice.
    fn decide(self, a: &Interval, b: &Interval) -> Option<bool> {
        use super::cmp_rational as cmp;
        use Ordering::*;
        let (alo, ahi, blo, bhi) = (a.lo(), a.hi(), b.lo(), b.hi());
        let points_equal = alo == ahi && blo == bhi && cmp(alo, blo) == Equal;
        match self {
            Relation::Lt if cmp(ahi, blo) == Less => Some(true),
            Relation::Lt if cmp(alo, bhi) != Less => Some(false),
            Relation::Le if cmp(ahi, blo) != Greater => Some(true),
            Relation::Le if cmp(alo, bhi) == Greater => Some(false),
            Relation::Gt if cmp(alo, bhi) == Greater => Some(true),
            Relation::Gt if cmp(ahi, blo) != Greater => Some(false),
            Relation::Ge if cmp(alo, bhi) != Less => Some(true),
            Relation::Ge if cmp(ahi, blo) == Less => Some(false),
            Relation::Eq | Relation::Ne => {
                if a.separation(b).is_some() {
                    Some(self == Relation::Ne)
                } else if points_equal {
                    Some(self == Relation::Eq)
                } else {
                    None
                }
            }
            _ => None,
        }
    }
}

/// An exact value: a rational, or a symbolic expression over oracle reals.
#[derive(Debug, Clone)]
pub enum ExactReal {
    Rational(Rational),
    Symbolic(Symbolic),
}

/// Shared, immutable expression DAG.
#[derive(Debug, Clone)]
pub struct Symbolic(Arc<Node>);

#[derive(Debug)]
enum Node {
    Oracle(Arc<OracleReal>),
    /// `scale * inner + offset`; `inner` is never itself affine.
    Affine {
        scale: Rational,
        offset: Rational,
        inner: Arc<Node>,
    },
    Sum(Arc<Node>, Arc<Node>),
    Product(Arc<Node>, Arc<Node>),
    /// `1 / inner`, where `inner` is known to exclude zero from `den_precision` on.
    Recip { inner: Arc<Node>, den_precision: u64 },
}

impl PartialEq for Node {
    fn eq(&self, other: &Node) -> bool {
        match (self, other) {
            (Node::Oracle(a), Node::Oracle(b)) => Arc::ptr_eq(a, b),
            (
                Node::Affine { scale, offset, inner },
                Node::Affine {
                    scale: s2,
                    offset: o2,
                    inner: i2,
                },
            ) => scale == s2 && offset == o2 && inner == i2,
            (Node::Sum(a, b), Node::Sum(c, d)) | (Node::Product(a, b), Node::Product(c, d)) => a == c && b == d,
            (Node::Recip { inner: a, .. }, Node::Recip { inner: b, .. }) => a == b,
            _ => false,
        }
    }
}

impl Node {
    fn enclose(&self, m: u64, budget: &mut Budget) -> Result<Interval, NumError> {
        Ok(match self {
            Node::Oracle(o) => o.enclosure(m, budget)?,
            Node::Affine { scale, offset, inner } => inner.enclose(m, budget)?.affine(scale, offset),
            Node::Sum(a, b) => a.enclose(m, budget)?.add(&b.enclose(m, budget)?),
            Node::Product(a, b) => a.enclose(m, budget)?.mul(&b.enclose(m, budget)?),
            Node::Recip { inner, den_precision } => inner
                .enclose(m.max(*den_precision), budget)?
                .recip()
                .expect("divisor enclosure was separated from zero at construction"),
        })
    }

    /// Extra leaf precision needed to shrink this node's enclosure to the target width.
    fn boost(&self) -> i64 {
        match self {
            Node::Oracle(_) => 0,
            Node::Affine { scale, inner, .. } => {
                let half = scale.abs() / Rational::from_integer(BigInt::from(2u8));
                ceil_log3(&half) + inner.boost()
            }
            Node::Sum(a, b) => a.boost().max(b.boost()) + 1,
            Node::Product(a, b) => a.boost().max(b.boost()),
            Node::Recip { inner, .. } => inner.boost(),
        }
    }

    fn render(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Node::Oracle(o) => write!(f, "real3({})", o.name()),
            Node::Affine { scale, offset, inner } => {
                write!(f, "(")?;
                if !scale.is_one() {
                    write!(f, "{} * ", format_rational(scale))?;
                }
                inner.render(f)?;
                if !offset.is_zero() {
                    write!(f, " + {}", format_rational(offset))?;
                }
                write!(f, ")")
            }
            Node::Sum(a, b) | Node::Product(a, b) => {
                let op = if matches!(self, Node::Sum(..)) { "+" } else { "*" };
                write!(f, "(")?;
                a.render(f)?;
                write!(f, " {op} ")?;
                b.render(f)?;
                write!(f, ")")
            }
            Node::Recip { inner, .. } => {
                write!(f, "(1 / ")?;
                inner.render(f)?;
                write!(f, ")")
            }
        }
    }
}

fn affine(scale: Rational, offset: Rational, node: &Arc<Node>) -> ExactReal {
    if scale.is_zero() {
        return ExactReal::Rational(offset);
    }
    let (scale, offset, inner) = match &**node {
        Node::Affine {
            scale: s2,
            offset: o2,
            inner,
        } => (q_mul(&scale, s2), q_add(&q_mul(&scale, o2), &offset), inner.clone()),
        _ => (scale, offset, node.clone()),
    };
    if scale.is_one() && offset.is_zero() {
        return ExactReal::Symbolic(Symbolic(inner));
    }
    ExactReal::Symbolic(Symbolic(Arc::new(Node::Affine { scale, offset, inner })))
}

/// `(scale, offset, core)` with `node == scale * core + offset`.
fn split_affine(node: &Arc<Node>) -> (Rational, Rational, Arc<Node>) {
    match &**node {
        Node::Affine { scale, offset, inner } => (scale.clone(), offset.clone(), inner.clone()),
        _ => (Rational::one(), Rational::zero(), node.clone()),
    }
}

impl From<Rational> for ExactReal {
    fn from(q: Rational) -> Self {
        ExactReal::Rational(q)
    }
}

impl From<i64> for ExactReal {
    fn from(n: i64) -> Self {
        ExactReal::Rational(Rational::from_integer(n.into()))
    }
}

impl PartialEq for ExactReal {
    /// Structural equality: equal rationals, or identical expression DAGs.
    fn eq(&self, other: &ExactReal) -> bool {
        match (self, other) {
            (ExactReal::Rational(a), ExactReal::Rational(b)) => a == b,
            (ExactReal::Symbolic(a), ExactReal::Symbolic(b)) => Arc::ptr_eq(&a.0, &b.0) || a.0 == b.0,
            _ => false,
        }
    }
}

impl fmt::Display for ExactReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExactReal::Rational(q) => f.write_str(&format_rational(q)),
            ExactReal::Symbolic(s) => s.0.render(f),
        }
    }
}

impl ExactReal {
    pub fn oracle(o: Arc<OracleReal>) -> ExactReal {
        ExactReal::Symbolic(Symbolic(Arc::new(Node::Oracle(o))))
    }

    pub fn zero() -> ExactReal {
        ExactReal::Rational(Rational::zero())
    }

    pub fn as_rational(&self) -> Option<&Rational> {
        match self {
            ExactReal::Rational(q) => Some(q),
            ExactReal::Symbolic(_) => None,
        }
    }

    pub fn is_rational(&self) -> bool {
        self.as_rational().is_some()
    }

    pub fn neg(&self) -> ExactReal {
        match self {
            ExactReal::Rational(q) => ExactReal::Rational(-q),
            ExactReal::Symbolic(s) => affine(-Rational::one(), Rational::zero(), &s.0),
        }
    }

    pub fn add(&self, other: &ExactReal) -> ExactReal {
        match (self, other) {
            (ExactReal::Rational(a), ExactReal::Rational(b)) => ExactReal::Rational(q_add(a, b)),
            (ExactReal::Rational(q), ExactReal::Symbolic(s)) | (ExactReal::Symbolic(s), ExactReal::Rational(q)) => {
                affine(Rational::one(), q.clone(), &s.0)
            }
            (ExactReal::Symbolic(a), ExactReal::Symbolic(b)) => {
                let (s1, o1, c1) = split_affine(&a.0);
                let (s2, o2, c2) = split_affine(&b.0);
                if c1 == c2 {
                    affine(s1 + s2, o1 + o2, &c1)
                } else {
                    ExactReal::Symbolic(Symbolic(Arc::new(Node::Sum(a.0.clone(), b.0.clone()))))
                }
            }
        }
    }

    pub fn sub(&self, other: &ExactReal) -> ExactReal {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &ExactReal) -> ExactReal {
        match (self, other) {
            (ExactReal::Rational(a), ExactReal::Rational(b)) => ExactReal::Rational(q_mul(a, b)),
            (ExactReal::Rational(q), ExactReal::Symbolic(s)) | (ExactReal::Symbolic(s), ExactReal::Rational(q)) => {
                affine(q.clone(), Rational::zero(), &s.0)
            }
            (ExactReal::Symbolic(a), ExactReal::Symbolic(b)) => {
                ExactReal::Symbolic(Symbolic(Arc::new(Node::Product(a.0.clone(), b.0.clone()))))
            }
        }
    }

    /// Division; a symbolic divisor must be separated from zero within the comparison fuel.
    pub fn div(&self, other: &ExactReal, budget: &mut Budget) -> Result<ExactReal, NumError> {
        match other {
            ExactReal::Rational(q) if q.is_zero() => Err(NumError::DivisionByZero),
            ExactReal::Rational(q) => Ok(self.mul(&ExactReal::Rational(q.recip()))),
            ExactReal::Symbolic(s) => {
                let mut last = None;
                for m in budget.schedule(0) {
                    let iv = s.0.enclose(m, budget)?;
                    if !iv.contains_zero() {
                        let recip = ExactReal::Symbolic(Symbolic(Arc::new(Node::Recip {
                            inner: s.0.clone(),
                            den_precision: m,
                        })));
                        return Ok(self.mul(&recip));
                    }
                    last = Some(iv);
                }
                Err(NumError::UnresolvedComparison {
                    fuel: budget.cmp_fuel,
                    left: last.unwrap_or_else(|| Interval::point(Rational::zero())),
                    right: Interval::point(Rational::zero()),
                })
            }
        }
    }

    /// Lowest leaf precision worth trying: one below where the enclosure
    /// width first drops under 1.
    fn start_precision(&self) -> u64 {
        match self {
            ExactReal::Rational(_) => 0,
            ExactReal::Symbolic(s) => (s.0.boost() - 1).max(0) as u64,
        }
    }

    /// Enclosure with every oracle leaf read to digit `m` (leaf precision).
    pub fn enclosure(&self, m: u64, budget: &mut Budget) -> Result<Interval, NumError> {
        match self {
            ExactReal::Rational(q) => Ok(Interval::point(q.clone())),
            ExactReal::Symbolic(s) => s.0.enclose(m, budget),
        }
    }

    /// Enclosure of width at most `3^-k`. Enclosures are nested in `k`.
    pub fn refine(&self, k: u64, budget: &mut Budget) -> Result<Interval, NumError> {
        let s = match self {
            ExactReal::Rational(q) => return Ok(Interval::point(q.clone())),
            ExactReal::Symbolic(s) => s,
        };
        let target = Rational::new(BigInt::one(), pow3(k));
        let mut m = (k as i64 + s.0.boost()).max(0) as u64;
        loop {
            let iv = s.0.enclose(m, budget)?;
            if iv.width() <= target {
                return Ok(iv);
            }
            m += 1;
        }
    }

    /// Decides `self rel other`, refining until the enclosures settle it.
    ///
    /// Equality of distinct symbolic values is never concluded numerically.
    pub fn relate(&self, rel: Relation, other: &ExactReal, budget: &mut Budget) -> Result<bool, NumError> {
        if let (ExactReal::Rational(a), ExactReal::Rational(b)) = (self, other) {
            return Ok(rel.holds(a.cmp(b)));
        }
        if self == other {
            return Ok(rel.holds(Ordering::Equal));
        }
        let mut witness = None;
        let start = self.start_precision().max(other.start_precision());
        for m in budget.schedule(start) {
            let a = self.enclosure(m, budget)?;
            let b = other.enclosure(m, budget)?;
            if let Some(answer) = rel.decide(&a, &b) {
                return Ok(answer);
            }
            witness = Some((a, b));
        }
        Err(unresolved(budget, witness))
    }

    /// Three-way comparison. `Equal` only for equal rationals or identical DAGs.
    pub fn compare(&self, other: &ExactReal, budget: &mut Budget) -> Result<Ordering, NumError> {
        if let (ExactReal::Rational(a), ExactReal::Rational(b)) = (self, other) {
            return Ok(a.cmp(b));
        }
        if self == other {
            return Ok(Ordering::Equal);
        }
        let mut witness = None;
        let start = self.start_precision().max(other.start_precision());
        for m in budget.schedule(start) {
            let a = self.enclosure(m, budget)?;
            let b = other.enclosure(m, budget)?;
            if let Some(ord) = a.separation(&b) {
                return Ok(ord);
            }
            witness = Some((a, b));
        }
        Err(unresolved(budget, witness))
    }

    /// `Some((A, k))` when the value is exactly `3^k * real3(A)`.
    pub fn shifted_oracle(&self) -> Option<(&Arc<OracleReal>, i64)> {
        let ExactReal::Symbolic(s) = self else {
            return None;
        };
        match &*s.0 {
            Node::Oracle(o) => Some((o, 0)),
            Node::Affine { scale, offset, inner } if offset.is_zero() => match &**inner {
                Node::Oracle(o) => log3_exact(scale).map(|k| (o, k)),
                _ => None,
            },
            _ => None,
        }
    }

    /// Exact floor. Uses digit extraction for `3^k * real3(A)` when the
    /// budget allows it, interval refinement otherwise.
    pub fn floor(&self, budget: &mut Budget) -> Result<ExactReal, NumError> {
        if let ExactReal::Rational(q) = self {
            return Ok(ExactReal::Rational(q.floor()));
        }
        if budget.fast_path {
            if let Some((oracle, k)) = self.shifted_oracle() {
                return Ok(ExactReal::Rational(Rational::from_integer(shifted_floor(oracle, k, budget)?)));
            }
        }
        self.floor_by_refinement(budget)
    }

    /// Floor via enclosures only: done once both endpoints share a floor.
    pub fn floor_by_refinement(&self, budget: &mut Budget) -> Result<ExactReal, NumError> {
        if let ExactReal::Rational(q) = self {
            return Ok(ExactReal::Rational(q.floor()));
        }
        let mut witness = None;
        for m in budget.schedule(self.start_precision()) {
            let iv = self.enclosure(m, budget)?;
            let lo = iv.lo().floor();
            if lo == iv.hi().floor() {
                return Ok(ExactReal::Rational(lo));
            }
            witness = Some((iv.clone(), Interval::point(iv.lo().ceil())));
        }
        Err(unresolved(budget, witness))
    }

    /// Digit `d_k` of `A`, given `self == 3^k * real3(A)`.
    pub fn digit_extract(&self, k: u64, budget: &mut Budget) -> Result<u8, NumError> {
        match self.shifted_oracle() {
            Some((oracle, power)) if power == k as i64 => Ok(budget.digit(oracle, k)? as u8),
            _ => Err(NumError::NotShiftedOracle { expected: k as i64 }),
        }
    }
}

/// `floor(3^k * r)`. The tail after digit `k` is at most 1/2, so no carry
/// reaches the integer part: the floor is the digit prefix read in base 3.
fn shifted_floor(oracle: &OracleReal, k: i64, budget: &mut Budget) -> Result<BigInt, NumError> {
    if k < 0 {
        // 3^k * r <= 3/2 / 3 < 1
        return Ok(BigInt::zero());
    }
    oracle.prefix_numerator(k as u64, budget)
}

fn unresolved(budget: &Budget, witness: Option<(Interval, Interval)>) -> NumError {
    let (left, right) = witness.unwrap_or_else(|| {
        let z = Interval::point(Rational::zero());
        (z.clone(), z)
    });
    NumError::UnresolvedComparison {
        fuel: budget.cmp_fuel,
        left,
        right,
    }
}
