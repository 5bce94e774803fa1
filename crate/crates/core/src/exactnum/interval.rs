use std::cmp::Ordering;
use std::fmt;

use num_traits::{Signed, Zero};

use super::{cmp_rational, Approx, Rational};

/// Closed rational interval `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    lo: Rational,
    hi: Rational,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        assert!(cmp_rational(&lo, &hi) != Ordering::Greater, "interval bounds out of order");
        Interval { lo, hi }
    }

    pub fn point(q: Rational) -> Self {
        Interval {
            lo: q.clone(),
            hi: q,
        }
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn contains(&self, q: &Rational) -> bool {
        cmp_rational(&self.lo, q) != Ordering::Greater && cmp_rational(q, &self.hi) != Ordering::Greater
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        cmp_rational(&other.lo, &self.lo) != Ordering::Greater
            && cmp_rational(&self.hi, &other.hi) != Ordering::Greater
    }

    /// `scale * self + offset`.
    pub fn affine(&self, scale: &Rational, offset: &Rational) -> Interval {
        let a = scale * &self.lo + offset;
        let b = scale * &self.hi + offset;
        if scale.is_negative() {
            Interval { lo: b, hi: a }
        } else {
            Interval { lo: a, hi: b }
        }
    }

    pub fn add(&self, other: &Interval) -> Interval {
        Interval {
            lo: &self.lo + &other.lo,
            hi: &self.hi + &other.hi,
        }
    }

    pub fn mul(&self, other: &Interval) -> Interval {
        let products = [
            &self.lo * &other.lo,
            &self.lo * &other.hi,
            &self.hi * &other.lo,
            &self.hi * &other.hi,
        ];
        let lo = products.iter().min().cloned().unwrap_or_else(Rational::zero);
        let hi = products.iter().max().cloned().unwrap_or_else(Rational::zero);
        Interval { lo, hi }
    }

    /// Reciprocal; `None` when the interval touches zero.
    pub fn recip(&self) -> Option<Interval> {
        if self.contains_zero() {
            return None;
        }
        Some(Interval {
            lo: self.hi.recip(),
            hi: self.lo.recip(),
        })
    }

    /// Definitely below / above `other`, if the two are separated.
    pub fn separation(&self, other: &Interval) -> Option<Ordering> {
        if cmp_rational(&self.hi, &other.lo) == Ordering::Less {
            Some(Ordering::Less)
        } else if cmp_rational(&self.lo, &other.hi) == Ordering::Greater {
            Some(Ordering::Greater)
        } else {
            None
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", Approx(&self.lo), Approx(&self.hi))
    }
}
