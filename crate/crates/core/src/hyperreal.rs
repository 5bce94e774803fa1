//! Reading a stage sequence as a hyperreal.
//!
//! A finite prefix of stages cannot determine an element of the ultrapower,
//! so every verdict other than an exactly constant tail is a heuristic.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::exactnum::{format_rational, ExactReal, Rational};
use crate::resources::{growth_exponent, grows_like_sqrt, TREND_WINDOW};

/// Fewest halted stages a classification accepts.
pub const MIN_STAGES: usize = 8;
/// Largest period searched for.
pub const MAX_PERIOD: u64 = 8;
/// An eventually constant tail must span at least this many stages.
pub const CONSTANT_TAIL: usize = 3;
/// `|v|` beyond this bound counts as unbounded once growth is strict.
pub const UNBOUNDED_MAGNITUDE: i64 = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ClassifyError {
    #[error("need at least {needed} halted stages, have {found}")]
    InsufficientStages { found: usize, needed: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Positive,
    Negative,
}

impl Direction {
    pub fn symbol(self) -> char {
        match self {
            Direction::Positive => '+',
            Direction::Negative => '-',
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HyperrealClass {
    /// Literally equal values from `from_stage` on.
    EventuallyConstant { value: ExactReal, from_stage: u64 },
    /// Gaps over the doubling stages at least halve each time.
    Convergent { limit: Rational, residual: Rational },
    /// The value depends only on `n mod period` (after a finite prefix).
    Periodic { period: u64, classes: Vec<(u64, ExactReal)> },
    Unbounded { direction: Direction, growth_exponent: f64 },
    Irregular,
}

impl HyperrealClass {
    /// Everything except an exactly constant tail is a finite-prefix guess.
    pub fn is_heuristic(&self) -> bool {
        !matches!(self, HyperrealClass::EventuallyConstant { .. })
    }

    pub fn kind(&self) -> &'static str {
        match self {
            HyperrealClass::EventuallyConstant { .. } => "eventually-constant",
            HyperrealClass::Convergent { .. } => "convergent",
            HyperrealClass::Periodic { .. } => "periodic",
            HyperrealClass::Unbounded { .. } => "unbounded",
            HyperrealClass::Irregular => "irregular",
        }
    }

    /// Compact form used in corpus expectations, e.g. `periodic(2)`.
    pub fn summary(&self) -> String {
        match self {
            HyperrealClass::EventuallyConstant { value, from_stage } => {
                format!("eventually-constant({value}) from stage {from_stage}")
            }
            HyperrealClass::Convergent { limit, .. } => format!("convergent(~{})", format_rational(limit)),
            HyperrealClass::Periodic { period, .. } => format!("periodic({period})"),
            HyperrealClass::Unbounded { direction, .. } => format!("unbounded({})", direction.symbol()),
            HyperrealClass::Irregular => "irregular".to_string(),
        }
    }
}

impl fmt::Display for HyperrealClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.summary())?;
        if self.is_heuristic() {
            f.write_str(" [HEURISTIC]")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum StandardPart {
    Value { value: ExactReal, heuristic: bool },
    None(&'static str),
}

impl fmt::Display for StandardPart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StandardPart::Value { value, heuristic: false } => write!(f, "{value}"),
            StandardPart::Value { value, heuristic: true } => write!(f, "~{value} [HEURISTIC]"),
            StandardPart::None(reason) => write!(f, "none ({reason})"),
        }
    }
}

pub fn standard_part(cls: &HyperrealClass) -> StandardPart {
    match cls {
        HyperrealClass::EventuallyConstant { value, .. } => StandardPart::Value {
            value: value.clone(),
            heuristic: false,
        },
        HyperrealClass::Convergent { limit, .. } => StandardPart::Value {
            value: ExactReal::Rational(limit.clone()),
            heuristic: true,
        },
        HyperrealClass::Periodic { .. } => StandardPart::None("ultrafilter-dependent"),
        HyperrealClass::Unbounded { .. } => StandardPart::None("infinite"),
        HyperrealClass::Irregular => StandardPart::None("unclassified"),
    }
}

/// One candidate per residue class of `n mod period`. A nonprincipal
/// ultrafilter contains exactly one of the classes, and that class decides
/// the value; nothing observable picks it.
pub fn ultrafilter_report(cls: &HyperrealClass) -> Option<Vec<(String, ExactReal)>> {
    let HyperrealClass::Periodic { period, classes } = cls else {
        return None;
    };
    Some(
        classes
            .iter()
            .map(|(r, v)| {
                let label = match (*period, *r) {
                    (2, 0) => "n even".to_string(),
                    (2, 1) => "n odd".to_string(),
                    (p, r) => format!("n = {r} mod {p}"),
                };
                (label, v.clone())
            })
            .collect(),
    )
}

/// Classifies the values of a variable at halted stages, in schedule order.
pub fn classify_value(points: &[(u64, ExactReal)]) -> Result<HyperrealClass, ClassifyError> {
    if points.len() < MIN_STAGES {
        return Err(ClassifyError::InsufficientStages {
            found: points.len(),
            needed: MIN_STAGES,
        });
    }
    if let Some(c) = periodic(points) {
        return Ok(c);
    }
    if let Some(c) = eventually_constant(points) {
        return Ok(c);
    }
    let Some(rational) = points
        .iter()
        .map(|(n, v)| v.as_rational().map(|q| (*n, q.clone())))
        .collect::<Option<Vec<_>>>()
    else {
        return Ok(HyperrealClass::Irregular);
    };
    if let Some(c) = unbounded(&rational) {
        return Ok(c);
    }
    if let Some(c) = convergent(&rational) {
        return Ok(c);
    }
    Ok(HyperrealClass::Irregular)
}

fn periodic(points: &[(u64, ExactReal)]) -> Option<HyperrealClass> {
    for p in 2..=MAX_PERIOD {
        // smallest prefix after which the residue classes are consistent
        let start = (0..points.len()).find(|&s| residue_map(&points[s..], p).is_some())?;
        let tail = &points[start..];
        let classes = residue_map(tail, p)?;
        let distinct = classes.values().fold(Vec::<&ExactReal>::new(), |mut acc, v| {
            if !acc.contains(&v) {
                acc.push(v);
            }
            acc
        });
        if classes.len() as u64 != p || distinct.len() < 2 {
            continue;
        }
        if longest_consecutive_run(tail) < 3 * p as usize {
            continue;
        }
        return Some(HyperrealClass::Periodic {
            period: p,
            classes: classes.into_iter().collect(),
        });
    }
    None
}

fn residue_map(points: &[(u64, ExactReal)], p: u64) -> Option<BTreeMap<u64, ExactReal>> {
    let mut map: BTreeMap<u64, ExactReal> = BTreeMap::new();
    for (n, v) in points {
        match map.get(&(n % p)) {
            Some(w) if w != v => return None,
            Some(_) => {}
            None => {
                map.insert(n % p, v.clone());
            }
        }
    }
    Some(map)
}

fn longest_consecutive_run(points: &[(u64, ExactReal)]) -> usize {
    let mut best = 0;
    let mut run = 0;
    let mut prev: Option<u64> = None;
    for (n, _) in points {
        run = if prev.is_some_and(|p| p + 1 == *n) { run + 1 } else { 1 };
        best = best.max(run);
        prev = Some(*n);
    }
    best
}

fn eventually_constant(points: &[(u64, ExactReal)]) -> Option<HyperrealClass> {
    let last = &points[points.len() - 1].1;
    let tail = points.iter().rev().take_while(|(_, v)| v == last).count();
    if tail < CONSTANT_TAIL {
        return None;
    }
    let from = points[points.len() - tail].0;
    Some(HyperrealClass::EventuallyConstant {
        value: last.clone(),
        from_stage: from,
    })
}

fn unbounded(points: &[(u64, Rational)]) -> Option<HyperrealClass> {
    let window = &points[points.len().saturating_sub(TREND_WINDOW)..];
    let (first, last) = (&window[0], &window[window.len() - 1]);
    let direction = if first.1.is_positive() && last.1.is_positive() {
        Direction::Positive
    } else if first.1.is_negative() && last.1.is_negative() {
        Direction::Negative
    } else {
        return None;
    };
    let abs: Vec<(u64, Rational)> = window.iter().map(|(n, v)| (*n, v.abs())).collect();
    if !abs.windows(2).all(|w| w[1].1 > w[0].1) {
        return None;
    }
    let (a, b) = (&abs[0], &abs[abs.len() - 1]);
    let large = b.1 > Rational::from_integer(UNBOUNDED_MAGNITUDE.into());
    if !large && !grows_like_sqrt((a.0, &a.1), (b.0, &b.1)) {
        return None;
    }
    Some(HyperrealClass::Unbounded {
        direction,
        growth_exponent: growth_exponent((a.0, &a.1), (b.0, &b.1)),
    })
}

/// Gap halving over the stages `2^j - 1 >= 15`, with a Richardson estimate
/// `2 v_last - v_prev` of the limit (first-order error in `dt`).
fn convergent(points: &[(u64, Rational)]) -> Option<HyperrealClass> {
    let doubling: Vec<&(u64, Rational)> = points
        .iter()
        .filter(|(n, _)| *n >= 15 && (n + 1).is_power_of_two())
        .collect();
    if doubling.len() < 3 {
        return None;
    }
    let gaps: Vec<Rational> = doubling.windows(2).map(|w| (&w[1].1 - &w[0].1).abs()).collect();
    let half = Rational::new(BigInt::one(), BigInt::from(2u8));
    if gaps.iter().all(Zero::is_zero) || !gaps.windows(2).all(|g| g[1] <= &g[0] * &half) {
        return None;
    }
    let last = &doubling[doubling.len() - 1].1;
    let prev = &doubling[doubling.len() - 2].1;
    Some(HyperrealClass::Convergent {
        limit: last * Rational::from_integer(2.into()) - prev,
        residual: gaps[gaps.len() - 1].clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(f: impl Fn(u64) -> ExactReal, stages: impl IntoIterator<Item = u64>) -> Vec<(u64, ExactReal)> {
        stages.into_iter().map(|n| (n, f(n))).collect()
    }

    fn default_stages() -> Vec<u64> {
        (0..16).chain([31, 63, 127]).collect()
    }

    fn q(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn thomson_sequence_is_periodic() {
        let s = seq(|n| ExactReal::from(((n + 1) % 2) as i64), default_stages());
        let c = classify_value(&s).unwrap();
        assert_eq!(
            c,
            HyperrealClass::Periodic {
                period: 2,
                classes: vec![(0, ExactReal::from(1)), (1, ExactReal::from(0))]
            }
        );
        assert_eq!(standard_part(&c), StandardPart::None("ultrafilter-dependent"));
        let report = ultrafilter_report(&c).unwrap();
        assert_eq!(report[0], ("n even".to_string(), ExactReal::from(1)));
        assert_eq!(report[1], ("n odd".to_string(), ExactReal::from(0)));
    }

    #[test]
    fn period_three_has_three_candidates() {
        let s = seq(|n| ExactReal::from(((n + 1) % 3) as i64), default_stages());
        let c = classify_value(&s).unwrap();
        assert!(matches!(c, HyperrealClass::Periodic { period: 3, .. }));
        assert_eq!(ultrafilter_report(&c).unwrap().len(), 3);
    }

    #[test]
    fn periodic_needs_three_full_periods_in_a_run() {
        // five consecutive stages only
        let s = seq(|n| ExactReal::from((n % 2) as i64), [0, 1, 2, 3, 4, 10, 20, 40]);
        assert!(!matches!(classify_value(&s).unwrap(), HyperrealClass::Periodic { .. }));
    }

    #[test]
    fn constant_sequences() {
        let s = seq(|_| ExactReal::from(3), 0..8);
        let c = classify_value(&s).unwrap();
        assert_eq!(c.summary(), "eventually-constant(3) from stage 0");
        assert_eq!(
            standard_part(&c),
            StandardPart::Value {
                value: ExactReal::from(3),
                heuristic: false
            }
        );
        let s = seq(|n| ExactReal::from(if n + 1 >= 5 { 5 } else { 0 }), default_stages());
        assert_eq!(classify_value(&s).unwrap().summary(), "eventually-constant(5) from stage 4");
    }

    #[test]
    fn growth_is_unbounded() {
        let s = seq(|n| ExactReal::from(n as i64 + 1), default_stages());
        let c = classify_value(&s).unwrap();
        assert_eq!(c.summary(), "unbounded(+)");
        assert_eq!(standard_part(&c), StandardPart::None("infinite"));
        let s = seq(|n| ExactReal::from(-(n as i64) - 1), default_stages());
        assert_eq!(classify_value(&s).unwrap().summary(), "unbounded(-)");
        let s = seq(|n| ExactReal::from(1_000_000 + n as i64), 0..8);
        assert_eq!(classify_value(&s).unwrap().summary(), "unbounded(+)");
    }

    #[test]
    fn inverse_stage_converges() {
        let s = seq(|n| ExactReal::Rational(q(2, 1) + q(1, n as i64 + 1)), default_stages());
        let c = classify_value(&s).unwrap();
        let HyperrealClass::Convergent { limit, .. } = &c else {
            panic!("{c:?}");
        };
        assert_eq!(*limit, q(2, 1));
        assert!(c.is_heuristic());
    }

    #[test]
    fn slow_wobble_is_irregular() {
        let s = seq(|n| ExactReal::from((n as i64 * 7) % 5 + (n as i64 / 16)), default_stages());
        assert_eq!(classify_value(&s).unwrap(), HyperrealClass::Irregular);
    }

    #[test]
    fn too_few_stages() {
        let s = seq(|_| ExactReal::from(1), 0..7);
        assert_eq!(
            classify_value(&s),
            Err(ClassifyError::InsufficientStages { found: 7, needed: 8 })
        );
    }
}
