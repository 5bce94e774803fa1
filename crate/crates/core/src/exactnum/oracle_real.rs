use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num_bigint::BigInt;
use num_traits::Zero;

use super::{pow3, Budget, Interval, NumError, Rational};
use crate::oracles::OracleError;

/// A deterministic stream of base-3 digits drawn from `{0, 1}`.
pub trait DigitSource: Send + Sync + fmt::Debug {
    fn digit(&self, index: u64) -> Result<bool, OracleError>;
}

/// The real `sum_i 3^-i * d_i` for a `{0,1}` digit stream, so its value lies in `[0, 3/2]`.
///
/// Digits are memoized; concurrent readers see the same digit for the same
/// index because the source is deterministic.
pub struct OracleReal {
    name: String,
    source: Arc<dyn DigitSource>,
    memo: Mutex<HashMap<u64, bool>>,
}

impl fmt::Debug for OracleReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OracleReal").field("name", &self.name).finish()
    }
}

impl OracleReal {
    pub fn new(name: impl Into<String>, source: Arc<dyn DigitSource>) -> Arc<Self> {
        Arc::new(OracleReal {
            name: name.into(),
            source,
            memo: Mutex::new(HashMap::new()),
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub(crate) fn id(&self) -> usize {
        self as *const OracleReal as usize
    }

    /// Raw digit lookup; does not go through a budget.
    pub fn digit(&self, index: u64) -> Result<bool, OracleError> {
        if let Some(d) = self.memo.lock().expect("digit memo poisoned").get(&index) {
            return Ok(*d);
        }
        let d = self.source.digit(index)?;
        self.memo.lock().expect("digit memo poisoned").insert(index, d);
        Ok(d)
    }

    /// `sum_{i<=m} d_i * 3^(m-i)`, the numerator of the partial sum over `3^m`.
    pub fn prefix_numerator(&self, m: u64, budget: &mut Budget) -> Result<BigInt, NumError> {
        let mut acc = BigInt::zero();
        for i in 0..=m {
            acc *= 3u8;
            if budget.digit(self, i)? {
                acc += 1u8;
            }
        }
        Ok(acc)
    }

    /// Enclosure from digits `0..=m`: the partial sum plus the tail bound
    /// `sum_{i>m} 3^-i = 3^-m / 2`.
    pub fn enclosure(&self, m: u64, budget: &mut Budget) -> Result<Interval, NumError> {
        let scale = pow3(m);
        let lo = Rational::new(self.prefix_numerator(m, budget)?, scale.clone());
        let hi = &lo + Rational::new(BigInt::from(1u8), scale * 2u8);
        Ok(Interval::new(lo, hi))
    }
}
