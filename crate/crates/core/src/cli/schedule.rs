use std::collections::BTreeSet;

/// Parses a stage schedule: comma-separated stages and inclusive ranges
/// `a..b`, optionally followed by `+doubling:k`, which appends the next `k`
/// stages of the form `2^j - 1` beyond the largest one listed.
///
/// `0..15+doubling:3` is `0, 1, .., 15, 31, 63, 127`.
pub fn parse_schedule(spec: &str) -> Result<Vec<u64>, String> {
    let spec = spec.trim();
    let (base, doubling) = match spec.split_once('+') {
        Some((b, d)) => {
            let k = d
                .trim()
                .strip_prefix("doubling:")
                .ok_or_else(|| format!("unknown schedule suffix `+{d}`"))?;
            let k: u32 = k.trim().parse().map_err(|_| format!("bad doubling count `{k}`"))?;
            (b, k)
        }
        None => (spec, 0),
    };
    let mut stages = BTreeSet::new();
    for part in base.split(',').map(str::trim) {
        if part.is_empty() {
            return Err("empty schedule entry".into());
        }
        match part.split_once("..") {
            Some((a, b)) => {
                let a = stage(a)?;
                let b = stage(b)?;
                if b < a {
                    return Err(format!("empty range `{part}`"));
                }
                if b - a > 1_000_000 {
                    return Err(format!("range `{part}` is too long"));
                }
                stages.extend(a..=b);
            }
            None => {
                stages.insert(stage(part)?);
            }
        }
    }
    let mut top = *stages.last().expect("nonempty");
    for _ in 0..doubling {
        let next = (top + 2).checked_next_power_of_two().ok_or("doubling overflows")? - 1;
        stages.insert(next);
        top = next;
    }
    Ok(stages.into_iter().collect())
}

fn stage(s: &str) -> Result<u64, String> {
    s.trim().parse().map_err(|_| format!("bad stage `{}`", s.trim()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantics::default_schedule;

    #[test]
    fn ranges_lists_and_doubling() {
        assert_eq!(parse_schedule("0..7").unwrap(), (0..8).collect::<Vec<_>>());
        assert_eq!(parse_schedule("3, 1,2").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_schedule("0..15+doubling:3").unwrap(), default_schedule());
        assert_eq!(parse_schedule("0..4,7+doubling:2").unwrap(), vec![0, 1, 2, 3, 4, 7, 15, 31]);
    }

    #[test]
    fn rejects_malformed() {
        for bad in ["", "a", "5..2", "1,,2", "0..3+halving:2", "0..3+doubling:x"] {
            assert!(parse_schedule(bad).is_err(), "{bad}");
        }
    }
}
