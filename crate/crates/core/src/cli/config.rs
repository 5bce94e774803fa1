use std::collections::BTreeSet;

use crate::exactnum::{parse_rational, Rational};
use crate::resources::CostModel;

/// Applies one `KEY=VAL` cost override. Keys are those of the config file.
pub fn apply_cost(model: &mut CostModel, key: &str, value: &str) -> Result<(), String> {
    let rational = |v: &str| -> Result<Rational, String> {
        let q = parse_rational(v).map_err(|e| format!("{key}: {e}"))?;
        if q < Rational::from_integer(0.into()) {
            return Err(format!("{key} must be nonnegative"));
        }
        Ok(q)
    };
    match key.trim() {
        "assign_cost" => model.assign_cost = rational(value)?,
        "guard_cost" => model.guard_cost = rational(value)?,
        "oracle_cost" => model.oracle_cost = rational(value)?,
        "clock_vars" => {
            model.clock_vars = value
                .split(',')
                .map(str::trim)
                .filter(|s| !s.is_empty())
                .map(String::from)
                .collect::<BTreeSet<_>>()
        }
        "energy_var" => model.energy_var = Some(value.trim().to_string()).filter(|s| !s.is_empty()),
        other => return Err(format!("unknown cost key `{other}`")),
    }
    Ok(())
}

/// Reads a TOML cost file:
///
/// ```toml
/// assign_cost = 1
/// guard_cost = "1/2"
/// oracle_cost = 0
/// clock_vars = ["time"]
/// energy_var = "E"
/// ```
pub fn load_cost_config(text: &str, model: &mut CostModel) -> Result<(), String> {
    let table: toml::Table = text.parse().map_err(|e: toml::de::Error| e.message().to_string())?;
    for (key, value) in &table {
        let text = match value {
            toml::Value::String(s) => s.clone(),
            toml::Value::Integer(i) => i.to_string(),
            toml::Value::Float(f) => f.to_string(),
            toml::Value::Array(items) => items
                .iter()
                .map(|i| i.as_str().map(String::from).ok_or_else(|| format!("{key}: expected strings")))
                .collect::<Result<Vec<_>, _>>()?
                .join(","),
            _ => return Err(format!("{key}: unsupported value")),
        };
        apply_cost(model, key, &text)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_and_file() {
        let mut m = CostModel::default();
        apply_cost(&mut m, "guard_cost", "1/2").unwrap();
        assert_eq!(m.guard_cost, Rational::new(1.into(), 2.into()));
        assert!(apply_cost(&mut m, "guard_cost", "-1").is_err());
        assert!(apply_cost(&mut m, "speed", "1").is_err());

        load_cost_config(
            "assign_cost = 2\noracle_cost = \"0.5\"\nclock_vars = [\"time\", \"t\"]\nenergy_var = \"E\"\n",
            &mut m,
        )
        .unwrap();
        assert_eq!(m.assign_cost, Rational::from_integer(2.into()));
        assert_eq!(m.oracle_cost, Rational::new(1.into(), 2.into()));
        assert_eq!(m.clock_vars.len(), 2);
        assert_eq!(m.energy_var.as_deref(), Some("E"));
        assert!(load_cost_config("assign_cost = [1]", &mut m).is_err());
    }
}
