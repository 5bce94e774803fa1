use std::fmt::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{parse_oracle_arg, parse_schedule, read_program, run_program, CliError, Report, RunConfig};
use crate::oracles::OracleSource;

/// Expectations embedded in a corpus file as `#@ key: value` comment lines.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CorpusHeader {
    pub inputs: Vec<String>,
    pub oracles: Vec<(String, OracleSource)>,
    pub stages: Option<Vec<u64>>,
    pub energy_var: Option<String>,
    pub clock_vars: Vec<String>,
    /// `(variable, summary)` pairs, e.g. `("lamp", "periodic(2)")`.
    pub expect: Vec<(String, String)>,
    pub expect_supertask: Option<String>,
    pub expect_energy: Option<String>,
}

fn list(v: &str) -> Vec<String> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()
}

pub fn parse_header(text: &str) -> Result<CorpusHeader, String> {
    let mut h = CorpusHeader::default();
    for (i, line) in text.lines().enumerate() {
        let Some(rest) = line.trim_start().strip_prefix("#@") else {
            continue;
        };
        let (key, value) = rest
            .split_once(':')
            .ok_or_else(|| format!("line {}: expected `#@ key: value`", i + 1))?;
        let (key, value) = (key.trim(), value.trim());
        match key {
            "inputs" => h.inputs = list(value),
            "oracles" => {
                for b in value.split_whitespace() {
                    h.oracles.push(parse_oracle_arg(b).map_err(|e| format!("line {}: {e}", i + 1))?);
                }
            }
            "stages" => h.stages = Some(parse_schedule(value).map_err(|e| format!("line {}: {e}", i + 1))?),
            "energy-var" => h.energy_var = Some(value.to_string()),
            "clock-vars" => h.clock_vars = list(value),
            "expect-supertask" => h.expect_supertask = Some(value.to_string()),
            "expect-energy" => h.expect_energy = Some(value.to_string()),
            k => match k.strip_prefix("expect ") {
                Some(var) => h.expect.push((var.trim().to_string(), value.to_string())),
                None => return Err(format!("line {}: unknown header key `{k}`", i + 1)),
            },
        }
    }
    if h.expect.is_empty() && h.expect_supertask.is_none() && h.expect_energy.is_none() {
        return Err("missing expectation header".into());
    }
    Ok(h)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusEntry {
    pub file: String,
    pub passed: bool,
    /// `- expected` / `+ actual` lines for each mismatch.
    pub diffs: Vec<String>,
    pub error: Option<String>,
    pub report: Option<Report>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub entries: Vec<CorpusEntry>,
}

impl CorpusSummary {
    pub fn passed(&self) -> usize {
        self.entries.iter().filter(|e| e.passed).count()
    }

    pub fn all_passed(&self) -> bool {
        self.passed() == self.entries.len()
    }

    pub fn exit_code(&self) -> i32 {
        if self.all_passed() {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        for e in &self.entries {
            let _ = writeln!(s, "{:<18} {}", e.file, if e.passed { "pass" } else { "FAIL" });
            if let Some(err) = &e.error {
                let _ = writeln!(s, "    error: {err}");
            }
            for d in &e.diffs {
                let _ = writeln!(s, "    {d}");
            }
        }
        let _ = writeln!(s, "{}/{} pass", self.passed(), self.entries.len());
        s
    }
}

/// `$WHDT_CORPUS`, or `corpus` relative to the working directory.
pub fn corpus_dir() -> PathBuf {
    std::env::var_os("WHDT_CORPUS").map_or_else(|| PathBuf::from("corpus"), PathBuf::from)
}

fn compare(diffs: &mut Vec<String>, what: &str, expected: &str, actual: &str) {
    if expected != actual {
        diffs.push(format!("- {what}: {expected}"));
        diffs.push(format!("+ {what}: {actual}"));
    }
}

fn verify(path: &Path, base: &RunConfig) -> Result<CorpusEntry, CliError> {
    let file = path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default();
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let header = parse_header(&text).map_err(|e| CliError::Corpus(format!("{file}: {e}")))?;
    let (_, program) = read_program(path)?;

    let mut config = base.clone();
    config.inputs = header.inputs.clone();
    config.oracles = header.oracles.clone();
    if let Some(s) = &header.stages {
        config.schedule = s.clone();
    }
    if header.energy_var.is_some() {
        config.cost.energy_var = header.energy_var.clone();
    }
    config.cost.clock_vars.extend(header.clock_vars.iter().cloned());

    let report = match run_program(&file, &program, &config) {
        Ok(r) => r,
        Err(e) => {
            return Ok(CorpusEntry {
                file,
                passed: false,
                diffs: Vec::new(),
                error: Some(e.to_string()),
                report: None,
            })
        }
    };

    let mut diffs = Vec::new();
    for (var, expected) in &header.expect {
        let actual = report
            .outputs
            .iter()
            .find(|o| &o.var == var)
            .map_or_else(|| "no such output".to_string(), |o| o.summary.clone());
        compare(&mut diffs, &format!("expect {var}"), expected, &actual);
    }
    let st = report.supertask.as_ref();
    if let Some(expected) = &header.expect_supertask {
        let actual = st.map_or("unclassified", |s| s.metered.class.as_str());
        compare(&mut diffs, "expect-supertask", expected, actual);
    }
    if let Some(expected) = &header.expect_energy {
        let actual = st.and_then(|s| s.energy.as_ref()).map_or("unclassified", |e| e.class.as_str());
        compare(&mut diffs, "expect-energy", expected, actual);
    }
    let failed = report.failed_stages();
    let error = (!failed.is_empty()).then(|| format!("stages did not halt: {failed:?}"));
    Ok(CorpusEntry {
        file,
        passed: diffs.is_empty() && error.is_none(),
        diffs,
        error,
        report: Some(report),
    })
}

/// Runs every `*.whdt` file in `dir` (sorted by name) against its header.
pub fn cmd_corpus(dir: &Path, base: &RunConfig) -> Result<CorpusSummary, CliError> {
    let read = std::fs::read_dir(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files: Vec<PathBuf> = read
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "whdt"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::Corpus(format!("no .whdt files in {}", dir.display())));
    }
    let entries = files.iter().map(|f| verify(f, base)).collect::<Result<Vec<_>, _>>()?;
    Ok(CorpusSummary { entries })
}
