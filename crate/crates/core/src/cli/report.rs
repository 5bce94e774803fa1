use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::exactnum::{format_rational, ExactReal, NumError};
use crate::hyperreal::{classify_value, standard_part, ultrafilter_report, HyperrealClass, StandardPart, MIN_STAGES};
use crate::resources::{classify_supertask, SupertaskClass, SupertaskVerdict};
use crate::semantics::{HaltStatus, RuntimeError, StageSequence};

/// Everything `run` knows about one program over one schedule. All numbers
/// are exact and serialized as strings (`"3"`, `"-37/10"`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub program: String,
    pub inputs: Vec<NamedValue>,
    pub schedule: Vec<u64>,
    pub outputs: Vec<OutputReport>,
    pub stages: Vec<StageRow>,
    pub supertask: Option<SupertaskReport>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedValue {
    pub name: String,
    pub value: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputReport {
    pub var: String,
    /// `eventually-constant`, `convergent`, `periodic`, `unbounded`, `irregular`,
    /// or `unclassified` when classification failed.
    pub class: String,
    pub summary: String,
    pub heuristic: bool,
    pub standard_part: Option<String>,
    pub no_standard_part: Option<String>,
    pub detail: Option<String>,
    /// Residue classes of a periodic verdict, one per candidate value.
    pub candidates: Vec<NamedValue>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRow {
    pub stage: u64,
    pub dt: String,
    pub status: String,
    pub outputs: BTreeMap<String, Option<String>>,
    pub cost: String,
    pub per_loop: BTreeMap<String, String>,
    pub outside_loops: String,
    pub oracle_queries: u64,
    pub peak_store: usize,
    pub iterations: u64,
    pub steps: u64,
    pub energy_peak: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupertaskReport {
    pub metered: VerdictView,
    pub energy: Option<EnergyView>,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictView {
    pub class: String,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyView {
    pub var: String,
    pub class: String,
    pub detail: String,
    pub within_initial: bool,
}

const METERING_NOTE: &str =
    "every discrete step is charged, so any loop whose iteration count grows with the stage is bad under metering";

pub(crate) fn value_text(v: &ExactReal) -> String {
    match v.as_rational() {
        Some(q) => format_rational(q),
        None => v.to_string(),
    }
}

fn supertask_view(c: &SupertaskClass) -> VerdictView {
    let detail = match c {
        SupertaskClass::Good { bound } => format!("bounded by {}", format_rational(bound)),
        SupertaskClass::Bad { growth_exponent, last } => {
            format!("strictly increasing, reaching {} (growth exponent ~{growth_exponent:.2})", format_rational(last))
        }
        SupertaskClass::Undetermined => "no bounded or divergent trend".to_string(),
    };
    VerdictView {
        class: c.label().to_string(),
        detail,
    }
}

fn output_report(var: &str, seq: &StageSequence) -> OutputReport {
    let points = seq.halted_values(var);
    let mut r = OutputReport {
        var: var.to_string(),
        class: "unclassified".into(),
        summary: "unclassified".into(),
        heuristic: false,
        standard_part: None,
        no_standard_part: None,
        detail: None,
        candidates: Vec::new(),
        error: None,
    };
    let cls = match classify_value(&points) {
        Ok(c) => c,
        Err(e) => {
            r.error = Some(e.to_string());
            return r;
        }
    };
    r.class = cls.kind().to_string();
    r.summary = cls.summary();
    r.heuristic = cls.is_heuristic();
    match standard_part(&cls) {
        StandardPart::Value { value, .. } => r.standard_part = Some(value_text(&value)),
        StandardPart::None(reason) => r.no_standard_part = Some(reason.to_string()),
    }
    r.detail = match &cls {
        HyperrealClass::EventuallyConstant { .. } | HyperrealClass::Irregular => None,
        HyperrealClass::Convergent { residual, .. } => Some(format!("last gap {}", format_rational(residual))),
        HyperrealClass::Periodic { period, .. } => Some(format!(
            "a nonprincipal ultrafilter contains exactly one residue class mod {period}, and that choice fixes the value"
        )),
        HyperrealClass::Unbounded { growth_exponent, .. } => Some(format!("growth exponent ~{growth_exponent:.2}")),
    };
    if let Some(cands) = ultrafilter_report(&cls) {
        r.candidates = cands
            .into_iter()
            .map(|(name, v)| NamedValue {
                name,
                value: value_text(&v),
            })
            .collect();
    }
    r
}

pub(crate) fn build_report(
    program: &str,
    inputs: Vec<NamedValue>,
    seq: &StageSequence,
    energy_var: Option<&str>,
) -> Report {
    let mut warnings = Vec::new();
    let stages: Vec<StageRow> = seq
        .results
        .iter()
        .map(|r| {
            if let HaltStatus::RuntimeError(RuntimeError::Num(NumError::UnresolvedComparison { .. })) = &r.status {
                warnings.push(format!("stage {}: {}", r.stage, r.status));
            }
            let outputs = seq
                .outputs
                .iter()
                .map(|o| {
                    let v = if r.status.is_halted() { r.store.get(o).map(value_text) } else { None };
                    (o.clone(), v)
                })
                .collect();
            StageRow {
                stage: r.stage,
                dt: format_rational(&r.dt),
                status: r.status.to_string(),
                outputs,
                cost: format_rational(&r.ledger.total),
                per_loop: r
                    .ledger
                    .per_loop
                    .iter()
                    .map(|(loc, c)| (loc.to_string(), format_rational(c)))
                    .collect(),
                outside_loops: format_rational(&r.ledger.outside_loops),
                oracle_queries: r.ledger.oracle_queries,
                peak_store: r.ledger.peak_store,
                iterations: r.iterations(),
                steps: r.steps,
                energy_peak: r
                    .ledger
                    .energy
                    .as_ref()
                    .and_then(|w| w.peak.as_ref())
                    .map(format_rational),
            }
        })
        .collect();

    let outputs: Vec<OutputReport> = seq.outputs.iter().map(|o| output_report(o, seq)).collect();
    for o in &outputs {
        if o.heuristic {
            warnings.push(format!("{}: {} is a HEURISTIC verdict from finitely many stages", o.var, o.summary));
        }
    }

    let supertask = match classify_supertask(&seq.ledgers(), MIN_STAGES) {
        Ok(SupertaskVerdict { metered, energy }) => Some(SupertaskReport {
            metered: supertask_view(&metered),
            energy: energy.map(|e| {
                let view = supertask_view(&e.class);
                EnergyView {
                    var: energy_var.unwrap_or_default().to_string(),
                    class: view.class,
                    detail: view.detail,
                    within_initial: e.within_initial,
                }
            }),
            note: METERING_NOTE.to_string(),
        }),
        Err(e) => {
            warnings.push(format!("supertask: {e}"));
            None
        }
    };

    Report {
        program: program.to_string(),
        inputs,
        schedule: seq.stages(),
        outputs,
        stages,
        supertask,
        warnings,
    }
}

impl Report {
    /// Stages that did not halt normally.
    pub fn failed_stages(&self) -> Vec<u64> {
        self.stages.iter().filter(|s| s.status != "halted").map(|s| s.stage).collect()
    }

    /// 0 when every stage halted and every output was classified, else 1.
    pub fn exit_code(&self) -> i32 {
        if self.failed_stages().is_empty() && self.outputs.iter().all(|o| o.error.is_none()) {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn render_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "program: {}", self.program);
        if !self.inputs.is_empty() {
            let inputs: Vec<String> = self.inputs.iter().map(|i| format!("{}={}", i.name, i.value)).collect();
            let _ = writeln!(s, "inputs: {}", inputs.join(", "));
        }
        let sched: Vec<String> = self.schedule.iter().map(u64::to_string).collect();
        let _ = writeln!(s, "stages: {}", sched.join(","));

        s.push_str("\noutputs\n");
        for o in &self.outputs {
            let tag = if o.heuristic { " [HEURISTIC]" } else { "" };
            let _ = writeln!(s, "  {}: {}{tag}", o.var, o.summary);
            match (&o.standard_part, &o.no_standard_part) {
                (Some(v), _) => {
                    let _ = writeln!(s, "    standard part: {v}{tag}");
                }
                (None, Some(reason)) => {
                    let _ = writeln!(s, "    standard part: none ({reason})");
                }
                _ => {}
            }
            if let Some(d) = &o.detail {
                let _ = writeln!(s, "    {d}");
            }
            for c in &o.candidates {
                let _ = writeln!(s, "    candidate: {} -> {} = {}", c.name, o.var, c.value);
            }
            if let Some(e) = &o.error {
                let _ = writeln!(s, "    error: {e}");
            }
        }

        s.push_str("\nstages\n");
        let names: Vec<&String> = self.stages.first().map(|r| r.outputs.keys().collect()).unwrap_or_default();
        let mut header = format!("  {:>5}  {:>8}", "n", "dt");
        for n in &names {
            let _ = write!(header, "  {n:>10}");
        }
        let _ = write!(header, "  {:>10}  {:>7}  {:>6}  status", "cost", "queries", "iters");
        let _ = writeln!(s, "{header}");
        for r in &self.stages {
            let mut line = format!("  {:>5}  {:>8}", r.stage, r.dt);
            for n in &names {
                let v = r.outputs[*n].as_deref().unwrap_or("-");
                let _ = write!(line, "  {v:>10}");
            }
            let _ = write!(line, "  {:>10}  {:>7}  {:>6}  {}", r.cost, r.oracle_queries, r.iterations, r.status);
            let _ = writeln!(s, "{line}");
        }

        if let Some(st) = &self.supertask {
            s.push_str("\nsupertask\n");
            let _ = writeln!(s, "  metered: {} ({})", st.metered.class, st.metered.detail);
            if let Some(e) = &st.energy {
                let _ = writeln!(
                    s,
                    "  energy {}: {} ({}; never above initial: {})",
                    e.var, e.class, e.detail, e.within_initial
                );
            }
            let _ = writeln!(s, "  note: {}", st.note);
        }
        if !self.warnings.is_empty() {
            s.push_str("\nwarnings\n");
            for w in &self.warnings {
                let _ = writeln!(s, "  {w}");
            }
        }
        s
    }
}
