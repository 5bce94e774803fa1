use std::path::{Path, PathBuf};

use whdt::cli::{cmd_corpus, cmd_run, parse_schedule, run_source, CliError, RunConfig};

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn copy_corpus(to: &Path) {
    for entry in std::fs::read_dir(corpus_dir()).unwrap() {
        let path = entry.unwrap().path();
        std::fs::copy(&path, to.join(path.file_name().unwrap())).unwrap();
    }
}

#[test]
fn shipped_corpus_passes() {
    let summary = cmd_corpus(&corpus_dir(), &RunConfig::default()).unwrap();
    assert!(summary.all_passed(), "{}", summary.render_text());
    assert_eq!(summary.exit_code(), 0);
}

#[test]
fn corrupted_expectation_shows_a_diff() {
    let dir = tempfile::tempdir().unwrap();
    copy_corpus(dir.path());
    let path = dir.path().join("floor.whdt");
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replace("eventually-constant(3)", "eventually-constant(4)")).unwrap();

    let summary = cmd_corpus(dir.path(), &RunConfig::default()).unwrap();
    assert_eq!(summary.exit_code(), 1);
    let bad: Vec<_> = summary.entries.iter().filter(|e| !e.passed).collect();
    assert_eq!(bad.len(), 1);
    assert_eq!(bad[0].file, "floor.whdt");
    assert_eq!(
        bad[0].diffs,
        [
            "- expect y: eventually-constant(4) from stage 0",
            "+ expect y: eventually-constant(3) from stage 0"
        ]
    );
    assert!(summary.render_text().contains("FAIL"));
}

#[test]
fn empty_directory_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let err = cmd_corpus(dir.path(), &RunConfig::default()).unwrap_err();
    assert!(matches!(err, CliError::Corpus(_)));
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn file_without_expectations_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("a.whdt"), "input; output y; y := 1").unwrap();
    assert!(cmd_corpus(dir.path(), &RunConfig::default()).is_err());
}

#[test]
fn json_report_uses_strings_for_numbers() {
    let config = RunConfig {
        inputs: vec!["x=-7/2".into()],
        ..RunConfig::default()
    };
    let report = run_source("t", "input x; output y; y := x * dt", &config).unwrap();
    let v: serde_json::Value = serde_json::from_str(&report.to_json()).unwrap();
    assert_eq!(v["inputs"][0]["value"], "-7/2");
    assert_eq!(v["stages"][1]["dt"], "1/2");
    assert_eq!(v["stages"][1]["outputs"]["y"], "-7/4");
    assert_eq!(v["outputs"][0]["class"], "convergent");
    assert_eq!(v["outputs"][0]["heuristic"], true);
}

#[test]
fn run_reports_missing_oracle_as_usage_error() {
    let dir = corpus_dir();
    let config = RunConfig {
        inputs: vec!["7".into()],
        ..RunConfig::default()
    };
    let err = cmd_run(&dir.join("decide.whdt"), &config).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("--oracle A="));
}

#[test]
fn failing_stage_sets_exit_code() {
    let config = RunConfig {
        fuel: 200,
        schedule: parse_schedule("0..7").unwrap(),
        ..RunConfig::default()
    };
    let report = run_source("t", "input; output x; x := 0; while x >= 0 do x := x + 1", &config).unwrap();
    assert_eq!(report.exit_code(), 1);
    assert_eq!(report.failed_stages().len(), 8);
}
