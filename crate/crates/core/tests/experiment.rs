use std::path::Path;

use hmc_lab::experiment::{parse_config, run_experiment, run_scaling_study, ScalingConfig, Task};
use hmc_lab::integrators::oracle_step_count;
use hmc_lab::Error;

#[test]
fn scaling_ledger_matches_the_loop_bound() {
    let cfg = ScalingConfig::standard("leapfrog", vec![4, 8], 0.05, 16, 3);
    let result = run_scaling_study(&cfg).unwrap();
    for row in &result.rows {
        let pot = cfg.family.build(row.dim).unwrap();
        let t = hmc_lab::Potential::bounds(&pot).default_time();
        assert_eq!(row.oracle_steps, oracle_step_count(t, row.theta, 2));
        let per_chain = row.kernel_steps as u64 * row.oracle_steps as u64 * 2;
        assert_eq!(row.gradient_evals, per_chain);
        assert_eq!(row.ledger_gradient_evals, per_chain * cfg.replicas as u64);
        assert!(row.w1 <= cfg.epsilon);
    }
}

#[test]
fn scaling_is_reproducible() {
    let cfg = ScalingConfig::standard("euler", vec![4], 0.05, 8, 11);
    assert_eq!(
        run_scaling_study(&cfg).unwrap(),
        run_scaling_study(&cfg).unwrap()
    );
}

#[test]
fn config_errors_carry_the_field_path() {
    let err = parse_config(r#"{"task": {"drift": {"radii": [1, "x"]}}}"#).unwrap_err();
    match err {
        Error::Config { path, .. } => assert!(path.starts_with("task.drift.radii"), "{path}"),
        other => panic!("unexpected error {other}"),
    }
    assert!(parse_config(r#"{"task": {"certify": {}}, "extra": 1}"#).is_err());
    assert!(parse_config(r#"{"task": {"teleport": {}}}"#).is_err());
}

#[test]
fn certify_defaults_fill_in() {
    let cfg = parse_config(r#"{"task": {"certify": {}}}"#).unwrap();
    assert_eq!(
        cfg.task,
        Task::Certify {
            time: None,
            trials: 1000,
            tol: 1e-10
        }
    );
    assert_eq!(cfg.metric.epsilon, 0.005);
}

#[test]
fn studies_require_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        r#"{{"task": {{"certify": {{"trials": 5}}}}, "target": {{"kind": "gaussian", "eigenvalues": [1]}},
            "output": {{"dir": "{}"}}}}"#,
        dir.path().display()
    );
    let cfg = parse_config(&text).unwrap();
    assert!(run_experiment(&cfg, Path::new(".")).is_err());
}

#[test]
fn sample_task_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        r#"{{
            "task": {{"sample": {{"x0": [0.5, 0.5]}}}},
            "target": {{"kind": "gaussian", "eigenvalues": [1, 4]}},
            "kernel": {{"kind": "metropolis", "integrator": {{"scheme": "leapfrog", "theta": 0.01}}}},
            "run": {{"steps": 30, "seed": 2}},
            "output": {{"dir": "{}"}}
        }}"#,
        dir.path().display()
    );
    let outcome = run_experiment(&parse_config(&text).unwrap(), Path::new(".")).unwrap();
    assert!(outcome.pass);
    assert_eq!(outcome.files.len(), 2);
    let ledger = &outcome.summary["ledger"];
    let n = oracle_step_count(1.0 / (2.0 * 2.0f64.sqrt()) / 4.0, 0.01, 2) as u64;
    assert_eq!(ledger["gradient_evals"].as_u64().unwrap(), 30 * n * 2);
    let csv = std::fs::read_to_string(dir.path().join("sample.csv")).unwrap();
    assert_eq!(csv.lines().count(), 32);
}

#[test]
fn shipped_example_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "json") {
            hmc_lab::experiment::load_config(&path)
                .unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            seen += 1;
        }
    }
    assert!(seen >= 6);
}
