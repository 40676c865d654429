//! Batch-evaluation policy: per-record failures and suspensions score zero
//! with a note and never abort the batch.

use std::sync::Arc;

use serde_json::json;

use agentspec_core::backend::MockScript;
use agentspec_core::engine::Environment;
use agentspec_core::harness::corpus::{ask_user_document, simple_prompt_document};
use agentspec_core::harness::{evaluate_dataset, EvalRecord, HarnessError, Metric};

fn record(id: &str, input: (&str, &str), expected: &str) -> EvalRecord {
    let mut inputs = serde_json::Map::new();
    inputs.insert(input.0.to_string(), json!(input.1));
    EvalRecord {
        id: id.to_string(),
        inputs,
        expected: expected.to_string(),
    }
}

#[test]
fn all_matched_records_mean_one() {
    let document = Arc::new(simple_prompt_document());
    let records = vec![
        record("r1", ("prompt", "say alpha"), "alpha"),
        record("r2", ("prompt", "say beta"), "beta"),
        record("r3", ("prompt", "say gamma"), "gamma"),
    ];
    let script = r#"{"rules": [
        {"when": {"contains": "alpha"}, "respond": {"text": "alpha"}},
        {"when": {"contains": "beta"}, "respond": {"text": "beta"}},
        {"when": {"contains": "gamma"}, "respond": {"text": "gamma"}}
    ]}"#;
    let report = evaluate_dataset(&document, &"flow".into(), &records, Metric::ExactMatch, || {
        Environment::mock(MockScript::from_json(script).unwrap())
    })
    .unwrap();
    assert_eq!(report.metric_mean, 1.0);
    assert_eq!(report.n, 3);
    assert!(report.records.iter().all(|r| r.note.is_none()));
}

#[test]
fn suspended_runs_score_zero_with_a_note() {
    // the ask_user flow suspends awaiting user input; batch eval has no
    // human in the loop
    let document = Arc::new(ask_user_document());
    let records = vec![record("r1", ("country", "France"), "Paris")];
    let report = evaluate_dataset(&document, &"flow".into(), &records, Metric::ExactMatch, || {
        Environment::mock(MockScript::default())
    })
    .unwrap();
    assert_eq!(report.records[0].score, 0.0);
    assert_eq!(report.records[0].note.as_deref(), Some("suspended"));
    assert_eq!(report.metric_mean, 0.0);
}

#[test]
fn failing_runs_score_zero_and_do_not_abort() {
    let document = Arc::new(simple_prompt_document());
    let records = vec![
        // no rule matches -> the backend errors on this record
        record("r1", ("prompt", "unmatched"), "x"),
        record("r2", ("prompt", "say alpha"), "alpha"),
    ];
    let script = r#"{"rules": [{"when": {"contains": "alpha"}, "respond": {"text": "alpha"}}]}"#;
    let report = evaluate_dataset(&document, &"flow".into(), &records, Metric::ExactMatch, || {
        Environment::mock(MockScript::from_json(script).unwrap())
    })
    .unwrap();
    assert_eq!(report.records[0].score, 0.0);
    assert!(report.records[0]
        .note
        .as_deref()
        .unwrap()
        .starts_with("error:"));
    assert_eq!(report.records[1].score, 1.0);
    assert_eq!(report.metric_mean, 0.5);
}

#[test]
fn empty_datasets_are_rejected() {
    let document = Arc::new(simple_prompt_document());
    let err = evaluate_dataset(&document, &"flow".into(), &[], Metric::ExactMatch, || {
        Environment::mock(MockScript::default())
    })
    .unwrap_err();
    assert!(matches!(err, HarnessError::EmptyInput));
}
