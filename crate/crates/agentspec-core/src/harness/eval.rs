//! Dataset evaluation: run records through a document, score predictions,
//! and aggregate metric and latency statistics.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::metrics::{exact_match, latency_stats, token_f1};
use super::HarnessError;
use crate::document::SpecDocument;
use crate::engine::{Environment, ExecutionSession, ExecutionStatus, SessionOptions};
use crate::model::{value_to_text, ComponentId};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    ExactMatch,
    TokenF1,
}

impl Metric {
    pub fn as_str(self) -> &'static str {
        match self {
            Metric::ExactMatch => "exact_match",
            Metric::TokenF1 => "token_f1",
        }
    }

    pub fn parse(s: &str) -> Option<Metric> {
        match s {
            "exact_match" | "exact-match" => Some(Metric::ExactMatch),
            "token_f1" | "token-f1" => Some(Metric::TokenF1),
            _ => None,
        }
    }

    pub fn score(self, prediction: &str, gold: &str) -> f64 {
        match self {
            Metric::ExactMatch => exact_match(prediction, gold),
            Metric::TokenF1 => token_f1(prediction, gold),
        }
    }
}

/// One dataset record: inputs for the entry component and the expected
/// answer string.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct EvalRecord {
    pub id: String,
    pub inputs: Map<String, Value>,
    pub expected: String,
}

/// Parses a line-delimited JSON dataset; blank lines are skipped.
pub fn load_records(text: &str) -> Result<Vec<EvalRecord>, HarnessError> {
    let mut records = Vec::new();
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: EvalRecord =
            serde_json::from_str(line).map_err(|e| HarnessError::InvalidDataset {
                line: index + 1,
                reason: e.to_string(),
            })?;
        records.push(record);
    }
    Ok(records)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RecordResult {
    pub id: String,
    pub prediction: Option<String>,
    pub score: f64,
    pub latency_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub metric: String,
    pub metric_mean: f64,
    pub latency_mean: f64,
    pub latency_std: f64,
    pub n: usize,
    pub records: Vec<RecordResult>,
}

/// The answer string extracted from finished outputs: the `answer` output if
/// declared, the single output otherwise, else the whole map as JSON.
pub fn prediction_from_outputs(outputs: &BTreeMap<String, Value>) -> String {
    if let Some(answer) = outputs.get("answer") {
        return value_to_text(answer);
    }
    if outputs.len() == 1 {
        return value_to_text(outputs.values().next().expect("len checked"));
    }
    let object: Map<String, Value> = outputs
        .iter()
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect();
    Value::Object(object).to_string()
}

/// Runs every record through a fresh session and aggregates the metric mean
/// plus latency mean and sample standard deviation. Per-record failures and
/// suspensions score zero with a note; they never abort the batch.
pub fn evaluate_dataset(
    document: &Arc<SpecDocument>,
    entry: &ComponentId,
    records: &[EvalRecord],
    metric: Metric,
    mut make_env: impl FnMut() -> Environment,
) -> Result<EvalReport, HarnessError> {
    if records.is_empty() {
        return Err(HarnessError::EmptyInput);
    }
    let mut results = Vec::with_capacity(records.len());
    for record in records {
        let started = Instant::now();
        let inputs: BTreeMap<String, Value> = record
            .inputs
            .iter()
            .map(|(k, v)| (k.clone(), v.clone()))
            .collect();
        let outcome = ExecutionSession::new(
            Arc::clone(document),
            entry,
            inputs,
            make_env(),
            SessionOptions::default(),
        )
        .and_then(|mut session| session.run());
        let latency_seconds = started.elapsed().as_secs_f64();
        let result = match outcome {
            Ok(ExecutionStatus::Finished { outputs }) => {
                let prediction = prediction_from_outputs(&outputs);
                let score = metric.score(&prediction, &record.expected);
                RecordResult {
                    id: record.id.clone(),
                    prediction: Some(prediction),
                    score,
                    latency_seconds,
                    note: None,
                }
            }
            Ok(_) => RecordResult {
                id: record.id.clone(),
                prediction: None,
                score: 0.0,
                latency_seconds,
                note: Some("suspended".to_string()),
            },
            Err(e) => RecordResult {
                id: record.id.clone(),
                prediction: None,
                score: 0.0,
                latency_seconds,
                note: Some(format!("error: {}", e.code())),
            },
        };
        results.push(result);
    }

    let metric_mean = results.iter().map(|r| r.score).sum::<f64>() / results.len() as f64;
    let latencies: Vec<f64> = results.iter().map(|r| r.latency_seconds).collect();
    let (latency_mean, latency_std) = latency_stats(&latencies)?;
    Ok(EvalReport {
        metric: metric.as_str().to_string(),
        metric_mean,
        latency_mean,
        latency_std,
        n: results.len(),
        records: results,
    })
}

/// Renders the aggregate as an aligned-column table: one row per setup with
/// the metric score and time per query as mean ± standard deviation.
pub fn render_report_table(report: &EvalReport, setup: &str) -> String {
    let headers = ["setup", "metric", "score", "time/query (s)"];
    let row = [
        setup.to_string(),
        report.metric.clone(),
        format!("{:.4}", report.metric_mean),
        format!("{:.3} ± {:.3}", report.latency_mean, report.latency_std),
    ];
    let widths: Vec<usize> = headers
        .iter()
        .zip(&row)
        .map(|(h, r)| h.len().max(r.len()))
        .collect();
    let mut out = String::new();
    for (index, header) in headers.iter().enumerate() {
        out.push_str(&format!("{:<width$}  ", header, width = widths[index]));
    }
    out.push('\n');
    for (index, cell) in row.iter().enumerate() {
        out.push_str(&format!("{:<width$}  ", cell, width = widths[index]));
    }
    out.push('\n');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_parse_from_line_delimited_json() {
        let text = r#"{"id":"r1","inputs":{"prompt":"hi"},"expected":"hello"}

{"id":"r2","inputs":{"prompt":"yo"},"expected":"hey"}
"#;
        let records = load_records(text).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].id, "r1");
        assert!(load_records("{bad json").is_err());
    }

    #[test]
    fn prediction_extraction_prefers_answer_then_single() {
        let mut outputs = BTreeMap::new();
        outputs.insert("answer".to_string(), serde_json::json!("Paris"));
        outputs.insert("debug".to_string(), serde_json::json!(1));
        assert_eq!(prediction_from_outputs(&outputs), "Paris");

        let mut single = BTreeMap::new();
        single.insert("llm_output".to_string(), serde_json::json!("hey"));
        assert_eq!(prediction_from_outputs(&single), "hey");

        let mut multi = BTreeMap::new();
        multi.insert("a".to_string(), serde_json::json!(1));
        multi.insert("b".to_string(), serde_json::json!(2));
        assert_eq!(prediction_from_outputs(&multi), r#"{"a":1,"b":2}"#);
    }

    #[test]
    fn table_shape() {
        let report = EvalReport {
            metric: "exact_match".into(),
            metric_mean: 0.9,
            latency_mean: 0.002,
            latency_std: 0.001,
            n: 20,
            records: vec![],
        };
        let table = render_report_table(&report, "toy_qa");
        let mut lines = table.lines();
        let header = lines.next().unwrap();
        assert!(header.contains("setup"));
        assert!(header.contains("metric"));
        assert!(header.contains("score"));
        assert!(header.contains("time/query (s)"));
        let row = lines.next().unwrap();
        assert!(row.contains("0.9000"));
        assert!(row.contains("±"));
    }
}
