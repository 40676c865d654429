//! Conformance-suite runner and dataset evaluation harness.
//!
//! A conformance case is a directory holding a spec document, a fully
//! scripted scenario, the expected outcome, and a golden trace; running it
//! requires no external I/O. The evaluation side runs line-delimited JSON
//! records through a document and aggregates metric and latency statistics.

pub mod conformance;
pub mod corpus;
pub mod eval;
pub mod metrics;

pub use conformance::{
    run_conformance_case, run_conformance_dir, run_scenario, stub_registry, CaseOutcome,
    CaseResult, ResumeSpec, Scenario, StubBehavior,
};
pub use eval::{
    evaluate_dataset, load_records, prediction_from_outputs, render_report_table, EvalRecord,
    EvalReport, Metric, RecordResult,
};
pub use metrics::{exact_match, latency_stats, token_f1};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("empty input")]
    EmptyInput,
    #[error("cannot load case file `{path}`: {reason}")]
    CaseLoad { path: String, reason: String },
    #[error("invalid dataset line {line}: {reason}")]
    InvalidDataset { line: usize, reason: String },
    #[error(transparent)]
    Document(#[from] crate::document::DocumentError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
