//! End-to-end checks of the binary: exit codes are the machine contract,
//! and Validate/Inspect/Convert stdout must be deterministic.

use std::path::PathBuf;
use std::process::{Command, Output};

fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .expect("workspace root")
}

fn agentspec(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_agentspec"))
        .current_dir(workspace_root())
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).to_string()
}

#[test]
fn validate_clean_document_exits_zero() {
    let output = agentspec(&["validate", "conformance/simple_prompt/spec.json"]);
    assert_eq!(output.status.code(), Some(0));
    assert_eq!(stdout(&output), "ok\n");
}

#[test]
fn validate_defect_prints_the_code_and_exits_one() {
    let output = agentspec(&["validate", "defects/duplicate_branch_edge.json"]);
    assert_eq!(output.status.code(), Some(1));
    assert!(stdout(&output).contains("ERROR CF_DUPLICATE_BRANCH dup_edge:"));
}

#[test]
fn validate_missing_file_exits_two() {
    let output = agentspec(&["validate", "no/such/file.json"]);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn run_with_script_prints_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("hello.mock");
    std::fs::write(
        &script,
        r#"{"rules": [{"when": {"contains": "hi"}, "respond": {"text": "hello"}}]}"#,
    )
    .unwrap();
    let trace = dir.path().join("trace.ldjson");
    let output = agentspec(&[
        "run",
        "conformance/simple_prompt/spec.json",
        "--input",
        "prompt=hi",
        "--script",
        script.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(0));
    assert_eq!(stdout(&output), "{\"llm_output\":\"hello\"}\n");
    let trace_text = std::fs::read_to_string(trace).unwrap();
    assert!(trace_text.lines().count() >= 8);
    assert!(trace_text.contains(r#""event":"node_entered""#));
}

#[test]
fn non_interactive_suspension_exits_three_with_status_json() {
    let output = agentspec(&[
        "run",
        "conformance/ask_user/spec.json",
        "--input",
        "country=France",
    ]);
    assert_eq!(output.status.code(), Some(3));
    let status: serde_json::Value = serde_json::from_str(stdout(&output).trim()).unwrap();
    assert_eq!(status["status"], "awaiting_user_input");
    assert_eq!(status["prompt"], "What is the capital of France?");
}

#[test]
fn interactive_chat_loop_resumes_from_stdin() {
    let mut child = Command::new(env!("CARGO_BIN_EXE_agentspec"))
        .current_dir(workspace_root())
        .args([
            "run",
            "conformance/ask_user/spec.json",
            "--input",
            "country=France",
            "--interactive",
        ])
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .spawn()
        .unwrap();
    use std::io::Write;
    child
        .stdin
        .as_mut()
        .unwrap()
        .write_all(b"Paris\n")
        .unwrap();
    let output = child.wait_with_output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    let text = String::from_utf8_lossy(&output.stdout);
    assert!(text.contains("What is the capital of France?"));
    assert!(text.contains("{\"reply\":\"Paris\"}"));
}

#[test]
fn runtime_failures_exit_four() {
    // empty script exhausts immediately
    let dir = tempfile::tempdir().unwrap();
    let script = dir.path().join("empty.mock");
    std::fs::write(&script, r#"{"rules": []}"#).unwrap();
    let output = agentspec(&[
        "run",
        "conformance/simple_prompt/spec.json",
        "--input",
        "prompt=hi",
        "--script",
        script.to_str().unwrap(),
    ]);
    assert_eq!(output.status.code(), Some(4));
}

#[test]
fn conformance_suite_passes_and_exits_zero() {
    let output = agentspec(&["conformance", "conformance"]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout(&output);
    assert!(text.contains("PASS simple_prompt"));
    assert!(text.contains("16/16 cases passed"));
}

#[test]
fn convert_round_trips_canonical_bytes() {
    let canonical =
        std::fs::read_to_string(workspace_root().join("conformance/simple_prompt/spec.json"))
            .unwrap();
    let to_yaml = agentspec(&["convert", "conformance/simple_prompt/spec.json", "--to", "yaml"]);
    assert_eq!(to_yaml.status.code(), Some(0));
    let dir = tempfile::tempdir().unwrap();
    let yaml_path = dir.path().join("doc.yaml");
    std::fs::write(&yaml_path, stdout(&to_yaml)).unwrap();
    let back = agentspec(&["convert", yaml_path.to_str().unwrap(), "--to", "json"]);
    assert_eq!(back.status.code(), Some(0));
    assert_eq!(stdout(&back), canonical);
}

#[test]
fn inspect_is_deterministic_and_dot_mirrors_edge_styles() {
    let first = agentspec(&["inspect", "conformance/simple_prompt/spec.json"]);
    let second = agentspec(&["inspect", "conformance/simple_prompt/spec.json"]);
    assert_eq!(stdout(&first), stdout(&second));
    assert!(stdout(&first).contains("agentspec_version: 25.4.1"));

    let dot = agentspec(&["inspect", "conformance/simple_prompt/spec.json", "--dot"]);
    let text = stdout(&dot);
    assert!(text.starts_with("digraph agentspec {"));
    assert!(text.contains("\"start\" -> \"llm_node\";"));
    assert!(text.contains("[style=dashed, label=\"llm_output→llm_output\"];"));
}

#[test]
fn bench_produces_a_stable_score_column() {
    let run = || {
        let output = agentspec(&[
            "bench",
            "conformance/simple_prompt/spec.json",
            "--dataset",
            "data/toy_qa.jsonl",
            "--script",
            "data/toy_qa_script.json",
            "--setup",
            "toy_qa",
        ]);
        assert_eq!(output.status.code(), Some(0));
        stdout(&output)
    };
    let first = run();
    let second = run();
    assert!(first.contains("0.9000"));
    let score = |text: &str| {
        text.lines()
            .nth(1)
            .unwrap()
            .split_whitespace()
            .nth(2)
            .unwrap()
            .to_string()
    };
    assert_eq!(score(&first), score(&second));
}
