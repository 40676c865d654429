//! Acceptance suite: one test per criterion, each printing a pass/fail line.
//! Everything runs against in-process backends and the checked-in corpus;
//! no network is touched.

mod common;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use serde_json::{json, Map, Value};

use agentspec_core::backend::{MockScript, ToolRegistry};
use agentspec_core::engine::{
    compile_name_based, Environment, ExecutionSession, ExecutionStatus, SessionOptions,
};
use agentspec_core::harness::corpus::{
    corpus_cases, map_document, seeded_defects, simple_prompt_document, toy_qa_records_text,
    toy_qa_script_text,
};
use agentspec_core::harness::{
    evaluate_dataset, exact_match, latency_stats, load_records, render_report_table,
    run_conformance_case, token_f1, Metric,
};
use agentspec_core::io::{deserialize, serialize, Format};
use agentspec_core::validate::{analyze_text, validate_document};

fn workspace_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../..")
        .canonicalize()
        .expect("workspace root")
}

fn pass(criterion: &str) {
    println!("acceptance {criterion}: PASS");
}

// 1. Round-trip identity over the whole corpus, with byte determinism.
#[test]
fn acceptance_01_round_trip_identity() {
    let cases = corpus_cases();
    assert!(cases.len() >= 12, "corpus must hold at least 12 documents");

    let mut types = std::collections::BTreeSet::new();
    for case in &cases {
        for component in case.document.components() {
            types.insert(component.component_type().to_string());
        }
    }
    for required in [
        "StartNode",
        "EndNode",
        "LlmNode",
        "ApiNode",
        "AgentNode",
        "FlowNode",
        "MapNode",
        "BranchingNode",
        "ToolNode",
        "InputMessageNode",
        "OutputMessageNode",
        "ServerTool",
        "ClientTool",
        "RemoteTool",
        "MCPTool",
    ] {
        assert!(types.contains(required), "corpus must cover {required}");
    }

    for case in &cases {
        let first = serialize(&case.document, Format::Json);
        let second = serialize(&case.document, Format::Json);
        assert_eq!(first, second, "case {}: serialize must be byte-deterministic", case.name);
        let parsed = deserialize(&first, Format::Json)
            .unwrap_or_else(|e| panic!("case {}: {e}", case.name));
        assert_eq!(
            parsed.document, case.document,
            "case {}: deserialize(serialize(d)) must equal d",
            case.name
        );
    }
    pass("1 (round-trip identity over the conformance corpus)");
}

// 2. The golden prompting flow: programmatic construction serializes
//    byte-for-byte to the checked-in file and executes as scripted.
#[test]
fn acceptance_02_golden_prompt_flow() {
    let document = simple_prompt_document();
    let golden_path = workspace_root().join("conformance/simple_prompt/spec.json");
    let golden = std::fs::read_to_string(golden_path).expect("golden spec exists");
    assert_eq!(
        serialize(&document, Format::Json),
        golden,
        "programmatic construction must serialize byte-for-byte to the golden file"
    );

    let script = MockScript::from_json(
        r#"{"rules": [{"when": {"contains": "hi"}, "respond": {"text": "hello"}}]}"#,
    )
    .unwrap();
    let mut inputs = BTreeMap::new();
    inputs.insert("prompt".to_string(), json!("hi"));
    let (_, status) = ExecutionSession::start(
        Arc::new(document),
        &"flow".into(),
        inputs,
        Environment::mock(script),
        SessionOptions::default(),
    )
    .unwrap();
    let mut expected = BTreeMap::new();
    expected.insert("llm_output".to_string(), json!("hello"));
    assert_eq!(status, ExecutionStatus::Finished { outputs: expected });
    pass("2 (golden prompting flow: bytes and execution)");
}

// 3. Seeded defects: 100% detection of the planted diagnostic at the
//    planted component, no other errors in mutants, zero diagnostics on the
//    clean corpus.
#[test]
fn acceptance_03_seeded_defect_detection() {
    let defects = seeded_defects();
    assert!(defects.len() >= 10, "need at least 10 mutated documents");
    for defect in &defects {
        let diagnostics = analyze_text(&defect.text, Format::Json);
        let errors: Vec<_> = diagnostics.iter().filter(|d| d.is_error()).collect();
        assert_eq!(
            errors.len(),
            1,
            "{}: expected exactly the planted error, got {diagnostics:?}",
            defect.file_name
        );
        assert_eq!(errors[0].code, defect.code, "{}", defect.file_name);
        assert_eq!(
            errors[0].component_id, defect.component_id,
            "{}",
            defect.file_name
        );
    }
    for case in corpus_cases() {
        assert_eq!(
            validate_document(&case.document),
            vec![],
            "clean corpus must produce no diagnostics: {}",
            case.name
        );
    }
    pass("3 (seeded-defect detection: 100% planted, 0 false codes)");
}

// 4. Converge-and-loop semantics against byte-exact golden traces.
#[test]
fn acceptance_04_converge_and_self_loop_goldens() {
    let root = workspace_root().join("conformance");
    for case in ["converge_left", "converge_right", "self_loop"] {
        let result = run_conformance_case(&root.join(case)).unwrap();
        assert!(result.passed, "{case}: {:?}", result.detail);
    }
    // the loop's input is strictly updated across at least three iterations
    let trace = std::fs::read_to_string(root.join("self_loop/trace.golden")).unwrap();
    let reads: Vec<i64> = trace
        .lines()
        .map(|line| serde_json::from_str::<Value>(line).unwrap())
        .filter(|event| {
            event["event"] == "tool_invoked" && event["node_id"] == "inc"
        })
        .map(|event| event["detail"]["args"]["x"].as_i64().unwrap())
        .collect();
    assert!(reads.len() >= 3, "at least three loop iterations");
    for pair in reads.windows(2) {
        assert!(pair[1] > pair[0], "input must strictly update: {reads:?}");
    }
    pass("4 (branch convergence and self-loop recency, golden traces)");
}

// 5. Name-based and compiled-explicit flows finish with identical outputs
//    on 200 random acyclic flows.
#[test]
fn acceptance_05_name_based_explicit_equivalence() {
    let mut rng = StdRng::seed_from_u64(424242);
    for round in 0..200 {
        let document = common::random_name_based_flow(&mut rng);
        let compiled = compile_name_based(&document, &"flow".into())
            .unwrap_or_else(|e| panic!("round {round}: {e}"));
        assert!(
            validate_document(&compiled).is_empty(),
            "round {round}: compiled flow must validate clean"
        );
        let original = common::run_to_finish(&Arc::new(document), "flow", common::pool_inputs())
            .unwrap_or_else(|e| panic!("round {round}: {e}"));
        let explicit = common::run_to_finish(&Arc::new(compiled), "flow", common::pool_inputs())
            .unwrap_or_else(|e| panic!("round {round}: {e}"));
        assert_eq!(original, explicit, "round {round}");
    }
    pass("5 (name-based/explicit equivalence on 200 random flows)");
}

// 6. The agent loop goldens: server tool, client tool suspend/resume, final
//    outputs, plain-text suspension, and the turn budget — deterministic.
#[test]
fn acceptance_06_agent_loop_goldens() {
    let root = workspace_root().join("conformance");
    for case in [
        "agent_server_tool",
        "agent_client_tool",
        "agent_chat",
        "agent_max_turns",
        "agent_in_flow",
    ] {
        for attempt in 0..2 {
            let result = run_conformance_case(&root.join(case)).unwrap();
            assert!(
                result.passed,
                "{case} (attempt {attempt}): {:?}",
                result.detail
            );
        }
    }
    pass("6 (agent loop goldens, deterministic across reruns)");
}

// 7. Map outputs equal running the subflow standalone per element, for 50
//    random integer arrays.
#[test]
fn acceptance_07_map_against_per_element_oracle() {
    let document = Arc::new(map_document());
    let registry = || {
        let mut registry = ToolRegistry::new();
        registry.register("double", |args: &Map<String, Value>| {
            let x = args.get("x").and_then(Value::as_i64).ok_or("missing x")?;
            let mut out = Map::new();
            out.insert("y".into(), json!(x * 2));
            Ok(out)
        });
        registry
    };

    let mut rng = StdRng::seed_from_u64(99);
    for round in 0..50 {
        let length = rng.gen_range(0..=10);
        let elements: Vec<i64> = (0..length).map(|_| rng.gen_range(-100..100)).collect();

        // oracle: run the inner flow standalone, one element at a time
        let mut expected = Vec::with_capacity(elements.len());
        for element in &elements {
            let mut inputs = BTreeMap::new();
            inputs.insert("x".to_string(), json!(element));
            let env = Environment::mock(MockScript::default()).with_tools(registry());
            let (_, status) = ExecutionSession::start(
                Arc::clone(&document),
                &"double_flow".into(),
                inputs,
                env,
                SessionOptions::default(),
            )
            .unwrap();
            let ExecutionStatus::Finished { outputs } = status else {
                panic!("round {round}: subflow must finish");
            };
            expected.push(outputs.get("y").cloned().unwrap());
        }

        let mut inputs = BTreeMap::new();
        inputs.insert("x".to_string(), json!(elements));
        let env = Environment::mock(MockScript::default()).with_tools(registry());
        let (_, status) = ExecutionSession::start(
            Arc::clone(&document),
            &"flow".into(),
            inputs,
            env,
            SessionOptions::default(),
        )
        .unwrap();
        let ExecutionStatus::Finished { outputs } = status else {
            panic!("round {round}: map flow must finish");
        };
        assert_eq!(
            outputs.get("y"),
            Some(&Value::Array(expected)),
            "round {round}"
        );
    }
    pass("7 (map node equals the per-element oracle on 50 random arrays)");
}

// Independent brute-force oracles for the metric layer.
fn oracle_token_f1(prediction: &str, gold: &str) -> f64 {
    let tokens = |s: &str| -> Vec<String> {
        s.trim()
            .to_lowercase()
            .split_whitespace()
            .map(str::to_string)
            .collect()
    };
    let mut predicted = tokens(prediction);
    let mut golden = tokens(gold);
    predicted.sort();
    golden.sort();
    match (predicted.is_empty(), golden.is_empty()) {
        (true, true) => return 1.0,
        (true, false) | (false, true) => return 0.0,
        _ => {}
    }
    // sorted two-pointer multiset intersection
    let mut overlap = 0usize;
    let (mut i, mut j) = (0usize, 0usize);
    while i < predicted.len() && j < golden.len() {
        match predicted[i].cmp(&golden[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                overlap += 1;
                i += 1;
                j += 1;
            }
        }
    }
    if overlap == 0 {
        return 0.0;
    }
    let p = overlap as f64 / predicted.len() as f64;
    let r = overlap as f64 / golden.len() as f64;
    2.0 * p * r / (p + r)
}

fn oracle_latency_stats(durations: &[f64]) -> (f64, f64) {
    // alternate algebraic route: std^2 = (sum_sq - n * mean^2) / (n - 1)
    let n = durations.len() as f64;
    let sum: f64 = durations.iter().sum();
    let sum_sq: f64 = durations.iter().map(|d| d * d).sum();
    let mean = sum / n;
    if durations.len() == 1 {
        return (mean, 0.0);
    }
    let variance = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
    (mean, variance.sqrt())
}

// 8. Metric implementations match independent oracles.
#[test]
fn acceptance_08_metric_oracles() {
    assert!((token_f1("paris france", "paris") - 0.6667).abs() < 1e-4);
    let (mean, std) = latency_stats(&[3.0, 4.0, 5.0]).unwrap();
    assert!((mean - 4.0).abs() < 1e-12 && (std - 1.0).abs() < 1e-12);

    let mut rng = StdRng::seed_from_u64(2024);
    let alphabet = ["paris", "rome", "tokyo", "blue", "cat", "42"];
    let random_text = |rng: &mut StdRng| -> String {
        let length = rng.gen_range(0..8);
        (0..length)
            .map(|_| alphabet[rng.gen_range(0..alphabet.len())])
            .collect::<Vec<_>>()
            .join(" ")
    };
    for round in 0..100 {
        let prediction = random_text(&mut rng);
        let gold = random_text(&mut rng);
        let ours = token_f1(&prediction, &gold);
        let oracle = oracle_token_f1(&prediction, &gold);
        assert!(
            (ours - oracle).abs() < 1e-9,
            "round {round}: f1({prediction:?}, {gold:?}) = {ours} vs oracle {oracle}"
        );
        assert!((0.0..=1.0).contains(&ours), "f1 must stay in [0,1]");
        // single-token pairs coincide with exact match
        if prediction.split_whitespace().count() == 1 && gold.split_whitespace().count() == 1 {
            assert_eq!(ours, exact_match(&prediction, &gold));
        }

        let sample_count = rng.gen_range(1..=20);
        let durations: Vec<f64> = (0..sample_count).map(|_| rng.gen_range(0.0..30.0)).collect();
        let (mean, std) = latency_stats(&durations).unwrap();
        let (oracle_mean, oracle_std) = oracle_latency_stats(&durations);
        assert!((mean - oracle_mean).abs() < 1e-9, "round {round}");
        assert!((std - oracle_std).abs() < 1e-9, "round {round}");
    }
    pass("8 (token F1 and latency statistics match brute-force oracles)");
}

// 9. The bundled toy benchmark: scores are bit-identical across runs and
//    the report table carries the setup / metric / time mean±std shape.
#[test]
fn acceptance_09_toy_benchmark_report() {
    let records = load_records(&toy_qa_records_text()).unwrap();
    assert_eq!(records.len(), 20);
    // the checked-in files match the builders
    let data_dir = workspace_root().join("data");
    assert_eq!(
        std::fs::read_to_string(data_dir.join("toy_qa.jsonl")).unwrap(),
        toy_qa_records_text()
    );
    assert_eq!(
        std::fs::read_to_string(data_dir.join("toy_qa_script.json")).unwrap(),
        toy_qa_script_text()
    );

    let document = Arc::new(simple_prompt_document());
    let run = |metric: Metric| {
        evaluate_dataset(&document, &"flow".into(), &records, metric, || {
            Environment::mock(MockScript::from_json(&toy_qa_script_text()).unwrap())
        })
        .unwrap()
    };
    let first = run(Metric::ExactMatch);
    let second = run(Metric::ExactMatch);
    let scores = |report: &agentspec_core::harness::EvalReport| -> Vec<String> {
        report
            .records
            .iter()
            .map(|r| format!("{:.4}", r.score))
            .collect()
    };
    assert_eq!(scores(&first), scores(&second), "score column must be bit-identical");
    assert!((first.metric_mean - 0.9).abs() < 1e-12);
    assert_eq!(first.n, 20);

    let f1 = run(Metric::TokenF1);
    let expected_f1 = (18.0 + 2.0 / 3.0 + 0.8) / 20.0;
    assert!((f1.metric_mean - expected_f1).abs() < 1e-9);

    let table = render_report_table(&first, "toy_qa");
    let header = table.lines().next().unwrap();
    for column in ["setup", "metric", "score", "time/query (s)"] {
        assert!(header.contains(column), "missing column {column}");
    }
    assert!(table.lines().nth(1).unwrap().contains('±'));
    pass("9 (toy benchmark report: stable scores, table shape)");
}
