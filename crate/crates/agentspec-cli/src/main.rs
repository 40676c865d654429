//! Command-line surface for agent spec documents: validate, inspect,
//! convert, run (batch or interactive chat), conformance, and bench.
//!
//! Exit codes are the machine contract: 0 success, 1 validation errors,
//! 2 I/O or parse failures, 3 suspended in non-interactive mode, 4 runtime
//! failures.

use std::collections::BTreeMap;
use std::io::BufRead;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{Map, Value};

use agentspec_core::backend::{HttpLlmBackend, LlmBackend, MockBackend, MockScript};
use agentspec_core::engine::{
    Environment, ExecutionSession, ExecutionStatus, ResumePayload, SessionOptions,
};
use agentspec_core::harness::{
    evaluate_dataset, load_records, render_report_table, run_conformance_dir, stub_registry,
    Metric, StubBehavior,
};
use agentspec_core::io::{convert, deserialize, Format};
use agentspec_core::model::{ComponentId, ComponentKind};
use agentspec_core::property::Property;
use agentspec_core::validate::{analyze_text, validate_document};
use agentspec_core::SpecDocument;

const EXIT_OK: i32 = 0;
const EXIT_VALIDATION: i32 = 1;
const EXIT_IO: i32 = 2;
const EXIT_SUSPENDED: i32 = 3;
const EXIT_RUNTIME: i32 = 4;

#[derive(Parser)]
#[command(
    name = "agentspec",
    version,
    about = "Validate, inspect, convert, execute, and benchmark agent spec documents"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Yaml,
}

impl From<FormatArg> for Format {
    fn from(value: FormatArg) -> Format {
        match value {
            FormatArg::Json => Format::Json,
            FormatArg::Yaml => Format::Yaml,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    ExactMatch,
    TokenF1,
}

impl From<MetricArg> for Metric {
    fn from(value: MetricArg) -> Metric {
        match value {
            MetricArg::ExactMatch => Metric::ExactMatch,
            MetricArg::TokenF1 => Metric::TokenF1,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check a document and print diagnostics, one per line.
    Validate {
        file: PathBuf,
        /// Input format; guessed from the extension when absent.
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Print the component table and I/O schemas, or a Graphviz digraph.
    Inspect {
        file: PathBuf,
        /// Emit a digraph: control flow solid, data flow dashed.
        #[arg(long)]
        dot: bool,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Re-serialize a document in another format to stdout.
    Convert {
        file: PathBuf,
        #[arg(long, value_enum)]
        to: FormatArg,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Execute a flow or agent.
    Run {
        file: PathBuf,
        /// Entry component id; defaults to the document root.
        #[arg(long)]
        entry: Option<String>,
        /// Entry inputs as name=value; values parse as JSON when they parse,
        /// else as strings.
        #[arg(long = "input", value_name = "NAME=VALUE")]
        inputs: Vec<String>,
        /// Answer user-input suspensions from stdin (the chat loop).
        #[arg(long)]
        interactive: bool,
        /// Mock script file; without it generation goes to the HTTP backend.
        #[arg(long)]
        script: Option<PathBuf>,
        /// Stub server tools: a JSON map of tool name to behavior.
        #[arg(long)]
        tools: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        step_limit: u64,
        /// Write the execution trace (line-delimited JSON) to a file.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
    /// Run every conformance case under a directory.
    Conformance { dir: PathBuf },
    /// Evaluate a dataset and print the report table.
    Bench {
        file: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long)]
        entry: Option<String>,
        #[arg(long, value_enum, default_value = "exact-match")]
        metric: MetricArg,
        #[arg(long)]
        script: Option<PathBuf>,
        #[arg(long)]
        tools: Option<PathBuf>,
        /// Setup label in the report table; defaults to the file stem.
        #[arg(long)]
        setup: Option<String>,
        /// Also write the full report as JSON.
        #[arg(long)]
        json_out: Option<PathBuf>,
        #[arg(long, value_enum)]
        format: Option<FormatArg>,
    },
}

fn main() {
    let cli = Cli::parse();
    std::process::exit(dispatch(cli.command));
}

fn dispatch(command: Command) -> i32 {
    let outcome = match command {
        Command::Validate { file, format } => cmd_validate(&file, format),
        Command::Inspect { file, dot, format } => cmd_inspect(&file, dot, format),
        Command::Convert { file, to, format } => cmd_convert(&file, to.into(), format),
        Command::Run {
            file,
            entry,
            inputs,
            interactive,
            script,
            tools,
            step_limit,
            trace,
            format,
        } => cmd_run(RunArgs {
            file,
            entry,
            inputs,
            interactive,
            script,
            tools,
            step_limit,
            trace,
            format,
        }),
        Command::Conformance { dir } => cmd_conformance(&dir),
        Command::Bench {
            file,
            dataset,
            entry,
            metric,
            script,
            tools,
            setup,
            json_out,
            format,
        } => cmd_bench(BenchArgs {
            file,
            dataset,
            entry,
            metric: metric.into(),
            script,
            tools,
            setup,
            json_out,
            format,
        }),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            EXIT_IO
        }
    }
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn pick_format(path: &Path, format: Option<FormatArg>) -> Format {
    format
        .map(Into::into)
        .unwrap_or_else(|| Format::from_path(path))
}

fn cmd_validate(file: &Path, format: Option<FormatArg>) -> Result<i32> {
    let text = read_to_string(file)?;
    let diagnostics = analyze_text(&text, pick_format(file, format));
    if diagnostics.is_empty() {
        println!("ok");
        return Ok(EXIT_OK);
    }
    for diagnostic in &diagnostics {
        println!("{diagnostic}");
    }
    if diagnostics.iter().any(|d| d.is_error()) {
        Ok(EXIT_VALIDATION)
    } else {
        Ok(EXIT_OK)
    }
}

fn load_document(file: &Path, format: Option<FormatArg>) -> Result<SpecDocument> {
    let text = read_to_string(file)?;
    let parsed = deserialize(&text, pick_format(file, format))
        .map_err(|e| anyhow!("{}: {e}", file.display()))?;
    for warning in &parsed.warnings {
        eprintln!("{warning}");
    }
    Ok(parsed.document)
}

fn properties_cell(props: &[Property]) -> String {
    if props.is_empty() {
        return "-".to_string();
    }
    props
        .iter()
        .map(|p| format!("{}:{}", p.name(), p.type_kind()))
        .collect::<Vec<_>>()
        .join(",")
}

fn cmd_inspect(file: &Path, dot: bool, format: Option<FormatArg>) -> Result<i32> {
    let document = load_document(file, format)?;
    if dot {
        print!("{}", render_dot(&document));
        return Ok(EXIT_OK);
    }

    println!("agentspec_version: {}", document.version());
    println!(
        "root: {} ({})",
        document.root_id(),
        document.root().component_type()
    );
    println!();

    let mut rows = vec![[
        "id".to_string(),
        "type".to_string(),
        "name".to_string(),
        "inputs".to_string(),
        "outputs".to_string(),
    ]];
    for component in document.components() {
        let (inputs, outputs) = match &component.kind {
            ComponentKind::Agent(a) => (properties_cell(&a.inputs), properties_cell(&a.outputs)),
            ComponentKind::Flow(f) => (properties_cell(&f.inputs), properties_cell(&f.outputs)),
            ComponentKind::Node(n) => (properties_cell(&n.inputs), properties_cell(&n.outputs)),
            ComponentKind::Tool(t) => (properties_cell(&t.inputs), properties_cell(&t.outputs)),
            _ => ("-".to_string(), "-".to_string()),
        };
        rows.push([
            component.id().to_string(),
            component.component_type().to_string(),
            component.name().to_string(),
            inputs,
            outputs,
        ]);
    }
    let mut widths = [0usize; 5];
    for row in &rows {
        for (index, cell) in row.iter().enumerate() {
            widths[index] = widths[index].max(cell.len());
        }
    }
    for row in &rows {
        let mut line = String::new();
        for (index, cell) in row.iter().enumerate() {
            line.push_str(&format!("{:<width$}  ", cell, width = widths[index]));
        }
        println!("{}", line.trim_end());
    }
    Ok(EXIT_OK)
}

/// Graphviz rendering: solid control-flow transitions (labelled off-default
/// branches), dashed data propagation.
fn render_dot(document: &SpecDocument) -> String {
    let mut out = String::from("digraph agentspec {\n  rankdir=LR;\n");
    for component in document.components() {
        let Some(flow) = component.as_flow() else {
            continue;
        };
        out.push_str(&format!("  // flow {}\n", component.id()));
        for node_id in &flow.nodes {
            if let Some(node) = document.component(node_id) {
                out.push_str(&format!(
                    "  \"{}\" [label=\"{}\\n({})\"];\n",
                    node_id,
                    node.name(),
                    node.component_type()
                ));
            }
        }
        for edge_id in &flow.control_flow_connections {
            if let Some(edge) = document
                .component(edge_id)
                .and_then(|c| c.as_control_flow_edge())
            {
                match &edge.from_branch {
                    Some(branch) => out.push_str(&format!(
                        "  \"{}\" -> \"{}\" [label=\"{}\"];\n",
                        edge.from_node, edge.to_node, branch
                    )),
                    None => out.push_str(&format!(
                        "  \"{}\" -> \"{}\";\n",
                        edge.from_node, edge.to_node
                    )),
                }
            }
        }
        for edge_id in flow.data_flow_connections.iter().flatten() {
            if let Some(edge) = document
                .component(edge_id)
                .and_then(|c| c.as_data_flow_edge())
            {
                out.push_str(&format!(
                    "  \"{}\" -> \"{}\" [style=dashed, label=\"{}→{}\"];\n",
                    edge.source_node,
                    edge.destination_node,
                    edge.source_output,
                    edge.destination_input
                ));
            }
        }
    }
    out.push_str("}\n");
    out
}

fn cmd_convert(file: &Path, to: Format, format: Option<FormatArg>) -> Result<i32> {
    let text = read_to_string(file)?;
    let converted = convert(&text, pick_format(file, format), to)
        .map_err(|e| anyhow!("{}: {e}", file.display()))?;
    print!("{converted}");
    Ok(EXIT_OK)
}

struct RunArgs {
    file: PathBuf,
    entry: Option<String>,
    inputs: Vec<String>,
    interactive: bool,
    script: Option<PathBuf>,
    tools: Option<PathBuf>,
    step_limit: u64,
    trace: Option<PathBuf>,
    format: Option<FormatArg>,
}

fn parse_input_value(raw: &str) -> Value {
    serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()))
}

fn parse_inputs(pairs: &[String]) -> Result<BTreeMap<String, Value>> {
    let mut inputs = BTreeMap::new();
    for pair in pairs {
        let (name, raw) = pair
            .split_once('=')
            .ok_or_else(|| anyhow!("--input must be NAME=VALUE, got `{pair}`"))?;
        inputs.insert(name.to_string(), parse_input_value(raw));
    }
    Ok(inputs)
}

fn build_environment(script: Option<&Path>, tools: Option<&Path>) -> Result<Environment> {
    let llm: Box<dyn LlmBackend> = match script {
        Some(path) => {
            let script = MockScript::from_json(&read_to_string(path)?)
                .map_err(|e| anyhow!("{}: {e}", path.display()))?;
            Box::new(MockBackend::new(script))
        }
        None => Box::new(HttpLlmBackend::new()),
    };
    let mut env = Environment::new(llm);
    if let Some(path) = tools {
        let bindings: BTreeMap<String, StubBehavior> =
            serde_json::from_str(&read_to_string(path)?)
                .map_err(|e| anyhow!("{}: {e}", path.display()))?;
        env =
            env.with_tools(stub_registry(&bindings).map_err(|e| anyhow!("{}: {e}", path.display()))?);
    }
    Ok(env)
}

fn write_trace_file(session: &ExecutionSession, path: Option<&Path>) -> Result<()> {
    if let Some(path) = path {
        std::fs::write(path, session.trace_text())
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> Result<i32> {
    let document = Arc::new(load_document(&args.file, args.format)?);
    let diagnostics = validate_document(&document);
    if diagnostics.iter().any(|d| d.is_error()) {
        for diagnostic in &diagnostics {
            eprintln!("{diagnostic}");
        }
        return Ok(EXIT_VALIDATION);
    }

    let entry: ComponentId = args
        .entry
        .clone()
        .map(Into::into)
        .unwrap_or_else(|| document.root_id().clone());
    let inputs = parse_inputs(&args.inputs)?;
    let env = build_environment(args.script.as_deref(), args.tools.as_deref())?;
    let options = SessionOptions {
        step_limit: args.step_limit,
    };

    let mut session =
        match ExecutionSession::new(Arc::clone(&document), &entry, inputs, env, options) {
            Ok(session) => session,
            Err(e) => {
                eprintln!("runtime error: {e}");
                return Ok(EXIT_RUNTIME);
            }
        };
    let mut status = session.run();
    let stdin = std::io::stdin();
    loop {
        match status {
            Ok(ExecutionStatus::Finished { outputs }) => {
                write_trace_file(&session, args.trace.as_deref())?;
                let object: Map<String, Value> = outputs.into_iter().collect();
                println!("{}", Value::Object(object));
                return Ok(EXIT_OK);
            }
            Ok(ExecutionStatus::AwaitingUserInput { ref prompt }) if args.interactive => {
                if let Some(prompt) = prompt {
                    println!("{prompt}");
                }
                let mut line = String::new();
                let read = stdin.lock().read_line(&mut line)?;
                if read == 0 {
                    // operator closed stdin; report the suspension
                    write_trace_file(&session, args.trace.as_deref())?;
                    println!(
                        "{}",
                        ExecutionStatus::AwaitingUserInput {
                            prompt: prompt.clone()
                        }
                        .to_json()
                    );
                    return Ok(EXIT_SUSPENDED);
                }
                status = session.resume(ResumePayload::UserMessage {
                    text: line.trim_end_matches(['\n', '\r']).to_string(),
                });
            }
            Ok(suspended) => {
                write_trace_file(&session, args.trace.as_deref())?;
                println!("{}", suspended.to_json());
                return Ok(EXIT_SUSPENDED);
            }
            Err(e) => {
                write_trace_file(&session, args.trace.as_deref())?;
                eprintln!("runtime error: {e}");
                return Ok(EXIT_RUNTIME);
            }
        }
    }
}

fn cmd_conformance(dir: &Path) -> Result<i32> {
    let results = run_conformance_dir(dir).map_err(|e| anyhow!("{}: {e}", dir.display()))?;
    if results.is_empty() {
        eprintln!("no cases found under {}", dir.display());
        return Ok(EXIT_IO);
    }
    let mut passed = 0usize;
    for result in &results {
        if result.passed {
            passed += 1;
            println!("PASS {}", result.name);
        } else {
            println!(
                "FAIL {}: {}",
                result.name,
                result.detail.clone().unwrap_or_default()
            );
        }
    }
    println!("{passed}/{} cases passed", results.len());
    Ok(if passed == results.len() {
        EXIT_OK
    } else {
        EXIT_VALIDATION
    })
}

struct BenchArgs {
    file: PathBuf,
    dataset: PathBuf,
    entry: Option<String>,
    metric: Metric,
    script: Option<PathBuf>,
    tools: Option<PathBuf>,
    setup: Option<String>,
    json_out: Option<PathBuf>,
    format: Option<FormatArg>,
}

fn cmd_bench(args: BenchArgs) -> Result<i32> {
    let document = Arc::new(load_document(&args.file, args.format)?);
    let diagnostics = validate_document(&document);
    if diagnostics.iter().any(|d| d.is_error()) {
        for diagnostic in &diagnostics {
            eprintln!("{diagnostic}");
        }
        return Ok(EXIT_VALIDATION);
    }
    let entry: ComponentId = args
        .entry
        .clone()
        .map(Into::into)
        .unwrap_or_else(|| document.root_id().clone());
    let records = load_records(&read_to_string(&args.dataset)?)
        .map_err(|e| anyhow!("{}: {e}", args.dataset.display()))?;

    // surface script/tool file problems before the batch starts
    let script_text = args.script.as_deref().map(read_to_string).transpose()?;
    if let Some(text) = &script_text {
        MockScript::from_json(text).map_err(|e| anyhow!("invalid script: {e}"))?;
    }
    let tools_text = args.tools.as_deref().map(read_to_string).transpose()?;
    let tool_bindings: Option<BTreeMap<String, StubBehavior>> = match &tools_text {
        Some(text) => {
            let bindings: BTreeMap<String, StubBehavior> =
                serde_json::from_str(text).map_err(|e| anyhow!("invalid tools file: {e}"))?;
            stub_registry(&bindings).map_err(|e| anyhow!("invalid tools file: {e}"))?;
            Some(bindings)
        }
        None => None,
    };

    let make_env = || -> Environment {
        let llm: Box<dyn LlmBackend> = match &script_text {
            Some(text) => Box::new(MockBackend::new(
                MockScript::from_json(text).expect("validated above"),
            )),
            None => Box::new(HttpLlmBackend::new()),
        };
        let mut env = Environment::new(llm);
        if let Some(bindings) = &tool_bindings {
            env = env.with_tools(stub_registry(bindings).expect("validated above"));
        }
        env
    };

    let report = evaluate_dataset(&document, &entry, &records, args.metric, make_env)
        .map_err(|e| anyhow!("evaluation failed: {e}"))?;
    let setup = args.setup.clone().unwrap_or_else(|| {
        args.file
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| "run".to_string())
    });
    print!("{}", render_report_table(&report, &setup));
    if let Some(path) = &args.json_out {
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        std::fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))?;
    }
    Ok(EXIT_OK)
}
