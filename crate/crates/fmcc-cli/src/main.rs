//! `fmcc`: compile a small C++ subset to flowthing graphs, validate and
//! rewrite them, run them as token simulations against the reference
//! interpreter, and emit JSON, DOT, or the narrative of events.
//!
//! Exit codes: 0 success, 1 validation violations or oracle mismatch,
//! 2 parse error, 3 simulation error, 4 usage error.

use std::io::Read;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use fmcc::compile::{compile, CompileOptions};
use fmcc::emit::{from_json, narrate, to_dot, to_json, RenderOptions, Style};
use fmcc::fm::{validate, FmGraph};
use fmcc::frontend::{parse, pretty, Program};
use fmcc::generator::{generate, GenOptions};
use fmcc::sim::{equivalent, interpret, simulate, InputScript, SimLimits, Trace};
use fmcc::transform::{find_pass, flowchart_to_dot, registry, to_flowchart};

const EXIT_VIOLATION: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_SIM: u8 = 3;
const EXIT_USAGE: u8 = 4;

#[derive(Parser)]
#[command(name = "fmcc", version, about = "Flowthing-graph compiler and simulator for a small C++ subset")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ModelFlags {
    /// Leave the User, Keyboard, and Screen spheres out of the model
    #[arg(long)]
    no_peripherals: bool,
    /// Fetch literal operands from memory locations instead of creating
    /// them in the ALU
    #[arg(long)]
    fetch_constants: bool,
}

impl ModelFlags {
    fn options(&self) -> CompileOptions {
        CompileOptions {
            model_keyboard_screen: !self.no_peripherals,
            model_constant_fetch: self.fetch_constants,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Parse a source file and dump its syntax tree
    Parse {
        /// Source path, or `-` for stdin
        input: String,
        /// Output path, or `-`/absent for stdout
        #[arg(long)]
        out: Option<String>,
        /// Print the canonical source instead of the tree
        #[arg(long)]
        pretty: bool,
    },
    /// Compile a source file and emit the graph as JSON
    Compile {
        input: String,
        #[arg(long)]
        out: Option<String>,
        /// Apply a registered pass after compiling (repeatable)
        #[arg(long = "pass")]
        passes: Vec<String>,
        #[command(flatten)]
        model: ModelFlags,
    },
    /// Validate a graph JSON document
    Check {
        /// Graph JSON path, or `-` for stdin
        input: String,
    },
    /// Render a source file or graph JSON as a DOT diagram
    Render {
        input: String,
        #[arg(long)]
        out: Option<String>,
        /// Diagram style: full | simplified
        #[arg(long, default_value = "full")]
        style: String,
        /// Leave trigger arcs out of the drawing
        #[arg(long)]
        no_triggers: bool,
        /// Collapse single-flowsystem spheres into one box
        #[arg(long)]
        collapse: bool,
        /// Draw fused statement runs in one box
        #[arg(long)]
        fuse: bool,
        #[arg(long = "pass")]
        passes: Vec<String>,
        #[command(flatten)]
        model: ModelFlags,
    },
    /// Reduce a source file to a classic flowchart in DOT
    Flowchart {
        input: String,
        #[arg(long)]
        out: Option<String>,
    },
    /// Run a program or graph on an input script and report the trace
    Simulate {
        input: String,
        /// Input script: integers inline (`"3 4"`) or `@file`
        #[arg(long = "in")]
        script: Option<String>,
        /// Step budget before the run is declared non-terminating
        #[arg(long, default_value_t = 100_000)]
        max_steps: usize,
        /// Also run the reference interpreter and diff the observables
        #[arg(long)]
        oracle: bool,
        #[arg(long = "pass")]
        passes: Vec<String>,
        #[command(flatten)]
        model: ModelFlags,
        #[arg(long)]
        out: Option<String>,
    },
    /// Print the narrative of events (static, or dynamic with --in)
    Narrate {
        input: String,
        #[arg(long = "in")]
        script: Option<String>,
        #[arg(long, default_value_t = 100_000)]
        max_steps: usize,
        #[arg(long = "pass")]
        passes: Vec<String>,
        #[command(flatten)]
        model: ModelFlags,
        #[arg(long)]
        out: Option<String>,
    },
    /// Emit a seeded random program for differential testing
    Generate {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Statement budget for the generated program
        #[arg(long, default_value_t = 20)]
        statements: usize,
        #[arg(long)]
        out: Option<String>,
        /// List the registered transform passes and exit
        #[arg(long)]
        list_passes: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let benign = matches!(
                err.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = err.print();
            return if benign { ExitCode::SUCCESS } else { ExitCode::from(EXIT_USAGE) };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("fmcc: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

fn read_input(path: &str) -> Result<String, Failure> {
    if path == "-" {
        let mut text = String::new();
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| fail(EXIT_USAGE, format!("stdin: {}", e)))?;
        Ok(text)
    } else {
        std::fs::read_to_string(path).map_err(|e| fail(EXIT_USAGE, format!("{}: {}", path, e)))
    }
}

fn write_output(out: &Option<String>, text: &str) -> Result<(), Failure> {
    match out.as_deref() {
        None | Some("-") => {
            print!("{}", text);
            Ok(())
        }
        Some(path) => std::fs::write(path, text)
            .map_err(|e| fail(EXIT_USAGE, format!("{}: {}", path, e))),
    }
}

fn looks_like_graph(path: &str, text: &str) -> bool {
    path.ends_with(".json") || text.trim_start().starts_with('{')
}

fn parse_source(path: &str, text: &str) -> Result<Program, Failure> {
    let program =
        parse(text).map_err(|e| fail(EXIT_PARSE, format!("{}:{}", display_name(path), e)))?;
    for warning in &program.warnings {
        eprintln!("fmcc: warning: {}: {}", display_name(path), warning);
    }
    Ok(program)
}

fn display_name(path: &str) -> &str {
    if path == "-" {
        "<stdin>"
    } else {
        path
    }
}

/// Program or graph, depending on what the input looks like.
fn load_graph(
    path: &str,
    options: &CompileOptions,
    passes: &[String],
) -> Result<(FmGraph, Option<Program>), Failure> {
    let text = read_input(path)?;
    let (graph, program) = if looks_like_graph(path, &text) {
        let graph = from_json(&text)
            .map_err(|e| fail(EXIT_PARSE, format!("{}: {}", display_name(path), e)))?;
        (graph, None)
    } else {
        let program = parse_source(path, &text)?;
        (compile(&program, options), Some(program))
    };
    let graph = apply_passes(graph, passes)?;
    Ok((graph, program))
}

fn apply_passes(mut graph: FmGraph, passes: &[String]) -> Result<FmGraph, Failure> {
    for name in passes {
        let pass = find_pass(name).ok_or_else(|| {
            let known: Vec<&str> = registry().iter().map(|p| p.name()).collect();
            fail(
                EXIT_USAGE,
                format!("unknown pass `{}` (known: {})", name, known.join(", ")),
            )
        })?;
        graph = pass
            .apply(&graph)
            .map_err(|e| fail(EXIT_VIOLATION, format!("pass {}: {}", name, e)))?;
    }
    Ok(graph)
}

fn check_valid(graph: &FmGraph) -> Result<(), Failure> {
    let violations = validate(graph);
    if violations.is_empty() {
        return Ok(());
    }
    let lines: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
    Err(fail(EXIT_VIOLATION, lines.join("\n")))
}

fn read_script(script: &Option<String>) -> Result<InputScript, Failure> {
    let Some(spec) = script else { return Ok(InputScript::default()) };
    let text = match spec.strip_prefix('@') {
        Some(path) => std::fs::read_to_string(path)
            .map_err(|e| fail(EXIT_USAGE, format!("{}: {}", path, e)))?,
        None => spec.clone(),
    };
    InputScript::parse(&text).map_err(|e| fail(EXIT_USAGE, format!("input script: {}", e)))
}

fn trace_report(trace: &Trace) -> String {
    let mut out = String::new();
    let items: Vec<String> = trace.screen.iter().map(|s| format!("{:?}", s)).collect();
    out.push_str(&format!("screen: {}\n", if items.is_empty() { "(none)".to_owned() } else { items.join(" ") }));
    if trace.memory_final.is_empty() {
        out.push_str("memory: (none)\n");
    } else {
        let cells: Vec<String> =
            trace.memory_final.iter().map(|(k, v)| format!("{}={}", k, v)).collect();
        out.push_str(&format!("memory: {}\n", cells.join(" ")));
    }
    match trace.os_return {
        Some(code) => out.push_str(&format!("return: {}\n", code)),
        None => out.push_str("return: (never reached the operating system)\n"),
    }
    out.push_str(&format!("steps: {}\n", trace.steps));
    out
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Parse { input, out, pretty: canonical } => {
            let text = read_input(&input)?;
            let program = parse_source(&input, &text)?;
            let dump = if canonical {
                pretty(&program)
            } else {
                format!("{:#?}\n", program.statements)
            };
            write_output(&out, &dump)
        }
        Command::Compile { input, out, passes, model } => {
            let text = read_input(&input)?;
            let program = parse_source(&input, &text)?;
            let graph = apply_passes(compile(&program, &model.options()), &passes)?;
            write_output(&out, &to_json(&graph))
        }
        Command::Check { input } => {
            let text = read_input(&input)?;
            if !looks_like_graph(&input, &text) {
                return Err(fail(EXIT_USAGE, "check expects a graph JSON document"));
            }
            let graph = from_json(&text)
                .map_err(|e| fail(EXIT_PARSE, format!("{}: {}", display_name(&input), e)))?;
            check_valid(&graph)?;
            println!("ok: graph is valid");
            Ok(())
        }
        Command::Render { input, out, style, no_triggers, collapse, fuse, passes, model } => {
            let style = match style.as_str() {
                "full" => Style::Full,
                "simplified" => Style::Simplified,
                other => {
                    return Err(fail(
                        EXIT_USAGE,
                        format!("unknown style `{}` (full | simplified)", other),
                    ))
                }
            };
            let mut passes = passes;
            if collapse {
                passes.push("collapse-single".to_owned());
            }
            if fuse {
                passes.push("fuse-statements".to_owned());
            }
            let (graph, _) = load_graph(&input, &model.options(), &passes)?;
            let options = RenderOptions {
                style,
                show_triggers: !no_triggers,
                honor_collapse: true,
                honor_fusion: true,
            };
            write_output(&out, &to_dot(&graph, &options))
        }
        Command::Flowchart { input, out } => {
            let text = read_input(&input)?;
            let graph = if looks_like_graph(&input, &text) {
                from_json(&text)
                    .map_err(|e| fail(EXIT_PARSE, format!("{}: {}", display_name(&input), e)))?
            } else {
                compile(&parse_source(&input, &text)?, &CompileOptions::default())
            };
            let chart = to_flowchart(&graph)
                .map_err(|e| fail(EXIT_VIOLATION, format!("{}", e)))?;
            write_output(&out, &flowchart_to_dot(&chart))
        }
        Command::Simulate { input, script, max_steps, oracle, passes, model, out } => {
            let (graph, program) = load_graph(&input, &model.options(), &passes)?;
            check_valid(&graph)?;
            let script = read_script(&script)?;
            let limits = SimLimits { max_steps };
            let trace = simulate(&graph, &script, &limits)
                .map_err(|e| fail(EXIT_SIM, e.to_string()))?;
            let mut report = trace_report(&trace);
            if oracle {
                let program = match program {
                    Some(p) => p,
                    None => {
                        return Err(fail(
                            EXIT_USAGE,
                            "--oracle needs source input (the interpreter runs the program text)",
                        ))
                    }
                };
                let reference = interpret(&program, &script, &limits)
                    .map_err(|e| fail(EXIT_SIM, e.to_string()))?;
                let cmp = equivalent(&trace, &reference);
                if cmp.equivalent {
                    report.push_str("oracle: MATCH\n");
                } else {
                    report.push_str(&format!(
                        "oracle: MISMATCH - {}\n",
                        cmp.diff.unwrap_or_default()
                    ));
                    write_output(&out, &report)?;
                    return Err(fail(EXIT_VIOLATION, "simulation disagrees with the interpreter"));
                }
            }
            write_output(&out, &report)
        }
        Command::Narrate { input, script, max_steps, passes, model, out } => {
            let (graph, _) = load_graph(&input, &model.options(), &passes)?;
            check_valid(&graph)?;
            let text = match script {
                None => narrate(&graph, None),
                Some(_) => {
                    let script = read_script(&script)?;
                    let limits = SimLimits { max_steps };
                    let trace = simulate(&graph, &script, &limits)
                        .map_err(|e| fail(EXIT_SIM, e.to_string()))?;
                    narrate(&graph, Some(&trace))
                }
            };
            write_output(&out, &text)
        }
        Command::Generate { seed, statements, out, list_passes } => {
            if list_passes {
                let mut text = String::new();
                for pass in registry() {
                    text.push_str(&format!("{}: {}\n", pass.name(), pass.describe()));
                }
                return write_output(&out, &text);
            }
            let options = GenOptions { max_statements: statements, ..Default::default() };
            let program = generate(seed, &options);
            write_output(&out, &pretty(&program))
        }
    }
}
