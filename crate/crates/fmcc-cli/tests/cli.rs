//! End-to-end tests of the `fmcc` binary: subcommands, exit codes, and
//! pipe behavior.

use std::io::Write;
use std::path::PathBuf;
use std::process::{Command, Output, Stdio};

fn fmcc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fmcc"))
}

fn corpus(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../corpus")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

fn stderr(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

#[test]
fn simulate_prints_screen_and_return_code() {
    let output = fmcc().args(["simulate", &corpus("prog1.cpp")]).output().unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("Welcome to C++!\\n"));
    assert!(text.contains("return: 0"));
}

#[test]
fn simulate_with_oracle_reports_a_match() {
    let output = fmcc()
        .args(["simulate", &corpus("prog2.cpp"), "--in", "3 4", "--oracle"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("memory: integer1=3 integer2=4 sum=7"));
    assert!(text.contains("oracle: MATCH"));
}

#[test]
fn check_reports_violations_with_exit_one() {
    let output = fmcc()
        .args(["check", &corpus("mutations/dangling_endpoint.json")])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(stderr(&output).contains("DanglingRef"));
}

#[test]
fn compile_pipes_into_check_for_every_corpus_program() {
    for name in ["prog1.cpp", "prog2.cpp", "prog3.cpp", "prog4.cpp"] {
        let compiled = fmcc().args(["compile", &corpus(name)]).output().unwrap();
        assert_eq!(compiled.status.code(), Some(0), "{}", stderr(&compiled));

        let mut check = fmcc()
            .args(["check", "-"])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .unwrap();
        check.stdin.as_mut().unwrap().write_all(&compiled.stdout).unwrap();
        let result = check.wait_with_output().unwrap();
        assert_eq!(result.status.code(), Some(0), "{}: {}", name, stderr(&result));
        assert!(stdout(&result).contains("ok"));
    }
}

#[test]
fn parse_errors_exit_with_two() {
    let dir = std::env::temp_dir().join("fmcc-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("broken.cpp");
    std::fs::write(&path, "int main(){int x; for(;;) {} return 0;}").unwrap();
    let output = fmcc().args(["parse", path.to_str().unwrap()]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(stderr(&output).contains("unsupported"));
}

#[test]
fn exhausted_input_exits_with_three() {
    let output = fmcc()
        .args(["simulate", &corpus("prog2.cpp"), "--in", "3"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
    assert!(stderr(&output).contains("input script exhausted"));
}

#[test]
fn usage_errors_exit_with_four() {
    let unknown_flag = fmcc()
        .args(["simulate", &corpus("prog1.cpp"), "--frobnicate"])
        .output()
        .unwrap();
    assert_eq!(unknown_flag.status.code(), Some(4));

    let unknown_pass = fmcc()
        .args(["render", &corpus("prog1.cpp"), "--pass", "no-such"])
        .output()
        .unwrap();
    assert_eq!(unknown_pass.status.code(), Some(4));
    assert!(stderr(&unknown_pass).contains("known:"));

    let missing_file = fmcc().args(["simulate", "nowhere.cpp"]).output().unwrap();
    assert_eq!(missing_file.status.code(), Some(4));
}

#[test]
fn flowchart_emits_decision_diamonds() {
    let output = fmcc().args(["flowchart", &corpus("prog3.cpp")]).output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    let text = stdout(&output);
    assert!(text.contains("shape=diamond"));
    assert!(text.contains("num1 == num2"));
}

#[test]
fn narrate_is_static_without_a_script_and_dynamic_with_one() {
    let static_text =
        stdout(&fmcc().args(["narrate", &corpus("prog2.cpp")]).output().unwrap());
    assert!(static_text.starts_with("1. "));
    assert!(!static_text.contains("ALU processes"));

    let dynamic = fmcc()
        .args(["narrate", &corpus("prog2.cpp"), "--in", "3 4"])
        .output()
        .unwrap();
    assert_eq!(dynamic.status.code(), Some(0));
    assert!(stdout(&dynamic).contains("ALU processes 3 + 4, triggering creation of 7"));
}

#[test]
fn render_styles_and_trigger_hiding_work() {
    let simplified = stdout(
        &fmcc()
            .args(["render", &corpus("prog3.cpp"), "--style", "simplified"])
            .output()
            .unwrap(),
    );
    assert!(simplified.contains("shape=diamond"));

    let bare = stdout(
        &fmcc()
            .args(["render", &corpus("prog3.cpp"), "--no-triggers"])
            .output()
            .unwrap(),
    );
    assert!(!bare.contains("style=dashed"));

    let bad = fmcc()
        .args(["render", &corpus("prog3.cpp"), "--style", "cubist"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(4));
}

#[test]
fn render_accepts_passes_by_name() {
    let output = fmcc()
        .args([
            "render",
            &corpus("prog2.cpp"),
            "--pass",
            "expand-receive",
            "--collapse",
            "--fuse",
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    let text = stdout(&output);
    assert!(text.contains("Arrive"));
    assert!(text.contains("cluster_g_fuse"));
}

#[test]
fn generated_programs_feed_back_through_the_pipeline() {
    let a = stdout(&fmcc().args(["generate", "--seed", "11"]).output().unwrap());
    let b = stdout(&fmcc().args(["generate", "--seed", "11"]).output().unwrap());
    assert_eq!(a, b, "generation is deterministic");

    let mut compile = fmcc()
        .args(["compile", "-"])
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    compile.stdin.as_mut().unwrap().write_all(a.as_bytes()).unwrap();
    let result = compile.wait_with_output().unwrap();
    assert_eq!(result.status.code(), Some(0), "{}", stderr(&result));
}

#[test]
fn simulate_runs_compiled_graph_files() {
    let dir = std::env::temp_dir().join("fmcc-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("prog2.graph.json");
    let compile = fmcc()
        .args(["compile", &corpus("prog2.cpp"), "--out", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(compile.status.code(), Some(0));
    let output = fmcc()
        .args(["simulate", path.to_str().unwrap(), "--in", "20 22"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    assert!(stdout(&output).contains("sum=42"));
}

#[test]
fn compile_output_is_deterministic() {
    let a = fmcc().args(["compile", &corpus("prog4.cpp")]).output().unwrap();
    let b = fmcc().args(["compile", &corpus("prog4.cpp")]).output().unwrap();
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn generate_lists_registered_passes() {
    let output = fmcc().args(["generate", "--list-passes"]).output().unwrap();
    let text = stdout(&output);
    for name in ["merge-receive", "expand-receive", "collapse-single", "fuse-statements"] {
        assert!(text.contains(name), "{}", name);
    }
}
