//! End-to-end checks of the command-line interface against the shipped
//! fixture files.

use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    let mut p = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    p.pop();
    p.pop();
    p.push("fixtures");
    p.push(name);
    p.to_string_lossy().into_owned()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpg2kit"))
        .args(args)
        .output()
        .expect("binary runs")
}

#[test]
fn check_edge_sentence_is_true() {
    let out = run(&[
        "check",
        &fixture("hague.cps"),
        "(exists x (exists y (edge Cl x y)))",
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(String::from_utf8_lossy(&out.stdout).contains("true (exact)"));
}

#[test]
fn returns_print_the_worked_example_count() {
    let out = run(&[
        "returns",
        &fixture("subreturns.cps"),
        "--from",
        "q0",
        "--stack",
        "[_bot (b,2,0) (b,2,0)]:[_bot (b,2,1) a]",
        "--threshold",
        "10",
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("returns q0 -> q2: 6"), "{stdout}");
    assert!(stdout.contains("total 6"), "{stdout}");
}

#[test]
fn decode_of_non_enc_tree_names_the_condition() {
    let dir = std::env::temp_dir().join("cpg2kit-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let bad = dir.join("bad.tree");
    // A right child labelled by a letter violates condition 3.
    std::fs::write(&bad, "(0 (⊥,1 - (a,2 - -)) -)\n").unwrap();
    let out = run(&[
        "decode",
        &fixture("hague.cps"),
        bad.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("condition 3"), "{stderr}");
}

#[test]
fn decode_restores_the_encoding_fixture() {
    let out = run(&[
        "decode",
        &fixture("encoding-example.cps"),
        &fixture("encoding-example.tree"),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(
        stdout.contains("[⊥ (a,2,0) (b,2,0)]:[⊥ (a,2,0) (b,2,0) (c,2,1)]:[⊥ (a,2,2) c]:[⊥ (a,2,2) (d,2,3) e]:[⊥ (a,2,2)]"),
        "{stdout}"
    );
}

#[test]
fn encode_decode_roundtrip_is_identity() {
    let stack = "[⊥]:[⊥ (a,2,1)]";
    let out = run(&[
        "encode",
        &fixture("hague.cps"),
        "--state",
        "2",
        "--stack",
        stack,
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let tree_text = String::from_utf8_lossy(&out.stdout).trim().to_string();
    let dir = std::env::temp_dir().join("cpg2kit-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let tf = dir.join("roundtrip.tree");
    std::fs::write(&tf, format!("{tree_text}\n")).unwrap();
    let out = run(&["decode", &fixture("hague.cps"), tf.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    assert!(
        String::from_utf8_lossy(&out.stdout).contains(stack),
        "{out:?}"
    );
}

#[test]
fn reach_exit_codes_distinguish_verdicts() {
    let out = run(&[
        "reach",
        &fixture("hague.cps"),
        "--from-state",
        "0",
        "--from-stack",
        "[⊥]",
        "--to-state",
        "2",
        "--to-stack",
        "[⊥]:[⊥]",
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    // State 1 with a width-1 stack is unreachable.
    let out = run(&[
        "reach",
        &fixture("hague.cps"),
        "--from-state",
        "0",
        "--from-stack",
        "[⊥]",
        "--to-state",
        "1",
        "--to-stack",
        "[⊥]",
    ]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
    // Restricted to L = {Cl}, one clone reaches (1,[⊥]:[⊥]).
    let out = run(&[
        "reach",
        &fixture("hague.cps"),
        "--from-state",
        "0",
        "--from-stack",
        "[⊥]",
        "--to-state",
        "1",
        "--to-stack",
        "[⊥]:[⊥]",
        "--lang",
        &fixture("cl-only.dfa.json"),
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
}

#[test]
fn npt_check_fixture_sentences() {
    let out = run(&[
        "npt-check",
        &fixture("nptexample.cps"),
        "(exists x (exists y (jump x y)))",
    ]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let out = run(&[
        "npt-check",
        &fixture("nptexample.cps"),
        "(exists x (jump x x))",
    ]);
    assert_eq!(out.status.code(), Some(1), "{out:?}");
}

#[test]
fn bounded_reach_check_exits_three() {
    let out = run(&[
        "check",
        &fixture("hague.cps"),
        "(exists x (exists y (and (reach x y) (edge Co y x))))",
        "--bound",
        "6",
    ]);
    assert_eq!(out.status.code(), Some(3), "{out:?}");
    assert!(String::from_utf8_lossy(&out.stdout).contains("true (bounded 6)"));
}

#[test]
fn outputs_are_deterministic() {
    let args = ["explore", &fixture("hague.cps"), "--bound", "4"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.status.code(), Some(0));
}

#[test]
fn translate_npt_emits_a_level2_system() {
    let out = run(&["translate-npt", &fixture("nptexample.cps")]);
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("cpg2kit-format 1"));
    assert!(text.contains("collapse"), "{text}");
    assert!(text.contains("PUSH"), "{text}");
}
