//! End-to-end tests of the command-line interface: exit codes, output
//! contracts, and byte-identical reruns of every command.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use seqsynth::alphabet::Alphabet;
use seqsynth::automaton::Nfa;
use seqsynth::corpus::{rewrite_union, rewrite_union_copy};
use seqsynth::format::{print_spec, spec_file_of_multi};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_seqsynth")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .env_remove("SEQSYNTH_BUDGET")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

struct Fixtures {
    dir: tempfile::TempDir,
    left: PathBuf,
    right: PathBuf,
    even_x: PathBuf,
    odd_x: PathBuf,
}

fn parity_dfa_json(tag: &str, sym: char, accept_even: bool) -> String {
    let xy = Alphabet::from_str_symbols("xy").unwrap();
    let e = format!("{tag}e");
    let o = format!("{tag}o");
    let other = if sym == 'x' { 'y' } else { 'x' };
    let dfa = Nfa::new(
        xy,
        [e.clone(), o.clone()],
        [e.clone()],
        [if accept_even { e.clone() } else { o.clone() }],
        [
            (e.clone(), sym, o.clone()),
            (o.clone(), sym, e.clone()),
            (e.clone(), other, e.clone()),
            (o.clone(), other, o.clone()),
        ],
    )
    .unwrap();
    let transitions: Vec<serde_json::Value> = dfa
        .transitions()
        .iter()
        .map(|(from, s, to)| {
            serde_json::json!({"from": from, "in": s.to_string(), "to": to})
        })
        .collect();
    serde_json::to_string_pretty(&serde_json::json!({
        "alphabet": ["x", "y"],
        "states": dfa.states().iter().collect::<Vec<_>>(),
        "initial": dfa.initials().iter().next().unwrap(),
        "finals": dfa.finals().iter().collect::<Vec<_>>(),
        "transitions": transitions,
    }))
    .unwrap()
}

fn fixtures() -> Fixtures {
    let dir = tempfile::tempdir().unwrap();
    let left = dir.path().join("left.json");
    let right = dir.path().join("right.json");
    std::fs::write(&left, print_spec(&spec_file_of_multi(&rewrite_union()))).unwrap();
    std::fs::write(&right, print_spec(&spec_file_of_multi(&rewrite_union_copy()))).unwrap();
    let even_x = dir.path().join("even_x.json");
    let odd_x = dir.path().join("odd_x.json");
    std::fs::write(&even_x, parity_dfa_json("p", 'x', true)).unwrap();
    std::fs::write(&odd_x, parity_dfa_json("q", 'x', false)).unwrap();
    Fixtures { dir, left, right, even_x, odd_x }
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn validate_classifies_and_rejects() {
    let f = fixtures();
    let out = run(&["validate", p(&f.left)]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "2 parts, synchronous, trim\n");

    let bad = f.dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{
            "format": 1,
            "input_alphabet": ["a"],
            "output_alphabet": ["a"],
            "parts": [{
                "name": "D1",
                "states": ["p", "q"],
                "initial": "p",
                "finals": {"q": ""},
                "transitions": [
                    {"from": "p", "in": "a", "out": "a", "to": "p"},
                    {"from": "p", "in": "a", "out": "a", "to": "q"}
                ]
            }]
        }"#,
    )
    .unwrap();
    let out = run(&["validate", p(&bad)]);
    assert_eq!(code(&out), 3);
    let err = String::from_utf8_lossy(&out.stderr).to_string();
    assert!(err.contains("D1"), "stderr was: {err}");

    let missing = f.dir.path().join("missing.json");
    assert_eq!(code(&run(&["validate", p(&missing)])), 3);
}

#[test]
fn check_exit_codes_and_text() {
    let f = fixtures();
    let out = run(&["check", p(&f.left), "--mode", "sync"]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("UNREALISABLE"));
    assert!(stdout(&out).contains("\"a\""));

    let out = run(&["check", p(&f.left), "--mode", "async", "--max-k", "4"]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("REALISABLE K=1"));

    let out = run(&["check", p(&f.right), "--mode", "async"]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("UNREALISABLE"));

    let out = run(&[
        "check",
        p(&f.right),
        "--mode",
        "async",
        "--max-k",
        "1",
        "--witness-u",
        "0",
        "--witness-v",
        "1",
        "--witness-nodes",
        "1",
    ]);
    assert_eq!(code(&out), 2);
    assert!(stdout(&out).contains("UNKNOWN"));
}

#[test]
fn check_json_is_schema_stable() {
    let f = fixtures();
    let out = run(&["check", p(&f.left), "--mode", "sync", "--json"]);
    assert_eq!(code(&out), 1);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["format"], 1);
    assert_eq!(v["verdict"], "UNREALISABLE");
    assert_eq!(v["certificate"]["prefix"], "a");

    let out = run(&["check", p(&f.left), "--mode", "async", "--json"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["format"], 1);
    assert_eq!(v["verdict"], "REALISABLE");
    assert_eq!(v["k"], 1);
    assert_eq!(v["realiser"]["format"], 1);

    let out = run(&["check", p(&f.right), "--mode", "async", "--json"]);
    assert_eq!(code(&out), 1);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["verdict"], "UNREALISABLE");
    assert_eq!(v["witness"]["root"]["prefix"], "a");
    assert_eq!(v["witness"]["root"]["cycle"], "c");
}

#[test]
fn run_prints_sorted_outputs() {
    let f = fixtures();
    let out = run(&["run", p(&f.left), "--input", "aab"]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "aaa\nbbb\n");

    let out = run(&["run", p(&f.left), "--input", "zz"]);
    assert_eq!(code(&out), 3);
}

#[test]
fn synthesize_then_verify_round_trip() {
    let f = fixtures();
    let realiser = f.dir.path().join("realiser.json");
    let out = run(&["synthesize", p(&f.left), "--max-k", "4", "-o", p(&realiser)]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("K=1"));

    let out = run(&["verify", p(&f.left), p(&realiser), "--test-len", "10"]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["format"], 1);
    assert_eq!(v["report"]["domain_ok"], true);
    assert_eq!(v["report"]["membership_ok"], true);

    // Verifying a realiser with the wrong domain fails with exit 1.
    let spec = rewrite_union();
    let b_only = f.dir.path().join("b_only.json");
    std::fs::write(
        &b_only,
        print_spec(&seqsynth::format::spec_file_of_sequential("B", spec.part(1))),
    )
    .unwrap();
    let out = run(&["verify", p(&f.left), p(&b_only), "--test-len", "6"]);
    assert_eq!(code(&out), 1);

    // Mismatched alphabets are an input error.
    let out = run(&["verify", p(&f.right), p(&realiser), "--test-len", "6"]);
    assert_eq!(code(&out), 3);

    let out = run(&["synthesize", p(&f.right), "-o", p(&f.dir.path().join("no.json"))]);
    assert_eq!(code(&out), 1);
    assert!(stdout(&out).contains("UNREALISABLE"));
}

#[test]
fn generators_write_valid_specs() {
    let f = fixtures();
    let hardness = f.dir.path().join("hardness.json");
    let out = run(&[
        "gen", "hardness", "--dfa", p(&f.even_x), "--dfa", p(&f.odd_x), "--m1", "-o",
        p(&hardness),
    ]);
    assert_eq!(code(&out), 0);
    let out = run(&["validate", p(&hardness)]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("6 parts"));
    assert!(stdout(&out).contains("synchronous"));
    let out = run(&["check", p(&hardness), "--mode", "sync"]);
    assert_eq!(code(&out), 0, "disjoint automata are realisable");

    let rotation = f.dir.path().join("rotation.json");
    let out = run(&["gen", "badjpair", "--n", "2", "-o", p(&rotation)]);
    assert_eq!(code(&out), 0);
    assert_eq!(stdout(&out), "4 parts, 12 states\n");

    let sub = f.dir.path().join("subword.json");
    let out = run(&["gen", "subword", "--word", "ab", "--alphabet", "ab", "-o", p(&sub)]);
    assert_eq!(code(&out), 0);
    let out = run(&["run", p(&sub), "--input", "aabb"]);
    assert_eq!(stdout(&out), "ab\n");
}

#[test]
fn game_exports_stats_and_dot() {
    let f = fixtures();
    let dot = f.dir.path().join("game.dot");
    let out = run(&["game", p(&f.left), "--k", "1", "--dot", p(&dot)]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["format"], 1);
    assert_eq!(v["stats"]["eve_wins"], true);
    assert!(v["stats"]["unsafe_count"].as_u64().unwrap() > 0);
    let text = std::fs::read_to_string(&dot).unwrap();
    assert!(text.starts_with("digraph synthesis_game {"));
    assert!(text.contains("style=bold"));

    let out = run(&["game", p(&f.left), "--k", "0"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["stats"]["eve_wins"], false);

    // The stats file mirrors stdout, and a tiny budget is a loud error.
    let stats = f.dir.path().join("stats.json");
    let out = run(&["game", p(&f.left), "--k", "1", "--stats", p(&stats)]);
    assert_eq!(stdout(&out), std::fs::read_to_string(&stats).unwrap());
    let out = run(&["game", p(&f.left), "--k", "1", "--budget", "2"]);
    assert_eq!(code(&out), 3);
    let out = Command::new(bin())
        .args(["game", p(&f.left), "--k", "1"])
        .env("SEQSYNTH_BUDGET", "2")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

/// Every command run twice produces byte-identical stdout and files.
#[test]
fn criterion_7_byte_identical_reruns() {
    let f = fixtures();
    let dir = f.dir.path();

    // (args-builder, output-file-name) pairs; output files get a per-run
    // suffix so the two runs cannot influence each other.
    let commands: Vec<(Vec<String>, Option<String>)> = vec![
        (vec!["validate".into(), p(&f.left).into()], None),
        (vec!["validate".into(), p(&f.right).into()], None),
        (
            vec!["check".into(), p(&f.left).into(), "--mode".into(), "sync".into()],
            None,
        ),
        (
            vec![
                "check".into(),
                p(&f.left).into(),
                "--mode".into(),
                "sync".into(),
                "--json".into(),
            ],
            None,
        ),
        (
            vec![
                "check".into(),
                p(&f.left).into(),
                "--mode".into(),
                "async".into(),
                "--json".into(),
            ],
            None,
        ),
        (
            vec![
                "check".into(),
                p(&f.right).into(),
                "--mode".into(),
                "async".into(),
                "--json".into(),
            ],
            None,
        ),
        (
            vec!["run".into(), p(&f.left).into(), "--input".into(), "aab".into()],
            None,
        ),
        (
            vec!["synthesize".into(), p(&f.left).into(), "-o".into()],
            Some("realiser.json".into()),
        ),
        (
            vec![
                "gen".into(),
                "hardness".into(),
                "--dfa".into(),
                p(&f.even_x).into(),
                "--dfa".into(),
                p(&f.odd_x).into(),
                "--m1".into(),
                "-o".into(),
            ],
            Some("hardness.json".into()),
        ),
        (
            vec!["gen".into(), "badjpair".into(), "--n".into(), "2".into(), "-o".into()],
            Some("rotation.json".into()),
        ),
        (
            vec![
                "gen".into(),
                "subword".into(),
                "--word".into(),
                "ab".into(),
                "--alphabet".into(),
                "ab".into(),
                "-o".into(),
            ],
            Some("subword.json".into()),
        ),
        (
            vec![
                "game".into(),
                p(&f.left).into(),
                "--k".into(),
                "1".into(),
                "--dot".into(),
            ],
            Some("game.dot".into()),
        ),
    ];

    for (args, out_file) in &commands {
        let mut results = Vec::new();
        for round in 0..2 {
            let mut argv: Vec<String> = args.clone();
            let path = out_file
                .as_ref()
                .map(|name| dir.join(format!("r{round}-{name}")));
            if let Some(path) = &path {
                argv.push(path.to_str().unwrap().to_string());
            }
            let out = Command::new(bin())
                .args(&argv)
                .env_remove("SEQSYNTH_BUDGET")
                .output()
                .expect("binary runs");
            let file_bytes = path.map(|path| std::fs::read(path).unwrap_or_default());
            results.push((out.status.code(), out.stdout, file_bytes));
        }
        assert_eq!(results[0], results[1], "nondeterministic output for {args:?}");
    }
    println!("acceptance criterion 7 (byte-identical reruns): PASS");
}

/// The verify command exercises the documented exit-code contract end to end.
#[test]
fn verify_catches_an_edited_realiser() {
    let f = fixtures();
    let realiser = f.dir.path().join("realiser.json");
    assert_eq!(
        code(&run(&["synthesize", p(&f.left), "-o", p(&realiser)])),
        0
    );
    // Flip one output letter in the written file.
    let text = std::fs::read_to_string(&realiser).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let mut edited = v.clone();
    let transitions = edited["parts"][0]["transitions"].as_array_mut().unwrap();
    let slot = transitions
        .iter_mut()
        .find(|t| t["out"] == "bb")
        .expect("some transition emits bb");
    slot["out"] = serde_json::json!("ba");
    let broken = f.dir.path().join("broken.json");
    std::fs::write(&broken, serde_json::to_string_pretty(&edited).unwrap()).unwrap();
    let out = run(&["verify", p(&f.left), p(&broken), "--test-len", "8"]);
    assert_eq!(code(&out), 1);
}
