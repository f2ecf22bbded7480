use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use reoc::ca::ConstraintAutomaton;
use reoc::runtime::{accepts, Trace};
use tempfile::TempDir;

fn reoc(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_reoc")).args(args).current_dir(dir).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn gen(dir: &Path, family: &str, k: usize) -> String {
    let file = format!("{family}{k}.reoc");
    let o = reoc(&["gen", "--family", family, "-k", &k.to_string(), "-o", &file], dir);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    file
}

const SYNC: &str = "connector one\nboundary_source A\nboundary_sink B\nsync s A -> B\n";
const FIFO: &str = "connector buffered\nboundary_source A\nboundary_sink B\nnode X\nsync s A -> X\nfifo1 f X -> B\n";

#[test]
fn gen_writes_parsable_source() {
    let dir = TempDir::new().unwrap();
    let o = reoc(&["gen", "--family", "alternator", "-k", "3"], dir.path());
    assert_eq!(code(&o), 0);
    let c = reoc::connector::parse_connector(&stdout(&o)).unwrap();
    assert_eq!(c.name(), "alternator_3");
}

#[test]
fn usage_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&reoc(&["frobnicate"], dir.path())), 1);
    assert_eq!(code(&reoc(&["build", "x.reoc", "--strategy", "fastest", "--emit", "stats"], dir.path())), 1);
    assert_eq!(code(&reoc(&["gen", "--family", "alternator", "-k", "1"], dir.path())), 1);
}

#[test]
fn input_errors_exit_two_with_position() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("bad.reoc"), "connector bad\nboundary_source A\nsync s A => B\n").unwrap();
    let o = reoc(&["build", "bad.reoc", "--strategy", "centralized", "--emit", "stats"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("bad.reoc:3:"), "{}", stderr(&o));
    let o = reoc(&["build", "missing.reoc", "--strategy", "centralized", "--emit", "stats"], dir.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn build_writes_requested_artifacts() {
    let dir = TempDir::new().unwrap();
    let file = gen(dir.path(), "alternator", 3);
    let args = [
        "build",
        &file,
        "--strategy",
        "middleground",
        "--emit",
        "stats",
        "--emit",
        "ca-json",
        "--emit",
        "regions",
        "--emit",
        "dot",
        "-o",
        "out",
    ];
    let o = reoc(&args, dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = dir.path().join("out");
    let mut names: Vec<String> =
        fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    names.sort();
    assert_eq!(
        names,
        [
            "regions.json",
            "stats.csv",
            "unit_0.dot",
            "unit_0.json",
            "unit_1.dot",
            "unit_1.json",
            "unit_2.dot",
            "unit_2.json"
        ]
    );
    let stats = fs::read_to_string(out.join("stats.csv")).unwrap();
    assert!(stats.lines().nth(1).unwrap().starts_with("alternator_3,3,middleground,3,2,1,"));
    let regions: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("regions.json")).unwrap()).unwrap();
    assert_eq!(regions["m1"], 2);
    assert_eq!(regions["m2"], 1);
    for u in 0..3 {
        let json = fs::read_to_string(out.join(format!("unit_{u}.json"))).unwrap();
        ConstraintAutomaton::from_json_str(&json).unwrap();
    }
}

#[test]
fn build_output_is_byte_stable() {
    let dir = TempDir::new().unwrap();
    let file = gen(dir.path(), "asyncmerger", 3);
    let run = || {
        stdout(&reoc(&["build", &file, "--strategy", "mixed", "--emit", "ca-json", "--emit", "regions"], dir.path()))
    };
    let first = run();
    assert!(!first.is_empty());
    assert_eq!(first, run());
}

#[test]
fn c_emission_reports_not_built() {
    let dir = TempDir::new().unwrap();
    let file = gen(dir.path(), "alternator", 3);
    let o = reoc(&["build", &file, "--strategy", "mixed", "--emit", "c", "-o", "out"], dir.path());
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("not built"));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn budget_overrun_exits_three_with_fold_log() {
    let dir = TempDir::new().unwrap();
    let file = gen(dir.path(), "alternator", 20);
    let args = ["build", &file, "--strategy", "middleground", "--budget", "100000", "--emit", "stats"];
    let first = reoc(&args, dir.path());
    assert_eq!(code(&first), 3);
    let err = stderr(&first);
    assert!(err.contains("budget 100000 exceeded"), "{err}");
    assert!(err.contains("fold steps:\n  unit 0 step 0: +"), "{err}");
    assert!(stdout(&first).contains(",budget_exceeded"));
    assert_eq!(err, stderr(&reoc(&args, dir.path())));
}

#[test]
fn equivalence_exit_codes() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("sync.reoc"), SYNC).unwrap();
    fs::write(dir.path().join("fifo.reoc"), FIFO).unwrap();
    let chain = gen(dir.path(), "sync_chain", 4);
    let o = reoc(&["equiv", "sync.reoc", &chain], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(stdout(&o), "equivalent\n");
    assert_eq!(code(&reoc(&["equiv", "sync.reoc", "fifo.reoc"], dir.path())), 4);
    let alt = gen(dir.path(), "alternator", 2);
    assert_eq!(code(&reoc(&["equiv", "sync.reoc", &alt], dir.path())), 4);
}

#[test]
fn equivalence_accepts_automaton_json() {
    let dir = TempDir::new().unwrap();
    let file = gen(dir.path(), "alternator", 3);
    let o = reoc(&["build", &file, "--strategy", "centralized", "--emit", "ca-json", "-o", "out"], dir.path());
    assert_eq!(code(&o), 0);
    let o = reoc(&["equiv", "out/unit_0.json", &file], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

fn script(dir: &Path, name: &str, body: &str) -> String {
    fs::write(dir.join(name), body).unwrap();
    name.to_string()
}

#[test]
fn run_prints_an_accepted_trace() {
    let dir = TempDir::new().unwrap();
    let file = gen(dir.path(), "alternator", 3);
    let s = script(
        dir.path(),
        "s.json",
        r#"{"writes":{"P1":["a","a"],"P2":["b","b"],"P3":["c","c"]},"reads":{"Z":6},"seed":7}"#,
    );
    for strategy in ["centralized", "distributed", "middleground", "mixed"] {
        let o = reoc(&["run", &file, "--strategy", strategy, "--script", &s, "--validate"], dir.path());
        assert_eq!(code(&o), 0, "{strategy}: {}", stderr(&o));
        let trace: Trace = serde_json::from_str(&stdout(&o)).unwrap();
        let z: Vec<&str> = trace.iter().filter_map(|t| t.data.get("Z.ext")).map(String::as_str).collect();
        assert_eq!(z, ["a", "b", "c", "a", "b", "c"], "{strategy}");
    }
}

#[test]
fn run_reports_deadlock_with_exit_five() {
    let dir = TempDir::new().unwrap();
    let file = gen(dir.path(), "alternator", 2);
    let s = script(dir.path(), "s.json", r#"{"writes":{"P1":["*"],"P2":["*"]},"reads":{"Z":3}}"#);
    let o = reoc(&["run", &file, "--strategy", "mixed", "--script", &s], dir.path());
    assert_eq!(code(&o), 5);
    assert!(stderr(&o).contains("pending [Z.ext:1]"), "{}", stderr(&o));
}

#[test]
fn run_rejects_bad_scripts() {
    let dir = TempDir::new().unwrap();
    let file = gen(dir.path(), "alternator", 2);
    let s = script(dir.path(), "s.json", r#"{"writes":{"Q":["*"]},"reads":{}}"#);
    assert_eq!(code(&reoc(&["run", &file, "--strategy", "mixed", "--script", &s], dir.path())), 2);
    let s = script(dir.path(), "t.json", "not json");
    assert_eq!(code(&reoc(&["run", &file, "--strategy", "mixed", "--script", &s], dir.path())), 2);
}

#[test]
fn bench_and_stats_write_csv() {
    let dir = TempDir::new().unwrap();
    let file = gen(dir.path(), "asyncmerger", 2);
    let s = script(dir.path(), "s.json", r#"{"writes":{"P1":["*"],"P2":["*"]},"reads":{"Z":2}}"#);
    let o = reoc(&["bench", &file, "--strategy", "mixed", "--script", &s, "--reps", "3"], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).lines().nth(1).unwrap().starts_with("asyncmerger_2,2,mixed,2,"));

    let o = reoc(
        &[
            "stats",
            "--family",
            "alternator",
            "--k-from",
            "3",
            "--k-to",
            "5",
            "--strategy",
            "centralized",
            "-o",
            "curve.csv",
        ],
        dir.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("curve.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows.len(), 4);
    for (k, row) in (3..=5).zip(&rows[1..]) {
        assert!(row.starts_with(&format!("alternator_{k},{k},centralized,1,")), "{row}");
    }
}

#[test]
fn scan_prints_json_report() {
    let dir = TempDir::new().unwrap();
    let file = gen(dir.path(), "alternator", 4);
    let o = reoc(&["scan", &file], dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["buffers"], 3);
    assert_eq!(v["patterns"].as_array().unwrap().iter().filter(|p| p["reachable"] == true).count(), 0);
}

#[test]
fn validated_trace_matches_library_check() {
    let dir = TempDir::new().unwrap();
    let file = gen(dir.path(), "asyncmerger", 3);
    let s = script(dir.path(), "s.json", r#"{"writes":{"P1":["x"],"P2":["y"],"P3":["x"]},"reads":{"Z":3},"seed":2}"#);
    let o = reoc(&["run", &file, "--strategy", "distributed", "--script", &s], dir.path());
    assert_eq!(code(&o), 0);
    let trace: Trace = serde_json::from_str(&stdout(&o)).unwrap();
    let c = reoc::connector::parse_connector(&fs::read_to_string(dir.path().join(&file)).unwrap()).unwrap();
    let c = c.with_domain(Some(vec!["x".into(), "y".into()])).unwrap();
    let big = reoc::compile::compile(&c, reoc::compile::Strategy::Centralized, &c.data_domain(), 1_000_000)
        .unwrap()
        .units
        .remove(0)
        .automaton;
    assert!(accepts(&big, &trace));
}
