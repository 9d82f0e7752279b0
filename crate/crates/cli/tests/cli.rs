use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn qobf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qobf"))
        .args(args)
        .env_remove("QOBF_MAX_QUBITS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", stdout(o)))
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

struct Work {
    dir: TempDir,
}

impl Work {
    fn new() -> Self {
        Self {
            dir: TempDir::new().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    fn write(&self, name: &str, body: &str) -> PathBuf {
        let path = self.path(name);
        fs::write(&path, body).unwrap();
        path
    }

    fn emit(&self, bench: &str, name: &str) -> PathBuf {
        let path = self.path(name);
        let o = qobf(&["bench", "--emit", bench, "--out", p(&path)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        path
    }

    fn obfuscate(&self, input: &Path, extra: &[&str]) -> (PathBuf, PathBuf, Output) {
        let out = self.path("obf.json");
        let key = self.path("obf.key.json");
        let mut args = vec!["obfuscate", "--in", p(input), "--out", p(&out)];
        args.extend_from_slice(extra);
        let o = qobf(&args);
        (out, key, o)
    }
}

const FIVE_GATES: &str = "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[2];\ncreg c[2];\n\
h q[0];\ncx q[0],q[1];\nrz(0.4) q[1];\nx q[0];\nh q[1];\nmeasure q -> c;\n";

#[test]
fn bell_global_writes_circuit_and_single_triple_key() {
    let w = Work::new();
    let bell = w.emit("bell", "bell.qasm");
    let (out, key, o) = w.obfuscate(&bell, &["--seed", "3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("final gate count: 6"));

    let circuit: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let instrs = circuit["instructions"].as_array().unwrap();
    let unitary = instrs.iter().filter(|i| i["kind"] == "unitary").count();
    let measures = instrs.iter().filter(|i| i["kind"] == "measure").count();
    assert_eq!((unitary, measures, instrs.len()), (6, 2, 8));

    let key: Value = serde_json::from_str(&fs::read_to_string(&key).unwrap()).unwrap();
    let records = key["records"].as_array().unwrap();
    assert_eq!(records.len(), 1);
    assert_eq!(records[0]["kind"], "segment");
    assert_eq!(key["mode"], "global");
}

#[test]
fn subset_size_is_recorded_in_the_key() {
    let w = Work::new();
    let input = w.write("five.qasm", FIVE_GATES);
    let (_, key, o) = w.obfuscate(&input, &["--mode", "subset", "--subset-size", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let key: Value = serde_json::from_str(&fs::read_to_string(key).unwrap()).unwrap();
    assert_eq!(key["protected"].as_array().unwrap().len(), 2);
    assert_eq!(key["subset_size"], 2);
}

#[test]
fn subset_size_needs_subset_mode() {
    let w = Work::new();
    let input = w.write("five.qasm", FIVE_GATES);
    let (_, _, o) = w.obfuscate(&input, &["--mode", "chained", "--subset-size", "2"]);
    assert_eq!(code(&o), 2);
    let (_, _, o) = w.obfuscate(&input, &["--mode", "subset", "--subset-size", "9"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn artifacts_are_byte_identical_across_runs() {
    let w = Work::new();
    let input = w.emit("qaoa", "qaoa.qasm");
    for mode in ["global", "chained", "subset"] {
        let (out, key, o) = w.obfuscate(&input, &["--mode", mode, "--seed", "99"]);
        assert_eq!(code(&o), 0);
        let first = (fs::read(&out).unwrap(), fs::read(&key).unwrap());
        let (out, key, _) = w.obfuscate(&input, &["--mode", mode, "--seed", "99"]);
        assert_eq!(
            first,
            (fs::read(out).unwrap(), fs::read(key).unwrap()),
            "{mode}"
        );
    }
}

#[test]
fn unknown_version_has_its_own_exit_code() {
    let w = Work::new();
    let input = w.write("v4.qasm", "OPENQASM 4.0;\nqreg q[1];\n");
    let o = qobf(&["simulate", "--in", p(&input)]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("OPENQASM 4.0"), "{}", stderr(&o));
}

#[test]
fn parse_io_and_usage_errors() {
    let w = Work::new();
    let bad = w.write("bad.qasm", "OPENQASM 2.0;\nqreg q[1];\nfoo q[0];\n");
    assert_eq!(code(&qobf(&["simulate", "--in", p(&bad)])), 3);
    let broken = w.write("broken.json", "{\"format\": ");
    assert_eq!(code(&qobf(&["simulate", "--in", p(&broken)])), 3);
    assert_eq!(
        code(&qobf(&["simulate", "--in", p(&w.path("missing.qasm"))])),
        1
    );
    assert_eq!(code(&qobf(&["simulate"])), 2);
    assert_eq!(code(&qobf(&["bench", "--emit", "nonsense"])), 2);
}

#[test]
fn content_sniffing_without_extension() {
    let w = Work::new();
    let bell = w.emit("bell", "bell.qasm");
    let (out, _, _) = w.obfuscate(&bell, &[]);
    let plain_json = w.path("obfuscated");
    fs::copy(&out, &plain_json).unwrap();
    let plain_qasm = w.path("original");
    fs::copy(&bell, &plain_qasm).unwrap();
    for f in [&plain_json, &plain_qasm] {
        let o = qobf(&["simulate", "--in", p(f), "--shots", "64", "--json"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        assert_eq!(json(&o)["shots"], 64);
    }
}

#[test]
fn compare_bv_pair_is_exact() {
    let w = Work::new();
    let bv = w.emit("bv:1011", "bv.qasm");
    let (out, _, _) = w.obfuscate(&bv, &["--mode", "chained"]);
    let o = qobf(&[
        "compare",
        "--in",
        p(&bv),
        "--obfuscated",
        p(&out),
        "--runs",
        "5",
        "--json",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&o);
    assert_eq!(v["semantic_accuracy_percent"], 100.0);
    assert_eq!(v["tvd"], 0.0);
    assert!(v["max_probability_gap"].as_f64().unwrap() < 1e-9);

    let text = qobf(&[
        "compare",
        "--in",
        p(&bv),
        "--obfuscated",
        p(&out),
        "--runs",
        "2",
    ]);
    assert!(stdout(&text).contains("100.00"));
}

#[test]
fn corrupted_matrix_is_rejected() {
    let w = Work::new();
    let bv = w.emit("bv:1011", "bv.qasm");
    let (out, _, _) = w.obfuscate(&bv, &[]);
    let mut doc: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let block = doc["instructions"]
        .as_array_mut()
        .unwrap()
        .iter_mut()
        .find(|i| i["kind"] == "unitary")
        .unwrap();
    let re = block["matrix"][0][0][0].as_f64().unwrap();
    block["matrix"][0][0][0] = Value::from(re + 0.1);
    let corrupted = w.write("corrupted.json", &doc.to_string());
    let o = qobf(&[
        "compare",
        "--in",
        p(&bv),
        "--obfuscated",
        p(&corrupted),
        "--runs",
        "2",
    ]);
    assert_ne!(code(&o), 0);
    assert_eq!(code(&o), 5, "{}", stderr(&o));
}

#[test]
fn accuracy_floor_sets_the_threshold_exit_code() {
    let w = Work::new();
    let bell = w.emit("bell", "bell.qasm");
    let other = w.write(
        "other.qasm",
        "OPENQASM 2.0;\ninclude \"qelib1.inc\";\nqreg q[2];\ncreg c[2];\nx q[0];\nmeasure q -> c;\n",
    );
    let o = qobf(&[
        "compare",
        "--in",
        p(&bell),
        "--obfuscated",
        p(&other),
        "--runs",
        "2",
    ]);
    assert_eq!(code(&o), 7);
    let o = qobf(&[
        "compare",
        "--in",
        p(&bell),
        "--obfuscated",
        p(&other),
        "--runs",
        "2",
        "--floor",
        "0",
    ]);
    assert_eq!(code(&o), 0);
}

#[test]
fn simulator_cap_from_environment() {
    let w = Work::new();
    let ghz = w.emit("ghz:4", "ghz.qasm");
    let o = Command::new(env!("CARGO_BIN_EXE_qobf"))
        .args(["simulate", "--in", p(&ghz)])
        .env("QOBF_MAX_QUBITS", "3")
        .output()
        .unwrap();
    assert_eq!(code(&o), 6);
    assert!(stderr(&o).contains("QOBF_MAX_QUBITS"));
    let o = Command::new(env!("CARGO_BIN_EXE_qobf"))
        .args(["simulate", "--in", p(&ghz), "--max-qubits", "4"])
        .env("QOBF_MAX_QUBITS", "3")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
}

#[test]
fn simulate_writes_csv_and_exact_distribution() {
    let w = Work::new();
    let bell = w.emit("bell", "bell.qasm");
    let csv = w.path("counts.csv");
    let o = qobf(&[
        "simulate",
        "--in",
        p(&bell),
        "--shots",
        "200",
        "--out",
        p(&csv),
    ]);
    assert_eq!(code(&o), 0);
    let body = fs::read_to_string(&csv).unwrap();
    assert!(body.starts_with("bitstring,count\n"));
    let total: u64 = body
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(1).unwrap().parse::<u64>().unwrap())
        .sum();
    assert_eq!(total, 200);
    let o = qobf(&["simulate", "--in", p(&bell), "--exact", "--json"]);
    let v = json(&o);
    assert!((v["00"].as_f64().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn analyze_reports() {
    let w = Work::new();
    let input = w.write("five.qasm", FIVE_GATES);

    let o = qobf(&["analyze", "--in", p(&input), "--json"]);
    let v = json(&o);
    assert_eq!(v["input"], "original");
    assert_eq!(v["overhead"]["final_count"], 5 + 4);
    assert!(v["security"].is_null());

    let (out, key, _) = w.obfuscate(&input, &[]);
    let o = qobf(&["analyze", "--in", p(&out)]);
    assert!(stdout(&o).contains("zero entropy"), "{}", stdout(&o));
    let o = qobf(&["analyze", "--in", p(&out), "--key", p(&key), "--json"]);
    let v = json(&o);
    assert_eq!(v["security"]["min_entropy_bits"], 0.0);
    assert!(v["security"]["warning"].is_string());
    assert_eq!(v["overhead"]["consistent"], true);

    let (out, key, _) = w.obfuscate(&input, &["--mode", "subset"]);
    let o = qobf(&["analyze", "--in", p(&out), "--key", p(&key), "--json"]);
    let v = json(&o);
    assert_eq!(v["entropy_maximal"], true);
    assert!((v["security"]["min_entropy_bits"].as_f64().unwrap() - 10f64.log2()).abs() < 1e-12);
    assert!(v["security"]["warning"].is_null());
}

#[test]
fn bench_case_study_and_suite() {
    let w = Work::new();
    let dir = w.path("case");
    let o = qobf(&[
        "bench",
        "--case-study",
        "--runs",
        "3",
        "--out",
        p(&dir),
        "--json",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&o);
    let mut top: Vec<String> = serde_json::from_value(v["top_obfuscated"].clone()).unwrap();
    top.sort();
    assert_eq!(top, ["01001", "10110"]);
    for f in [
        "obfuscated.json",
        "key.json",
        "original_counts.csv",
        "obfuscated_counts.csv",
        "report.json",
    ] {
        assert!(dir.join(f).exists(), "{f}");
    }

    let o = qobf(&[
        "bench",
        "--runs",
        "1",
        "--shots",
        "128",
        "--mode",
        "global,subset:2",
        "--jobs",
        "2",
        "--json",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(json(&o).as_array().unwrap().len(), 20);
    let o = qobf(&["bench", "--runs", "1", "--shots", "64"]);
    assert!(stdout(&o).contains("Semantic Accuracy (%)"));
    assert_eq!(
        code(&qobf(&["bench", "--mode", "sideways", "--runs", "1"])),
        2
    );
}
