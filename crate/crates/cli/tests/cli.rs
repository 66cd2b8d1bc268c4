use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use egs_core::quotient::read_elements;
use egs_core::theory::VerificationReport;
use tempfile::TempDir;

const GUPTA_SIDKI: &str = r#"{"p":3,"spaces":[[],[],[[1,2]]]}"#;
const DIHEDRAL: &str = r#"{"p":2,"spaces":[[],[[1]]]}"#;
const NON_PERIODIC_3: &str = r#"{"p":3,"spaces":[[],[],[[1,1]]]}"#;
const FULL_3: &str = r#"{"p":3,"spaces":[[],[],[[1,0],[0,1]]]}"#;

struct Env {
    dir: TempDir,
}

impl Env {
    fn new() -> Self {
        Env {
            dir: TempDir::new().unwrap(),
        }
    }

    fn spec(&self, name: &str, text: &str) -> PathBuf {
        let path = self.dir.path().join(name);
        fs::write(&path, text).unwrap();
        path
    }

    fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn egs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_egs"))
        .args(args)
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn info_gupta_sidki() {
    let env = Env::new();
    let gs = env.spec("gs.json", GUPTA_SIDKI);
    let out = egs(&["info", s(&gs), "--max-level", "4"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("periodic GGS; exp: 3,3,9,9; |K2|=27\n"));
}

#[test]
fn info_non_periodic() {
    let env = Env::new();
    let d = env.spec("d.json", DIHEDRAL);
    let out = egs(&["info", s(&d)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("non-periodic GGS; exp: 2,4,8,16"));
}

#[test]
fn info_json() {
    let env = Env::new();
    let gs = env.spec("gs.json", GUPTA_SIDKI);
    let out = egs(&["info", s(&gs), "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["family"], "GGS");
    assert_eq!(v["periodic"], true);
    assert_eq!(v["predicted_k2_order"], 27);
    assert_eq!(v["predicted_exponents"], serde_json::json!([3, 3, 9, 9]));
}

#[test]
fn input_errors_exit_2() {
    let env = Env::new();
    let null = env.spec("null.json", r#"{"p":3,"spaces":[[],[],[]]}"#);
    let out = egs(&["info", s(&null)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("not a multi-EGS group"));

    let bad = env.spec("bad.json", r#"{"p":4,"spaces":[]}"#);
    assert_eq!(egs(&["info", s(&bad)]).status.code(), Some(2));
    assert_eq!(egs(&["info", s(&env.path("missing.json"))]).status.code(), Some(2));

    let gs = env.spec("gs.json", GUPTA_SIDKI);
    assert_eq!(egs(&["order", s(&gs), "c0^", "--level", "2"]).status.code(), Some(2));
    assert_eq!(egs(&["order", s(&gs), "a", "--level", "0"]).status.code(), Some(2));
    assert_eq!(
        egs(&["info", s(&gs), "--format", "csv"]).status.code(),
        Some(2)
    );
    assert_eq!(egs(&["nonsense"]).status.code(), Some(2));
}

#[test]
fn verify_pass() {
    let env = Env::new();
    let gs = env.spec("gs.json", GUPTA_SIDKI);
    let out = egs(&["verify", s(&gs), "--max-level", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("brute exp"));
    assert!(text.contains("verdict: PASS"));
}

#[test]
fn verify_json_round_trips() {
    let env = Env::new();
    let d = env.spec("d.json", DIHEDRAL);
    let report_path = env.path("report.json");
    let out = egs(&[
        "verify",
        s(&d),
        "--max-level",
        "4",
        "--format",
        "json",
        "--output",
        s(&report_path),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&report_path).unwrap();
    let report = VerificationReport::from_json(&text).unwrap();
    assert!(report.passed());
    assert_eq!(report.exponents(), vec![(1, 2), (2, 4), (3, 8), (4, 16)]);
    assert!(!report.witnesses.is_empty());
    assert_eq!(report.to_json(), text.trim_end());
}

#[test]
fn verify_corrupted_prediction_exits_1() {
    let env = Env::new();
    let gs = env.spec("gs.json", GUPTA_SIDKI);
    let out = egs(&["verify", s(&gs), "--max-level", "2", "--corrupt-prediction"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stdout(&out).contains("MISMATCH"));
}

#[test]
fn verify_limit_exits_3_with_partial_report() {
    let env = Env::new();
    let full = env.spec("full.json", FULL_3);
    let out = egs(&["verify", s(&full), "--max-level", "3", "--max-elements", "1000"]);
    assert_eq!(out.status.code(), Some(3));
    let text = stdout(&out);
    assert!(text.contains("incomplete"));
    assert!(text.contains("verdict: FAIL"));
    assert!(stderr(&out).contains("limit"));
}

#[test]
fn memory_hint_warns() {
    let env = Env::new();
    let gs = env.spec("gs.json", GUPTA_SIDKI);
    let out = egs(&["quotient", s(&gs), "--level", "2", "--memory-hint", "10"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stderr(&out).contains("warning"));
}

#[test]
fn order_examples() {
    let env = Env::new();
    let gs = env.spec("gs.json", GUPTA_SIDKI);
    let np = env.spec("np.json", NON_PERIODIC_3);
    assert_eq!(stdout(&egs(&["order", s(&gs), "a", "--level", "3"])), "3\n");
    assert_eq!(stdout(&egs(&["order", s(&gs), "c0", "--level", "2"])), "3\n");
    assert_eq!(stdout(&egs(&["order", s(&np), "a^2 c0", "--level", "4"])), "81\n");
    let out = egs(&["order", s(&np), "a^2 c0", "--level", "2", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["order"], 9);
}

#[test]
fn quotient_formats() {
    let env = Env::new();
    let gs = env.spec("gs.json", GUPTA_SIDKI);
    let text = stdout(&egs(&["quotient", s(&gs), "--level", "2"]));
    assert!(text.starts_with("size=27 exp=3\n"));
    let csv = stdout(&egs(&["quotient", s(&gs), "--level", "2", "--format", "csv"]));
    assert_eq!(csv, "order,count\n1,1\n3,26\n");
    let json = stdout(&egs(&["quotient", s(&gs), "--level", "2", "--format", "json"]));
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["size"], 27);
    assert_eq!(v["exponent"], 3);
}

#[test]
fn threads_do_not_change_output() {
    let env = Env::new();
    let np = env.spec("np.json", NON_PERIODIC_3);
    let runs: Vec<Vec<u8>> = ["1", "3"]
        .iter()
        .map(|t| egs(&["export", s(&np), "--level", "3", "--threads", t]).stdout)
        .collect();
    assert_eq!(runs[0], runs[1]);
    let q: Vec<String> = ["1", "4"]
        .iter()
        .map(|t| stdout(&egs(&["quotient", s(&np), "--level", "3", "--threads", t])))
        .collect();
    assert_eq!(q[0], q[1]);
}

#[test]
fn export_round_trips() {
    let env = Env::new();
    let gs = env.spec("gs.json", GUPTA_SIDKI);
    let first = env.path("k2.txt");
    let out = egs(&["export", s(&gs), "--level", "2", "--output", s(&first)]);
    assert_eq!(out.status.code(), Some(0));
    let bytes = fs::read(&first).unwrap();
    let (shape, elements) = read_elements(bytes.as_slice()).unwrap();
    assert_eq!(shape.depth(), 2);
    assert_eq!(elements.len(), 27);
    let mut again = Vec::new();
    egs_core::quotient::write_elements(
        &mut again,
        shape,
        elements.iter().map(|g| g.labels()),
    )
    .unwrap();
    assert_eq!(again, bytes);
    assert_eq!(
        egs(&["export", s(&gs), "--level", "2", "--format", "json"]).status.code(),
        Some(2)
    );
}

#[test]
fn cache_dir_is_reused() {
    let env = Env::new();
    let gs = env.spec("gs.json", GUPTA_SIDKI);
    let cache = env.path("cache");
    fs::create_dir(&cache).unwrap();
    let args = ["quotient", s(&gs), "--level", "3", "--cache-dir", s(&cache)];
    let first = stdout(&egs(&args));
    assert_eq!(fs::read_dir(&cache).unwrap().count(), 1);
    let second = stdout(&egs(&args));
    assert!(first.starts_with("size=2187 exp=9"));
    assert_eq!(first.lines().next(), second.lines().next());
}

#[test]
fn witness_orders() {
    let env = Env::new();
    let np = env.spec("np.json", NON_PERIODIC_3);
    let out = egs(&["witness", s(&np), "--max-level", "4", "--j", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "a^2 c0: 3,9,27,81\n");
    let out = egs(&["witness", s(&np), "--max-level", "3", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 3);
}

#[test]
fn witness_on_periodic_spec_is_input_error() {
    let env = Env::new();
    let gs = env.spec("gs.json", GUPTA_SIDKI);
    let out = egs(&["witness", s(&gs)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("Lemma P requires non-periodic GGS"));
}

#[test]
fn witness_f1() {
    let env = Env::new();
    let gs = env.spec("gs.json", GUPTA_SIDKI);
    let out = egs(&["witness", s(&gs), "--h", "c1 c2", "--max-level", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("f1: c0^-1 c1 c0 c0^-2 c1 c0^2\n"));
    assert!(text.contains("n=3 sections ok"));
}

#[test]
fn preimage_found_and_missing() {
    let env = Env::new();
    let gs = env.spec("gs.json", GUPTA_SIDKI);
    let out = egs(&["preimage", s(&gs), "--level", "3", "--target", "1=c0"]);
    assert_eq!(out.status.code(), Some(0));
    let word = stdout(&out);
    let order = egs(&["order", s(&gs), word.trim(), "--level", "3"]);
    assert_eq!(order.status.code(), Some(0));

    // a is outside the first level stabilizer, so no stabilizer word has
    // a as a section together with trivial others at depth 2
    let out = egs(&[
        "preimage", s(&gs), "--level", "2", "--target", "1=a", "--target", "2=", "--target", "3=",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "not found\n");

    let out = egs(&["preimage", s(&gs), "--level", "3", "--target", "4=a"]);
    assert_eq!(out.status.code(), Some(2));
}
