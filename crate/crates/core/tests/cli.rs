use std::path::PathBuf;
use std::process::{Command, Output};

fn hpx(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hpx")).args(args).output().expect("binary runs")
}

fn domain(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("domains").join(name).to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn solve_smart_home_with_oracle_check() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.jsonl");
    let trace = dir.path().join("trace.txt");
    let o = hpx(&[
        "solve",
        &domain("smarthome.hpx"),
        "--max-steps",
        "4",
        "--max-branches",
        "1",
        "--oracle-check",
        "--report",
        report.to_str().unwrap(),
        "--trace",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "open_door\nsense_open\nif open\n  drive\nelse\n  done\n");
    let r: serde_json::Value = serde_json::from_str(std::fs::read_to_string(&report).unwrap().trim()).unwrap();
    assert_eq!(r["plan_found"], true);
    assert_eq!(r["occ_count"], 3);
    assert_eq!(r["oracle"]["checked"]["violations"], 0);
    let trace = std::fs::read_to_string(&trace).unwrap();
    assert!(trace.lines().any(|l| l == "knows(in_liv,3,3,0)"));
}

#[test]
fn too_few_steps_means_no_plan() {
    let o = hpx(&["solve", &domain("smarthome.hpx"), "--max-steps", "1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).is_empty());
    assert!(stderr(&o).contains("no plan"));
}

#[test]
fn broken_file_reports_a_span() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.hpx");
    std::fs::write(&path, "(:action a :effect f)\n(:action b :frob g)\n").unwrap();
    let o = hpx(&["validate", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("broken.hpx:2:"), "{}", stderr(&o));
}

#[test]
fn invalid_domain_and_missing_file_are_input_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mixed.hpx");
    std::fs::write(&path, "(:action a :effect f :observe g)").unwrap();
    assert_eq!(hpx(&["validate", path.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(hpx(&["solve", "/nonexistent/domain.hpx"]).status.code(), Some(2));
    assert_eq!(hpx(&["solve", &domain("smarthome.hpx"), "--frobnicate"]).status.code(), Some(2));
}

#[test]
fn validate_accepts_shipped_domains() {
    for name in ["smarthome.hpx", "two_door.hpx", "one_door.hpx", "yale.hpx"] {
        let o = hpx(&["validate", &domain(name)]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
    }
}

#[test]
fn emitted_program_matches_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("smarthome.lp");
    let o = hpx(&[
        "solve",
        &domain("smarthome.hpx"),
        "--max-steps",
        "4",
        "--max-branches",
        "1",
        "--emit-asp",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(out).unwrap(), include_str!("golden/smarthome.lp"));
}

#[test]
fn plan_formats() {
    let base = ["solve", &domain("smarthome.hpx"), "--max-steps", "4", "--max-branches", "1"];
    let atoms = hpx(&[&base[..], &["--format", "atoms"]].concat());
    assert!(stdout(&atoms).starts_with("nextBr(1,0,1)\n"));
    let json = hpx(&[&base[..], &["--format", "json-lines"]].concat());
    for line in stdout(&json).lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["action"].is_string());
    }
}

#[test]
fn bench_reports_one_json_line() {
    let o = hpx(&["bench", "bomb", "--n", "3", "--oracle-check"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    assert_eq!(out.lines().count(), 1);
    let r: serde_json::Value = serde_json::from_str(out.trim()).unwrap();
    assert_eq!(r["domain"], "bomb");
    assert_eq!(r["size"], 3);
    assert_eq!(r["plan_found"], true);
    assert_eq!(r["oracle"]["checked"]["violations"], 0);
    let counts: Vec<u64> = r["atom_counts"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
    assert!(counts.windows(2).all(|w| w[0] <= w[1]), "{counts:?}");
}

#[test]
fn bench_rejects_sizes_below_minimum() {
    let o = hpx(&["bench", "rings", "--n", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("n >= 2"));
}

#[test]
fn concurrent_yale_shooting() {
    let o = hpx(&["solve", &domain("yale.hpx"), "--concurrent", "--max-steps", "2", "--oracle-check"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("sense_loaded | shoot\n"));
}
