use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn sharplll(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sharplll"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

const TWO_EVENTS: &str = r#"{
  "events": [
    {"id": 0, "occurring": [["0", "0"]], "vbl": [0, 1]},
    {"id": 1, "occurring": [["1", "1"]], "vbl": [0, 1]}
  ],
  "variables": [
    {"probabilities": ["1/2", "1/2"], "domain": ["0", "1"], "id": 0},
    {"probabilities": ["1/2", "1/2"], "domain": ["0", "1"], "id": 1}
  ]
}
"#;

#[test]
fn gen_is_deterministic_and_canonical() {
    let dir = TempDir::new().unwrap();
    for name in ["a.json", "b.json"] {
        let out = sharplll(&["--seed", "11", "gen", "--family", "k-sat-like", "--n", "25", "--out", name], dir.path());
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = fs::read_to_string(dir.path().join("a.json")).unwrap();
    assert_eq!(a, fs::read_to_string(dir.path().join("b.json")).unwrap());
    assert!(a.ends_with("}\n"));

    let other = sharplll(&["--seed", "12", "gen", "--family", "k-sat-like", "--n", "25"], dir.path());
    assert_ne!(stdout(&other), a);
}

#[test]
fn two_event_instance_runs_and_verifies() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("two.json"), TWO_EVENTS).unwrap();
    let out = sharplll(&["run", "two.json", "--assignment-out", "a.json"], dir.path());
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(report["outcome"], "verified");
    assert_eq!(report["criterion"]["value"], "1/2");
    assert!(report.get("wall_time_ms").is_none());

    let verify = sharplll(&["verify", "two.json", "a.json"], dir.path());
    assert_eq!(code(&verify), 0);

    fs::write(dir.path().join("bad_assignment.json"), "{\"0\": \"0\", \"1\": \"0\"}\n").unwrap();
    let failing = sharplll(&["verify", "two.json", "bad_assignment.json"], dir.path());
    assert_eq!(code(&failing), 1);

    fs::write(dir.path().join("partial.json"), "{\"0\": \"0\"}\n").unwrap();
    assert_eq!(code(&sharplll(&["verify", "two.json", "partial.json"], dir.path())), 3);
}

#[test]
fn run_reports_are_reproducible_without_timing() {
    let dir = TempDir::new().unwrap();
    sharplll(&["--seed", "3", "gen", "--n", "30", "--out", "i.json"], dir.path());
    let a = sharplll(&["--seed", "5", "run", "i.json", "--order", "random"], dir.path());
    let b = sharplll(&["--seed", "5", "run", "i.json", "--order", "random"], dir.path());
    assert_eq!(code(&a), 0);
    assert_eq!(stdout(&a), stdout(&b));

    let timed = sharplll(&["run", "i.json", "--timing"], dir.path());
    let report: serde_json::Value = serde_json::from_str(&stdout(&timed)).unwrap();
    assert!(report["wall_time_ms"].is_number());
}

#[test]
fn local_mode_with_adversarial_ids() {
    let dir = TempDir::new().unwrap();
    sharplll(&["--seed", "9", "gen", "--family", "star-hyperedge", "--n", "40", "--out", "i.json"], dir.path());
    let mut palettes = Vec::new();
    for ids in ["sequential", "reversed", "random"] {
        let out = sharplll(&["run", "i.json", "--mode", "local", "--ids", ids], dir.path());
        assert_eq!(code(&out), 0, "{ids}: {}", String::from_utf8_lossy(&out.stderr));
        let report: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        assert_eq!(report["outcome"], "verified");
        let log = &report["round_log"];
        assert_eq!(log["fixing_rounds"].as_u64().unwrap(), 3 * log["colors_used"].as_u64().unwrap());
        palettes.push(log["colors_used"].as_u64().unwrap());
    }
    assert!(palettes.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn malformed_inputs_exit_with_input_error() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("trunc.json"), &TWO_EVENTS[..60]).unwrap();
    assert_eq!(code(&sharplll(&["run", "trunc.json"], dir.path())), 3);

    let bad_prob = TWO_EVENTS.replacen("\"1/2\", \"1/2\"", "\"1/2\", \"1/3\"", 1);
    fs::write(dir.path().join("prob.json"), bad_prob).unwrap();
    assert_eq!(code(&sharplll(&["run", "prob.json"], dir.path())), 3);

    assert_eq!(code(&sharplll(&["run", "missing.json"], dir.path())), 3);
    assert_eq!(code(&sharplll(&["run"], dir.path())), 3);
    assert_eq!(code(&sharplll(&["--tol=-1", "run", "missing.json"], dir.path())), 3);
}

#[test]
fn criterion_failure_needs_force() {
    let dir = TempDir::new().unwrap();
    // p = 1/2, d = 1: p * 2^d = 1.
    let tight = TWO_EVENTS.replace(r#"[["1", "1"]]"#, r#"[["1", "1"], ["0", "1"]]"#);
    fs::write(dir.path().join("tight.json"), tight).unwrap();
    let out = sharplll(&["run", "tight.json"], dir.path());
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--force"));
}

#[test]
fn probe_rank_two_is_clean_and_seeded() {
    let dir = TempDir::new().unwrap();
    let a = sharplll(&["--seed", "4", "probe", "--r", "2", "--samples", "200"], dir.path());
    let b = sharplll(&["--seed", "4", "probe", "--r", "2", "--samples", "200"], dir.path());
    assert_eq!(code(&a), 0);
    assert_eq!(stdout(&a), stdout(&b));
    let text = stdout(&a);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "sample,lambda,x_1,x_2,y_1,y_2,margin,violation");
    assert_eq!(lines.clone().count(), 200);
    assert!(lines.all(|l| l.ends_with(",0")));
    assert_eq!(code(&sharplll(&["probe", "--r", "7"], dir.path())), 3);
}

#[test]
fn boundary_table_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    let out = sharplll(&["boundary-table", "--grid", "12"], dir.path());
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 144);
    for row in rows {
        let err: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!(err <= 1e-6, "{row}");
    }
}
