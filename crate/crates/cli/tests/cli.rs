//! End-to-end checks of the command-line surface: output shapes, exit
//! codes, and the timing-sweep discontinuity.

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_seqlearn"))
}

fn write_config(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join("seqlearn-cli-tests");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn stdout(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

const LINE_CONFIG: &str = "\
structure = linear
cost = 0.1
capacity = one
policy = line
N = 30
T = 4000
seed = 0
";

#[test]
fn solve_emits_rows_and_limit_summary() {
    let config = write_config("solve.cfg", LINE_CONFIG);
    let output = bin().args(["solve", "--config"]).arg(&config).output().unwrap();
    assert!(output.status.success());
    let text = stdout(&output);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# seed=0");
    assert_eq!(lines[1], "n,cutoff,p_correct");
    assert!(lines[2].starts_with("1,0,0.75"));
    assert!(!text.contains('\r'));

    let output = bin()
        .args(["solve", "--format", "json", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    let json: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    let summary = &json["summary"];
    assert!((summary["limit_cutoff"].as_f64().unwrap() - 0.6).abs() < 1e-8);
    assert!((summary["limit_probability"].as_f64().unwrap() - 0.9).abs() < 1e-8);
    let candidates = &summary["limit_probability_candidates"];
    assert!((candidates["fixed_point_system"].as_f64().unwrap() - 0.9).abs() < 1e-12);
    assert!((candidates["quadratic_closed_form"].as_f64().unwrap() - 0.96).abs() < 1e-12);
}

#[test]
fn simulate_writes_curve_and_summary() {
    let config = write_config("simulate.cfg", LINE_CONFIG);
    let out = std::env::temp_dir().join("seqlearn-cli-tests/curve.csv");
    let output = bin()
        .args(["simulate", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success());
    let csv = std::fs::read_to_string(&out).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "# seed=0 trials=4000");
    assert_eq!(lines[1], "n,estimate,lo,hi,cond_estimate,obs_freq");
    assert_eq!(lines.len(), 32);
    let json: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(json["trials"].as_u64(), Some(4000));

    // seed and trial overrides are honored and echoed
    let output = bin()
        .args(["simulate", "--seed", "7", "--trials", "100", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success());
    let csv = std::fs::read_to_string(&out).unwrap();
    assert!(csv.starts_with("# seed=7 trials=100\n"));
}

#[test]
fn simulate_rejects_zero_trials() {
    let config = write_config("zero-trials.cfg", LINE_CONFIG);
    let output = bin()
        .args(["simulate", "--trials", "0", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn bad_config_exits_2() {
    let config = write_config("bad.cfg", "structure = linear\ncost = teapot\n");
    let output = bin().args(["solve", "--config"]).arg(&config).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let missing = std::env::temp_dir().join("seqlearn-cli-tests/nope.cfg");
    let output = bin().args(["solve", "--config"]).arg(&missing).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn asymmetric_structure_exits_3_on_line_solver() {
    // an asymmetric tabulated structure: the line solver needs symmetry
    let table = write_config(
        "asym.structure",
        "tabulated\n-0.8 1.6 0.4\n-0.2 1.2 0.9\n0.2 0.9 1.2\n0.8 0.5 1.7\n",
    );
    let body = format!(
        "structure = tabulated:{}\ncost = 0.1\ncapacity = one\npolicy = line\nN = 10\nT = 100\n",
        table.file_name().unwrap().to_str().unwrap()
    );
    let config = write_config("asym.cfg", &body);
    let output = bin().args(["solve", "--config"]).arg(&config).output().unwrap();
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn sweep_orders_benchmarks_and_validates_range() {
    let config = write_config("sweep.cfg", LINE_CONFIG);
    let output = bin()
        .args(["sweep", "--param", "cost", "--lo", "0.0", "--hi", "0.25", "--steps", "6", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = stdout(&output);
    // at c = 0 every learning column is 1
    let first_row = text.lines().nth(2).unwrap();
    assert_eq!(first_row, "0,1,1,1,");
    // maximal column is 1 - c^2 rowwise
    for line in text.lines().skip(2).take(6) {
        let cols: Vec<&str> = line.split(',').collect();
        let c: f64 = cols[0].parse().unwrap();
        let maximal: f64 = cols[2].parse().unwrap();
        assert!((maximal - (1.0 - c * c)).abs() < 1e-12);
    }
    assert!(text.contains("\"ordering_ok\": true"));

    let output = bin()
        .args(["sweep", "--param", "cost", "--lo", "0.3", "--hi", "0.1", "--steps", "6", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn observation_first_sweep_drops_discontinuously() {
    let body = LINE_CONFIG.replace("policy = line\n", "policy = line\ntiming = observationfirst\n");
    let config = write_config("sweep-of.cfg", &body);
    let output = bin()
        .args(["sweep", "--param", "cost", "--lo", "0.0", "--hi", "0.1", "--steps", "11", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(output.status.success());
    let text = stdout(&output);
    let equilibria: Vec<f64> = text
        .lines()
        .skip(2)
        .take(11)
        .map(|l| l.split(',').nth(3).unwrap().parse().unwrap())
        .collect();
    // initiation is worthwhile up to Y(1) - F0(0) = 0.0625, then the
    // limit falls abruptly to the no-observation level
    for (i, &value) in equilibria.iter().enumerate() {
        let c = 0.01 * i as f64;
        if c <= 0.0625 {
            assert_eq!(value, 1.0, "c = {c}");
        } else {
            assert_eq!(value, 0.75, "c = {c}");
        }
    }
}

#[test]
fn solve_full_history_reports_herding() {
    let config = write_config(
        "herding.cfg",
        "structure = bounded:0.5\ncost = 0.0\ncapacity = full\npolicy = fullset\nN = 120\nT = 100\n",
    );
    let output = bin()
        .args(["solve", "--format", "json", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(output.status.success());
    let json: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    let summary = &json["summary"];
    assert!((summary["herding_bound"].as_f64().unwrap() - 0.9).abs() < 1e-12);
    assert!(summary["limit_probability"].as_f64().unwrap() <= 0.9 + 1e-3);
    assert!(summary["cascade_mass_final"].as_f64().unwrap() > 0.0);
}

#[test]
fn verify_suites_and_exit_codes() {
    let output = bin().args(["verify", "signals"]).output().unwrap();
    assert!(output.status.success());
    let json: serde_json::Value = serde_json::from_str(&stdout(&output)).unwrap();
    assert_eq!(json["passed"].as_bool(), Some(true));
    assert_eq!(json["suite"].as_str(), Some("signals"));

    let output = bin().args(["verify", "bogus"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}
