use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn hammfix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hammfix"))
        .args(args)
        .env_remove("HAMMFIX_THREADS")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "{e}: stdout {} stderr {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

#[test]
fn solve_unit_parameters() {
    let out = hammfix(&["solve", "1", "1"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["classification"]["regime"], "unique");
    let fps = v["fixed_points"].as_array().unwrap();
    assert_eq!(fps.len(), 1);
    for key in ["cubic_residual", "hammerstein_residual", "rk_residual"] {
        assert!(fps[0][key].as_f64().unwrap() < 1e-6, "{key}");
    }
}

#[test]
fn solve_three_regime() {
    let out = hammfix(&["solve", "12", "1"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["classification"]["regime"], "three");
    assert_eq!(v["fixed_points"].as_array().unwrap().len(), 3);
    assert_eq!(v["count"], 3);
}

#[test]
fn negative_parameter_is_usage_error() {
    let out = hammfix(&["solve", "-1", "1"]);
    assert_eq!(code(&out), 1);
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("usage"));
}

#[test]
fn flag_form_matches_positional_form() {
    let a = hammfix(&["solve", "12", "1"]);
    let b = hammfix(&["solve", "--a", "12", "--b", "1"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(code(&hammfix(&["solve", "12", "1", "--a", "11"])), 1);
}

#[test]
fn unknown_flag_and_missing_parameters() {
    assert_eq!(code(&hammfix(&["solve", "1", "1", "--colour", "red"])), 1);
    assert_eq!(code(&hammfix(&["solve", "1"])), 1);
    assert_eq!(code(&hammfix(&["frobnicate"])), 1);
    assert_eq!(code(&hammfix(&["solve", "1", "1", "--quad-tol", "0"])), 1);
    assert_eq!(code(&hammfix(&["solve", "1", "1", "--format", "csv"])), 1);
    assert_eq!(code(&hammfix(&["--help"])), 0);
}

#[test]
fn unreadable_config() {
    let out = hammfix(&["solve", "1", "1", "--config", "/nonexistent/hammfix.conf"]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("config"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.conf");
    std::fs::write(&path, "a = 1\nwhat is this\n").unwrap();
    assert_eq!(code(&hammfix(&["solve", "--config", path.to_str().unwrap()])), 3);
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.conf");
    std::fs::write(&path, "# three-solution point\na = 12\nb = 1\nresidual_tol = 1e-6\n").unwrap();
    let p = path.to_str().unwrap();

    let from_file = json(&hammfix(&["solve", "--config", p]));
    assert_eq!(from_file["a"].as_f64(), Some(12.0));
    assert_eq!(from_file["count"], 3);

    let overridden = json(&hammfix(&["solve", "--config", p, "--a", "1"]));
    assert_eq!(overridden["a"].as_f64(), Some(1.0));
    assert_eq!(overridden["count"], 1);

    let positional = json(&hammfix(&["solve", "2", "1", "--config", p]));
    assert_eq!(positional["a"].as_f64(), Some(2.0));
}

#[test]
fn threshold_reports_count_mismatch() {
    let thr = format!("{:.17}", 35.0 * (44.0 + 15.0 * std::f64::consts::PI) / 318.0);
    let out = hammfix(&["solve", &thr, "1"]);
    assert_eq!(code(&out), 2);
    let v = json(&out);
    assert_eq!(v["classification"]["regime"], "two");
    assert_eq!(v["count_matches_regime"], false);
    assert_eq!(v["fixed_points"][0]["multiplicity"], 3);
}

#[test]
fn scan_csv_layout() {
    let out = hammfix(&["scan", "--format", "csv", "--a-min", "1", "--a-max", "20", "--a-steps", "40"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(
        header,
        ["a", "b", "threshold", "regime", "count", "xi1", "xi2", "xi3", "max_residual"]
    );
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 40);
    for r in &rows {
        let a: f64 = r[0].parse().unwrap();
        let count: usize = r[4].parse().unwrap();
        assert_eq!(count, if a < 10.0293 { 1 } else { 3 });
        assert_eq!(r[3].to_string(), if a < 10.0293 { "unique" } else { "three" });
        assert_eq!((5..8).map(|i| &r[i]).filter(|s| !s.is_empty()).count(), count);
        // 12 significant digits at most
        let digits = r[2].chars().filter(char::is_ascii_digit).count();
        assert!(digits <= 12, "{}", &r[2]);
    }
}

#[test]
fn scan_is_deterministic_across_thread_counts() {
    let run = |threads: &str, format: &str| {
        Command::new(env!("CARGO_BIN_EXE_hammfix"))
            .args(["scan", "--format", format, "--a-steps", "12", "--b-min", "0.5", "--b-max", "2", "--b-steps", "3"])
            .env("HAMMFIX_THREADS", threads)
            .output()
            .unwrap()
    };
    for format in ["json", "csv"] {
        let one = run("1", format);
        let four = run("4", format);
        assert_eq!(code(&one), 0);
        assert_eq!(one.stdout, four.stdout);
        assert_eq!(one.stdout, run("1", format).stdout);
    }
    assert_eq!(code(&run("zero", "json")), 1);
}

#[test]
fn json_is_byte_identical_between_runs() {
    for args in [["coeffs", "12", "1"], ["solve", "12", "1"], ["gibbs-check", "1", "1"]] {
        let a = hammfix(&args);
        let b = hammfix(&args);
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

fn save(args: &[&str], path: &Path) -> i32 {
    let mut full: Vec<&str> = args.to_vec();
    full.extend(["--out", path.to_str().unwrap()]);
    let out = hammfix(&full);
    assert!(out.stdout.is_empty());
    code(&out)
}

#[test]
fn verify_round_trip_reproduces_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let saved = dir.path().join("solve.json");
    assert_eq!(save(&["solve", "12", "1"], &saved), 0);
    let out = hammfix(&["verify", "--report", saved.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    assert_eq!(v["round_trip"]["agree"], true);
    assert_eq!(v["round_trip"]["recomputed"], serde_json::json!([true, true, true, true]));

    // a failing report stays failing, and the verdicts still agree
    let thr = format!("{:.17}", 35.0 * (44.0 + 15.0 * std::f64::consts::PI) / 318.0);
    let failing = dir.path().join("threshold.json");
    assert_eq!(save(&["verify", &thr, "1"], &failing), 2);
    let out = hammfix(&["verify", "--report", failing.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert_eq!(json(&out)["round_trip"]["agree"], true);

    // a tampered fixed point is caught
    let mut report: Value = serde_json::from_str(&std::fs::read_to_string(&saved).unwrap()).unwrap();
    report["fixed_points"][1]["x0"] = serde_json::json!(0.5);
    let tampered = dir.path().join("tampered.json");
    std::fs::write(&tampered, serde_json::to_string(&report).unwrap()).unwrap();
    let out = hammfix(&["verify", "--report", tampered.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    let v = json(&out);
    assert_eq!(v["round_trip"]["agree"], false);
    assert_eq!(v["fixed_points"][1]["pass"], false);

    assert_eq!(code(&hammfix(&["verify", "--report", "/nonexistent.json"])), 3);
}

#[test]
fn coeffs_reports_both_linear_coefficients() {
    let out = hammfix(&["coeffs", "12", "1"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let lc = &v["linear_coefficient"];
    let (f, t, d) = (
        lc["factorised"].as_f64().unwrap(),
        lc["transposed"].as_f64().unwrap(),
        lc["difference"].as_f64().unwrap(),
    );
    assert!(d.abs() > 1e-3);
    assert!((f - t - d).abs() < 1e-15);
    assert!(v["max_discrepancy"].as_f64().unwrap() < 1e-8);
    assert_eq!(v["discriminant"]["regime"], "positive");
    // b = 0 is allowed for coefficients
    assert_eq!(code(&hammfix(&["coeffs", "1", "0"])), 0);
}

#[test]
fn gibbs_check_passes_and_budget_is_enforced() {
    let out = hammfix(&["gibbs-check", "12", "1", "--m", "16"]);
    assert_eq!(code(&out), 0);
    let v = json(&out);
    let checks = v["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 3);
    for c in checks {
        assert!(c["marginal_discrepancy"].as_f64().unwrap() < 1e-6);
        assert!(c["eq5_residual"].as_f64().unwrap() < 1e-6);
        for key in ["n", "m", "k", "root_branching", "Jbeta"] {
            assert!(!c[key].is_null(), "{key}");
        }
    }

    let half_tree = hammfix(&["gibbs-check", "1", "1", "--root-branching", "3"]);
    assert_eq!(code(&half_tree), 0);
    assert_eq!(json(&half_tree)["checks"][0]["root_branching"], 3);

    let out = hammfix(&["gibbs-check", "1", "1", "--n", "2"]);
    assert_eq!(code(&out), 4);
    assert!(String::from_utf8_lossy(&out.stderr).contains("budget"));
    assert_eq!(code(&hammfix(&["gibbs-check", "1", "1", "--root-branching", "7"])), 1);
}
