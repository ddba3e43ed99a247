use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn tbdf(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tbdf"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    fs::write(dir.join(name), text).unwrap();
    name.to_string()
}

/// Data rows of a CSV written by the driver, with the column names.
fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let columns = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (columns, rows)
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn coupling_above_critical_value_is_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", "[model]\nalpha = 1.3\n");
    let out = tbdf(&["free-vacuum", "--config", &cfg, "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("4/pi"));
    assert!(!tmp.path().join("o").exists());
}

#[test]
fn unknown_keys_and_mismatched_commands_are_rejected() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", "[model]\nalpah = 0.3\n");
    assert_eq!(tbdf(&["box", "--config", &cfg], tmp.path()).status.code(), Some(2));
    let cfg = write_config(tmp.path(), "d.toml", "command = \"box\"\n");
    assert_eq!(tbdf(&["screen", "--config", &cfg], tmp.path()).status.code(), Some(2));
    assert_eq!(tbdf(&["box", "--threads", "0"], tmp.path()).status.code(), Some(2));
}

#[test]
fn non_interacting_vacuum_profiles_are_closed_form() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", "[model]\nalpha = 0.0\nbeta = 2.0\n");
    let out = tbdf(&["free-vacuum", "--config", &cfg, "--out", "o"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (columns, rows) = read_csv(&tmp.path().join("o/vacuum_profiles.csv"));
    assert_eq!(columns, ["r", "f0", "f1", "d0", "d1"]);
    for row in rows {
        let e = (1.0 + row[0] * row[0]).sqrt();
        let exact = -(e).tanh() / (2.0 * e);
        assert!((row[1] - exact).abs() < 1e-12 && (row[2] - exact).abs() < 1e-12);
        assert!((row[3] - 1.0).abs() < 1e-15 && (row[4] - 1.0).abs() < 1e-15);
    }
}

#[test]
fn interacting_vacuum_writes_profiles_and_diagnostics() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", "[model]\nalpha = 0.5\n");
    let out = tbdf(&["free-vacuum", "--config", &cfg, "--out", "o"], tmp.path());
    assert!(out.status.success());
    let (_, rows) = read_csv(&tmp.path().join("o/vacuum_profiles.csv"));
    assert!(rows.iter().all(|r| r[3] >= 1.0 && r[4] >= 1.0 && r[1] < 0.0 && r[2] < 0.0));
    let diag = read_json(&tmp.path().join("o/vacuum_diagnostics.json"));
    assert!(diag["diagnostics"]["residual"].as_f64().unwrap() < 1e-10);
    assert!(diag["diagnostics"]["epsilon"].as_f64().unwrap() > 0.0);
    assert_eq!(diag["config"]["model"]["alpha"].as_f64(), Some(0.5));
}

#[test]
fn csv_header_echoes_the_full_configuration() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", "[model]\nalpha = 0.4\n[vacuum]\nmixing = 0.7\n");
    assert!(tbdf(&["free-vacuum", "--config", &cfg, "--out", "o", "--seed", "9"], tmp.path())
        .status
        .success());
    let text = fs::read_to_string(tmp.path().join("o/vacuum_profiles.csv")).unwrap();
    let echoed: String = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .map(|l| format!("{}\n", l.trim_start_matches('#').trim_start()))
        .collect();
    let table: toml::Table = toml::from_str(&echoed).unwrap();
    assert_eq!(table["command"].as_str(), Some("free-vacuum"));
    assert_eq!(table["seed"].as_integer(), Some(9));
    assert_eq!(table["model"]["alpha"].as_float(), Some(0.4));
    assert_eq!(table["vacuum"]["mixing"].as_float(), Some(0.7));
    assert!(table.contains_key("box") && table.contains_key("response"));

    // the echo is itself a valid configuration for the same command
    write_config(tmp.path(), "echo.toml", &echoed);
    let out = tbdf(&["free-vacuum", "--config", "echo.toml", "--out", "p"], tmp.path());
    assert!(out.status.success());
    assert_eq!(
        fs::read(tmp.path().join("o/vacuum_profiles.csv")).unwrap(),
        fs::read(tmp.path().join("p/vacuum_profiles.csv")).unwrap()
    );
}

#[test]
fn response_tables_agree_across_routes() {
    let tmp = TempDir::new().unwrap();
    let out = tbdf(&["response", "--out", "o", "--threads", "1"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (columns, rows) = read_csv(&tmp.path().join("o/response.csv"));
    assert_eq!(columns.len(), rows[0].len());
    assert_eq!(rows.len(), 41);
    for r in &rows[1..rows.len() - 1] {
        assert!(r[7] < 1e-6, "k = {}", r[0]);
    }
    let report = read_json(&tmp.path().join("o/response_report.json"));
    assert!(report["report"]["max_relative_difference"].as_f64().unwrap() < 1e-6);
    assert!(report["report"]["failures"].as_array().unwrap().is_empty());
    let (_, b) = read_csv(&tmp.path().join("o/screening_kernels.csv"));
    assert_eq!(b.len(), 99);
}

#[test]
fn screen_reports_the_charge_sum_rule() {
    let tmp = TempDir::new().unwrap();
    let out = tbdf(&["screen", "--out", "o"], tmp.path());
    assert!(out.status.success());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("rho_tot^(0) / nu^(0) = 1;"), "{stdout}");
    let (columns, rows) = read_csv(&tmp.path().join("o/screen.csv"));
    assert_eq!(columns, ["x", "rho_tot", "v", "x_v"]);
    assert!((rows[0][0] - 1.0).abs() < 1e-15 && (rows.last().unwrap()[0] - 50.0).abs() < 1e-12);
    let report = read_json(&tmp.path().join("o/screen_report.json"));
    assert!(report["report"]["charge_relative_error"].as_f64().unwrap() < 1e-4);
    assert!(report["report"].get("table").is_none());
}

#[test]
fn box_run_writes_all_reports() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.toml",
        "[box]\nlength = 8.0\nmode = \"full\"\n[box.nu]\nkind = \"gaussian\"\ncharge = 0.2\nwidth = 1.0\n",
    );
    let out = tbdf(&["box", "--config", &cfg, "--out", "o"], tmp.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let bounds = read_json(&tmp.path().join("o/box_bounds.json"));
    let b = &bounds["bounds"];
    assert_eq!(b["mode"].as_str(), Some("full"));
    assert_eq!(b["mode_count"].as_u64(), Some(7));
    assert!(b["lower_bound_margin"].as_f64().unwrap() >= 0.0);
    assert!(b["operator_bound_margin"].as_f64().unwrap() >= 0.0);
    let u = read_json(&tmp.path().join("o/box_uniqueness.json"));
    assert_eq!(u["uniqueness"]["condition"]["satisfied"].as_bool(), Some(true));
    let (_, iters) = read_csv(&tmp.path().join("o/box_iterations.csv"));
    assert!(iters.windows(2).all(|w| w[1][1] <= w[0][1] + 1e-10));
    let (_, shells) = read_csv(&tmp.path().join("o/box_shells.csv"));
    assert_eq!(shells[0][2], 6.0);
}

#[test]
fn box_non_convergence_exits_with_code_three_and_keeps_diagnostics() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", "[box]\nlength = 8.0\n[box.scf]\nmax_iterations = 2\n");
    let out = tbdf(&["box", "--config", &cfg, "--out", "o"], tmp.path());
    assert_eq!(out.status.code(), Some(3));
    let bounds = read_json(&tmp.path().join("o/box_bounds.json"));
    assert_eq!(bounds["bounds"]["converged"].as_bool(), Some(false));
}

#[test]
fn check_is_deterministic_and_detects_injected_fault() {
    let tmp = TempDir::new().unwrap();
    let a = tbdf(&["check", "--seed", "5", "--out", "a"], tmp.path());
    let b = tbdf(&["check", "--seed", "5", "--out", "b"], tmp.path());
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
    let ra = fs::read(tmp.path().join("a/check_report.json")).unwrap();
    assert_eq!(ra, fs::read(tmp.path().join("b/check_report.json")).unwrap());
    let report = read_json(&tmp.path().join("a/check_report.json"));
    assert_eq!(report["report"]["passed"].as_bool(), Some(true));
    assert_eq!(report["config"]["seed"].as_u64(), Some(5));

    let c = tbdf(&["check", "--seed", "6", "--out", "c"], tmp.path());
    assert_ne!(fs::read(tmp.path().join("c/check_report.json")).unwrap(), ra);
    assert!(c.status.success());

    let bad = tbdf(&["check", "--seed", "5", "--out", "d", "--inject-klein-fault"], tmp.path());
    assert_eq!(bad.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("klein_coercivity (seed"));
    let report = read_json(&tmp.path().join("d/check_report.json"));
    assert_eq!(report["report"]["passed"].as_bool(), Some(false));
}

#[test]
fn box_output_is_byte_identical_across_runs() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", "[box]\nlength = 8.0\n");
    for dir in ["a", "b"] {
        assert!(tbdf(&["box", "--config", &cfg, "--out", dir], tmp.path()).status.success());
    }
    for f in ["box_iterations.csv", "box_shells.csv", "box_bounds.json", "box_uniqueness.json"] {
        assert_eq!(
            fs::read(tmp.path().join("a").join(f)).unwrap(),
            fs::read(tmp.path().join("b").join(f)).unwrap(),
            "{f}"
        );
    }
}
