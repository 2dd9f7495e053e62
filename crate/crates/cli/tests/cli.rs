use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use heisenberg_tm::functional::zeta;
use heisenberg_tm::quadrature::radial::{radial_reduce, RadialKernel};
use heisenberg_tm::GroupDim;
use serde_json::Value;
use tempfile::TempDir;

fn htm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_htm")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_config(dir: &TempDir, body: &str) -> String {
    let p = dir.path().join("config.json");
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

fn out_dir(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

const SMALL_GEOMETRY: &str = r#"{"geometry": {"samples": 2000, "commutator_points": 200}}"#;

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&htm(&["--help"])), 0);
    assert_eq!(code(&htm(&["glue", "--help"])), 0);
    assert_eq!(code(&htm(&["glue", "--no-such-flag"])), 3);
    assert_eq!(code(&htm(&["no-such-command"])), 3);
}

#[test]
fn geometry_check_passes_and_embeds_config() {
    let d = TempDir::new().unwrap();
    let cfg = write_config(&d, SMALL_GEOMETRY);
    let out = out_dir(&d, "geo");
    let o = htm(&["geometry-check", "--config", &cfg, "--out", &out]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("PASS quasi-triangle defect <= 3"));
    assert!(!text.contains("FAIL"));
    let j = json(&Path::new(&out).join("geometry_check.json"));
    assert_eq!(j["passed"], Value::Bool(true));
    assert_eq!(j["config"]["geometry"]["samples"], 2000);
    let max_defect = j["result"]["quasi_triangle_max"].as_f64().unwrap();
    assert!(max_defect > 0.5 && max_defect <= 3.0);
    let csv = fs::read_to_string(Path::new(&out).join("geometry_check_verdicts.csv")).unwrap();
    assert!(csv.starts_with("invariant,passed,observed,bound\n"));
}

#[test]
fn duplicated_points_fail_geometry_check() {
    let d = TempDir::new().unwrap();
    let cfg = write_config(
        &d,
        r#"{"geometry": {"samples": 100, "commutator_points": 10, "inject_duplicates": true}}"#,
    );
    let o = htm(&["geometry-check", "--config", &cfg, "--out", &out_dir(&d, "dup")]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("quasi-triangle"));
}

#[test]
fn geometry_check_in_higher_dimension_skips_volumes() {
    let d = TempDir::new().unwrap();
    let cfg = write_config(&d, r#"{"n": 2, "geometry": {"samples": 500, "commutator_points": 50}}"#);
    let o = htm(&["geometry-check", "--config", &cfg, "--out", &out_dir(&d, "n2")]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("NOTE n = 2: quadrature-dependent volume checks skipped"));
    assert!(!stdout(&o).contains("unit ball volume"));
}

#[test]
fn config_errors_name_the_field() {
    let d = TempDir::new().unwrap();
    let cfg = write_config(&d, r#"{"cutoff": {"radii": [1.0, "five"]}}"#);
    let o = htm(&["cutoff-check", "--config", &cfg]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("cutoff.radii[1]"), "{}", stderr(&o));

    let o = htm(&["functional", "--beta", "4", "--out", &out_dir(&d, "f")]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("beta"), "{}", stderr(&o));

    let o = htm(&["glue", "--config", "/nonexistent/config.json"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn flags_override_config_file() {
    let d = TempDir::new().unwrap();
    let cfg = write_config(&d, r#"{"params": {"alpha": 2.0, "tau": 2.0}, "functional": {"rel_tol": 1e-2}}"#);
    let out = out_dir(&d, "f");
    let o = htm(&["functional", "--config", &cfg, "--alpha", "3", "--out", &out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let j = json(&Path::new(&out).join("functional.json"));
    assert_eq!(j["config"]["params"]["alpha"], 3.0);
    assert_eq!(j["config"]["params"]["tau"], 2.0);
    assert_eq!(j["result"]["report"]["params"]["alpha"], 3.0);
}

#[test]
fn unconverged_functional_exits_with_numeric_code() {
    let d = TempDir::new().unwrap();
    let cfg = write_config(&d, r#"{"functional": {"rel_tol": 1e-14}}"#);
    let o = htm(&["functional", "--config", &cfg, "--out", &out_dir(&d, "f")]);
    assert_eq!(code(&o), 4, "{}", stdout(&o));
    assert!(stdout(&o).contains("FAIL relative quadrature error"));
}

#[test]
fn near_critical_weight_matches_radial_oracle() {
    let d = TempDir::new().unwrap();
    let out = out_dir(&d, "f");
    let o = htm(&["functional", "--beta", "3.9", "--out", &out]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let j = json(&Path::new(&out).join("functional.json"));
    let r = &j["result"];
    let value = r["report"]["tm_value"].as_f64().unwrap();
    let err = r["report"]["quadrature_error"].as_f64().unwrap();
    let scale = r["scale"].as_f64().unwrap();
    let alpha = r["report"]["params"]["alpha"].as_f64().unwrap();
    assert!(value.is_finite() && value > 0.0);

    // the bump s (1 - ρ^4)^3 is radial about the singular point
    let dim = GroupDim::new(1).unwrap();
    let profile = |rho: f64| {
        let u = scale * (1.0 - rho.powi(4)).powi(3);
        zeta(4, alpha * u.powf(4.0 / 3.0)).unwrap()
    };
    let oracle = radial_reduce(&dim, RadialKernel::Volume, profile, -3.9, 1.0, &[]).unwrap();
    let tol = 1e-6 * oracle.value + err + oracle.error;
    assert!((value - oracle.value).abs() <= tol, "{value} vs {}", oracle.value);
}

#[test]
fn covering_on_small_cube() {
    let d = TempDir::new().unwrap();
    let cfg = write_config(
        &d,
        r#"{"covering": {"half_width": 2.0, "rho": [1.0], "multiplicity_samples": 2000}}"#,
    );
    let out = out_dir(&d, "cov");
    let o = htm(&["covering", "--config", &cfg, "--out", &out]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let csv = fs::read_to_string(Path::new(&out).join("covering.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "rho,centers,min_separation,lattice_samples,uncovered,r,max_multiplicity,multiplicity_bound"
    );
    assert_eq!(lines.count(), 2);
    let j = json(&Path::new(&out).join("covering.json"));
    assert!(!j["result"][0]["net"]["centers"].as_array().unwrap().is_empty());
}

#[test]
fn cutoff_check_passes() {
    let d = TempDir::new().unwrap();
    let cfg = write_config(&d, r#"{"cutoff": {"samples": 5000}}"#);
    let o = htm(&["cutoff-check", "--config", &cfg, "--out", &out_dir(&d, "c")]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert_eq!(stdout(&o).matches("PASS").count(), 15);
}

#[test]
fn moser_scan_brackets_the_threshold() {
    let d = TempDir::new().unwrap();
    let out = out_dir(&d, "scan");
    let o = htm(&["moser-scan", "--kmax", "256", "--out", &out]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let j = json(&Path::new(&out).join("moser_scan.json"));
    let b = j["result"]["bracket"].as_array().unwrap();
    let (lo, hi) = (b[0].as_f64().unwrap(), b[1].as_f64().unwrap());
    assert!(lo <= 8.5801 && 8.5801 <= hi, "[{lo}, {hi}]");
    assert!(lo >= 8.0 && hi <= 9.0);
    let csv = fs::read_to_string(Path::new(&out).join("moser_scan.csv")).unwrap();
    assert!(csv.starts_with("alpha,k,tm_value,slope,classification\n"));
    assert_eq!(csv.lines().count(), 1 + 6 * 4);
}

#[test]
fn glue_two_bump_passes() {
    let d = TempDir::new().unwrap();
    let out = out_dir(&d, "glue");
    let o = htm(&["glue", "--r", "10", "--out", &out]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let j = json(&Path::new(&out).join("glue.json"));
    assert_eq!(j["result"]["r"], 10.0);
    assert!(j["result"]["global_tm"].as_f64().unwrap() <= j["result"]["sum_local_tm"].as_f64().unwrap());
    let csv = fs::read_to_string(Path::new(&out).join("glue.csv")).unwrap();
    assert!(csv.starts_with("ball,case,local_tm,minkowski_norm,bound_slack\n"));
}

fn read_all(dir: &str) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn outputs_do_not_depend_on_worker_count() {
    let d = TempDir::new().unwrap();
    for (cmd, extra) in [("glue", vec!["--r", "10"]), ("functional", vec!["--beta", "1"])] {
        // the output directory is part of the embedded config, so it is shared
        let out = out_dir(&d, cmd);
        let mut runs = Vec::new();
        for workers in ["1", "3", "1"] {
            let mut args = vec![cmd, "--workers", workers, "--out", &out];
            args.extend(&extra);
            let o = htm(&args);
            assert_eq!(code(&o), 0, "{}", stdout(&o));
            runs.push(read_all(&out));
        }
        assert_eq!(runs[0], runs[1], "{cmd}: 1 vs 3 workers");
        assert_eq!(runs[0], runs[2], "{cmd}: repeated run");
    }
}
