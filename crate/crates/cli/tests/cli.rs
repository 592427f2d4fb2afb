use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use tempfile::TempDir;

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(format!("{name}.json"))
}

fn wgqed(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wgqed"))
        .arg("--output-dir")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn summary(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stdout);
    serde_json::from_str(text.lines().next().expect("summary line")).expect("summary is json")
}

fn write_scenario(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("input.json");
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn run_writes_csv_with_header() {
    let dir = TempDir::new().unwrap();
    let o = wgqed(dir.path(), &["run", scenario("fig2a").to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s = summary(&o);
    assert_eq!(s["scenario"], "fig2a");
    assert_eq!(s["config_hash"].as_str().unwrap().len(), 64);
    let csv = std::fs::read_to_string(dir.path().join("fig2a.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "x,right_re,right_im,left_re,left_im,density");
    assert_eq!(lines.count(), 2401);
    assert!((s["headline"].as_f64().unwrap() - 1.0).abs() < 1e-6);
}

#[test]
fn json_format_override() {
    let dir = TempDir::new().unwrap();
    let o = wgqed(dir.path(), &["--format", "json", "run", scenario("fig2b").to_str().unwrap()]);
    assert!(o.status.success());
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("fig2b.json")).unwrap()).unwrap();
    assert_eq!(doc["scenario"], "fig2b");
    assert_eq!(doc["headline"]["name"], "max_p_e");
    let peak = doc["headline"]["value"].as_f64().unwrap();
    assert!((peak - 2.0 * (-2.0f64).exp()).abs() < 1e-4);
    assert!(!doc["records"].as_array().unwrap().is_empty());
}

#[test]
fn reruns_are_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    for name in ["fig6b", "fig8c"] {
        assert!(wgqed(a.path(), &["run", scenario(name).to_str().unwrap()]).status.success());
        assert!(wgqed(b.path(), &["run", scenario(name).to_str().unwrap()]).status.success());
        let fa = std::fs::read(a.path().join(format!("{name}.csv"))).unwrap();
        let fb = std::fs::read(b.path().join(format!("{name}.csv"))).unwrap();
        assert_eq!(fa, fb, "{name}");
    }
}

#[test]
fn non_monotone_grid_is_rejected() {
    let dir = TempDir::new().unwrap();
    let input = write_scenario(
        dir.path(),
        r#"{"name": "bad", "system": {"model": "TwoLevel", "gamma": 1.0},
            "task": {"kind": "Spectrum"}, "grids": {"k": [0.0, 1.0, 0.5]}}"#,
    );
    let out = dir.path().join("out");
    let o = wgqed(&out, &["run", input.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.join("bad.csv").exists());
}

#[test]
fn unknown_task_field_is_rejected() {
    let dir = TempDir::new().unwrap();
    let input = write_scenario(
        dir.path(),
        r#"{"name": "bad", "system": {"model": "TwoLevel", "gamma": 1.0},
            "task": {"kind": "StimulatedOptimum", "bogus": 1}}"#,
    );
    assert_eq!(wgqed(dir.path(), &["run", input.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn invalid_physics_exits_with_code_two() {
    let dir = TempDir::new().unwrap();
    let input = write_scenario(
        dir.path(),
        r#"{"name": "neg", "system": {"model": "TwoLevel", "gamma": -1.0},
            "task": {"kind": "Spectrum"}, "grids": {"k": [0.0, 1.0]}}"#,
    );
    assert_eq!(wgqed(dir.path(), &["run", input.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn sweep_writes_sorted_index() {
    let dir = TempDir::new().unwrap();
    let o = wgqed(
        dir.path(),
        &["sweep", scenario("fig2b").to_str().unwrap(), "--param", "task.width_rate", "--values", "2,0.5,1"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let index = std::fs::read_to_string(dir.path().join("fig2b__sweep_index.csv")).unwrap();
    let rows: Vec<&str> = index.lines().collect();
    assert_eq!(rows[0], "value,headline_name,headline");
    let values: Vec<f64> = rows[1..].iter().map(|r| r.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(values, vec![0.5, 1.0, 2.0]);
    for r in &rows[1..] {
        let peak: f64 = r.split(',').nth(2).unwrap().parse().unwrap();
        assert!(peak > 0.0 && peak <= 1.0);
    }
    // The matched packet (width equal to the decay rate) absorbs best.
    let peaks: Vec<f64> = rows[1..].iter().map(|r| r.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert!(peaks[1] > peaks[0] && peaks[1] > peaks[2]);
    assert!(dir.path().join("fig2b__task.width_rate=0.5.csv").exists());
}

#[test]
fn empty_sweep_writes_header_only() {
    let dir = TempDir::new().unwrap();
    let o = wgqed(dir.path(), &["sweep", scenario("fig2b").to_str().unwrap(), "--param", "task.width_rate", "--values", ""]);
    assert!(o.status.success());
    let index = std::fs::read_to_string(dir.path().join("fig2b__sweep_index.csv")).unwrap();
    assert_eq!(index, "value,headline_name,headline\n");
}

#[test]
fn unknown_parameter_path() {
    let dir = TempDir::new().unwrap();
    let o = wgqed(dir.path(), &["sweep", scenario("fig2b").to_str().unwrap(), "--param", "system.nope", "--values", "1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("fig2b__sweep_index.csv").exists());
}

#[test]
fn stimulated_headline() {
    let dir = TempDir::new().unwrap();
    let o = wgqed(dir.path(), &["run", scenario("stimulated").to_str().unwrap()]);
    assert!(o.status.success());
    let s = summary(&o);
    assert_eq!(s["headline_name"], "lambda_max");
    assert!((s["headline"].as_f64().unwrap() - 2.0 / 3.0).abs() < 1e-6);
}

#[test]
fn missing_file_exits_with_code_two() {
    let dir = TempDir::new().unwrap();
    let o = wgqed(dir.path(), &["run", dir.path().join("absent.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn exact_g2_uses_sampled_points_inside_range() {
    let dir = TempDir::new().unwrap();
    let o = wgqed(dir.path(), &["run", scenario("g2_exact_array").to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let g0 = summary(&o)["headline"].as_f64().unwrap();
    assert!(g0.is_finite() && g0 >= 0.0);
    let csv = std::fs::read_to_string(dir.path().join("g2_exact_array.csv")).unwrap();
    let xs: Vec<f64> = csv.lines().skip(1).map(|r| r.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(xs.len() > 100);
    assert!(xs.iter().all(|x| (-10.0..=10.0).contains(x)));
    assert!(xs.windows(2).all(|w| w[0] < w[1]));
}
