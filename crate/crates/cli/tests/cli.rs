use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn rbnsf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rbnsf")).args(args).output().expect("spawn")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn data_rows(series: &Path) -> Vec<String> {
    fs::read_to_string(series)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("step"))
        .map(String::from)
        .collect()
}

const SMALL: &str = r#"{"experiment": 1, "n2": 8, "t_end": 2, "output": {"snapshot_cadence": 0.25, "checkpoint_every": 4}}"#;

#[test]
fn invalid_alpha_and_gamma_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in [("a.json", r#"{"alpha": 1.5}"#), ("g.json", r#"{"gamma": 0.9}"#), ("u.json", r#"{"nope": 1}"#)] {
        let c = write_config(dir.path(), name, text);
        let o = rbnsf(&["run", "--config", &c, "--out", dir.path().join("out").to_str().unwrap()]);
        assert_eq!(code(&o), 2, "{name}: {}", stderr(&o));
    }
}

#[test]
fn missing_config_file_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = rbnsf(&["run", "--config", "/nonexistent/c.json", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 4);
}

#[test]
fn zero_end_time_leaves_empty_series() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), "c.json", r#"{"experiment": 1, "n2": 8}"#);
    let out = dir.path().join("arch");
    let o = rbnsf(&["run", "--config", &c, "--out", out.to_str().unwrap(), "--t-end", "0", "-q"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(data_rows(&out.join("series.csv")).is_empty());
    assert!(out.join("snapshots/snap_000000.vtk").exists());
}

#[test]
fn run_analyze_export_and_rerun_from_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), "c.json", SMALL);
    let a = dir.path().join("a");
    let o = rbnsf(&["run", "--config", &c, "--out", a.to_str().unwrap(), "-q"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(data_rows(&a.join("series.csv")).len(), 16);
    assert_eq!(fs::read_dir(a.join("snapshots")).unwrap().count(), 2 * 9);

    // metadata fed back as a config reproduces the series bit for bit
    let b = dir.path().join("b");
    let meta = a.join("metadata.json");
    let o = rbnsf(&["run", "--config", meta.to_str().unwrap(), "--out", b.to_str().unwrap(), "-q"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(data_rows(&a.join("series.csv")), data_rows(&b.join("series.csv")));

    let o = rbnsf(&["analyze", "--archive", a.to_str().unwrap(), "--stats", "all", "--M0", "2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["mean.vtk", "deviation.vtk", "defect.vtk", "linecuts.csv", "errors.csv", "moments.json", "histograms/F1_m1.csv", "histograms/F2_u1.csv"] {
        assert!(a.join("stats").join(f).exists(), "{f}");
    }
    let errors = fs::read_to_string(a.join("stats/errors.csv")).unwrap();
    assert_eq!(errors.lines().count(), 1 + 6);

    let o = rbnsf(&["analyze", "--archive", a.to_str().unwrap(), "--stats", "means", "--Mref", "40"]);
    assert_eq!(code(&o), 2);
    let msg = stderr(&o);
    assert!(msg.contains("missing"), "{msg}");

    let o = rbnsf(&["export-plot-data", "--archive", a.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(m["snapshots"].as_array().unwrap().len(), 9);
    assert!(m["missing"].as_array().unwrap().is_empty(), "{m}");
}

#[test]
fn resume_after_interruption_matches_uninterrupted() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), "c.json", SMALL);
    let full = dir.path().join("full");
    let part = dir.path().join("part");
    assert_eq!(code(&rbnsf(&["run", "--config", &c, "--out", full.to_str().unwrap(), "-q"])), 0);
    assert_eq!(code(&rbnsf(&["run", "--config", &c, "--out", part.to_str().unwrap(), "-q", "--t-end", "1"])), 0);
    let o = rbnsf(&["resume", "--archive", part.to_str().unwrap(), "--t-end", "2", "-q"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(data_rows(&full.join("series.csv")), data_rows(&part.join("series.csv")));
    let last = "snapshots/snap_000008.bin";
    assert_eq!(fs::read(full.join(last)).unwrap(), fs::read(part.join(last)).unwrap());
}

#[test]
fn stationary_archive_has_no_defect() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(
        dir.path(),
        "c.json",
        r#"{"experiment": 1, "n2": 8, "t_end": 1, "start": "stationary", "output": {"snapshot_cadence": 0.25}}"#,
    );
    let a = dir.path().join("a");
    assert_eq!(code(&rbnsf(&["run", "--config", &c, "--out", a.to_str().unwrap(), "-q"])), 0);
    let o = rbnsf(&["analyze", "--archive", a.to_str().unwrap(), "--stats", "defects"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = fs::read_to_string(a.join("stats/defect_errors.csv")).unwrap();
    for line in text.lines().skip(1) {
        let w: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let n = w.len();
        assert!(w[n - 2].abs() < 1e-12 && w[n - 1].abs() < 1e-12, "{line}");
    }
}

#[test]
fn cascade_levels_and_output() {
    let dir = tempfile::tempdir().unwrap();
    let c = write_config(dir.path(), "c.json", r#"{"experiment": 1, "n2": 4, "dt_over_h": 1}"#);
    let o = rbnsf(&["cascade", "--config", &c, "--levels", "1", "--T", "1"]);
    assert_eq!(code(&o), 2);
    let out = dir.path().join("casc");
    let o = rbnsf(&["cascade", "--config", &c, "--levels", "3", "--T", "1", "--start", "stationary", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("cascade.csv")).unwrap();
    assert!(csv.starts_with("level,h,dt,d_n,order"));
    assert_eq!(csv.lines().count(), 4);
    assert!(out.join("cascade.json").exists());
}
