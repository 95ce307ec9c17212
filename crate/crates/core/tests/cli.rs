use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, config: &str, extra: &[&str]) -> Output {
    let path = dir.join("run.toml");
    std::fs::write(&path, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_optoent"))
        .arg(&path)
        .args(extra)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn point(g2: f64) -> String {
    format!("mode = \"point\"\n[params]\nkappa = 1e5\ng1 = 10.0\ng2 = {g2:?}\n[filter]\nsigma = 1.0\n")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn malformed_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &(point(9.0) + "[filter.extra]\nbogus_knob = 3\n"), &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("extra"), "{err}");

    let out = run(dir.path(), "mode = \"point\"\n[params]\nkappa = 1e5\ng1 = 10.0\ng2 = 9.0\nbogus_knob = 1\n[filter]\nsigma = 1.0\n", &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bogus_knob"));

    let out = run(dir.path(), "mode = \"point\"\n[params]\nkappa = 1e5\ng1 = 10.0\n[filter]\nsigma = 1.0\n", &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("g2"));
}

#[test]
fn zero_coupling_reports_no_entanglement() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &point(0.0), &["--json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["e_n"].as_f64(), Some(0.0));
}

#[test]
fn point_report_carries_moments_and_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "mode = \"point\"\ndelay_mode = \"numeric\"\ncoupling = \"with_delay\"\n\
               [params]\nkappa = 1e5\ng1 = 10.0\n[filter]\nsigma = 1.0\n";
    let out = run(dir.path(), cfg, &["--json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    let e = v["e_n"].as_f64().unwrap();
    let predicted = v["closed_forms"]["e_n_with_delay"].as_f64().unwrap();
    assert!((e - predicted).abs() <= 0.05 * predicted, "{e} vs {predicted}");
    for key in ["n1", "n2", "c12", "m11", "m22", "x12"] {
        assert!(!v["moments"][key].is_null(), "missing moment {key}");
    }

    let text = run(dir.path(), cfg, &[]);
    let text = String::from_utf8_lossy(&text.stdout);
    assert!(text.contains("E_N"), "{text}");
}

#[test]
fn unstable_coupling_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &point(10.5), &[]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn overrides_replace_config_values() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &point(9.0), &["--json", "--params.g2=0.0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["e_n"].as_f64(), Some(0.0));
}

#[test]
fn sweep_csv_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "mode = \"sweep\"\noutput = \"out\"\n[params]\nkappa = 1e5\ng1 = 10.0\ng2 = 9.0\n\
               [filter]\nsigma = 1.0\n[sweep]\nvariable = \"g2_over_g1\"\nlo = 0.95\nhi = 1.05\npoints = 3\n";
    let out = run(dir.path(), cfg, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = dir.path().join("out/sweep.csv");
    let first = std::fs::read(&csv).unwrap();
    run(dir.path(), cfg, &[]);
    assert_eq!(first, std::fs::read(&csv).unwrap());

    let text = String::from_utf8(first).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("g2_over_g1,"));
    // the point past the stability boundary is flagged, not dropped
    assert!(rows[3].contains("unstable"), "{}", rows[3]);
    assert!(text.contains("# mode = \"sweep\""));
}

#[test]
fn figure_writes_csv_and_svg() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = "mode = \"figure\"\noutput = \"figs\"\nemit_svg = true\n[figure]\nid = \"3a\"\npoints = 3\n";
    let out = run(dir.path(), cfg, &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("figs/3a.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("curve,x,y,")));
    let svg = std::fs::read_to_string(dir.path().join("figs/3a.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("<polyline"));
}
