use std::path::Path;
use std::process::{Command, Output};

fn cms(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cms")).args(args).output().expect("cms runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Summary value for `key` in CSV output.
fn value(out: &str, key: &str) -> String {
    out.lines()
        .find_map(|l| l.strip_prefix(&format!("{key},")))
        .unwrap_or_else(|| panic!("no `{key}` in\n{out}"))
        .to_string()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn presets_are_listed() {
    let o = cms(&["presets"]);
    assert!(o.status.success());
    let s = stdout(&o);
    for name in ["sec52-entry", "sec52-exit", "sec52-mid", "renewal-ones"] {
        assert!(s.contains(name), "{name} missing");
    }
}

#[test]
fn entry_placement_summary() {
    let o = cms(&["report", "--preset", "sec52-entry", "--horizon", "40"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(value(&s, "pressure").parse::<f64>().unwrap().abs() < 1e-9);
    assert_eq!(value(&s, "chi_per"), "-0.69314718056");
    assert_eq!(value(&s, "spr"), "holds");
    assert!(s.contains("# partition_sums\nn,logZ,logZstar\n1,-0.69314718056,-0.69314718056\n"));
}

#[test]
fn power_law_summary() {
    let o = cms(&["report", "--preset", "sec53(3,auto)", "--horizon", "40"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert_eq!(value(&s, "h_top"), "1.38629436112");
    assert_eq!(value(&s, "spr"), "fails");
    assert_eq!(value(&s, "class"), "positive-recurrent");
    assert!(s.contains("# profile\nn,M,q,log_z,z_phi\n"));
}

#[test]
fn abstract_presets_report_their_return_law() {
    let o = cms(&["report", "--preset", "sec54(0,0,0)", "--horizon", "12"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("class,"));
    let o = cms(&["hinf", "--preset", "sec54(0,0,0)"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_errors_exit_with_two() {
    assert_eq!(cms(&["report", "--preset", "sec52-entry", "--horizon", "0"]).status.code(), Some(2));
    assert_eq!(cms(&["report", "--preset", "no-such-preset"]).status.code(), Some(2));
    assert_eq!(cms(&["report"]).status.code(), Some(2));
    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "empty.json", r#"{"preset": "sec52-entry", "M": []}"#);
    assert_eq!(cms(&["hinf", "--config", &empty]).status.code(), Some(2));
    let unknown = write(dir.path(), "unknown.json", r#"{"preset": "sec52-entry", "horizn": 4}"#);
    let o = cms(&["report", "--config", &unknown]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("horizn"), "{}", stderr(&o));
    let shift = write(dir.path(), "shift.json", r#"{"kind": "finite", "matrix": [[1, 1], [1, "x"]]}"#);
    let o = cms(&["pressure", "--shift", &shift]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("matrix[1][1]"), "{}", stderr(&o));
}

#[test]
fn unbounded_enumeration_is_refused() {
    let o = cms(&["oracle", "--preset", "sec52-entry"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("--truncate"));
}

#[test]
fn oracle_rows_agree() {
    for preset in ["sec52-entry", "renewal-ones"] {
        let o = cms(&["oracle", "--preset", preset, "--truncate", "5", "--M", "2,3", "--q", "1"]);
        assert!(o.status.success(), "{}", stderr(&o));
        let s = stdout(&o);
        assert_eq!(value(&s, "failures"), "0");
        assert!(!s.contains(",false\n"));
    }
}

#[test]
fn reports_are_byte_stable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = cms(&[
            "report",
            "--preset",
            "sec52-mid",
            "--horizon",
            "30",
            "--format",
            "csv,json",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    for name in ["summary.csv", "partition_sums.csv", "profile.csv", "crc.csv", "report.json"] {
        let x = std::fs::read(a.join(name)).unwrap();
        let y = std::fs::read(b.join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(a.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["summary"]["spr"], "holds");
    let profile = std::fs::read_to_string(a.join("profile.csv")).unwrap();
    assert!(profile.starts_with("n,M,q,log_z,z_phi\n"));
}

#[test]
fn log2_rescales_display_only() {
    let o = cms(&["pressure", "--preset", "renewal-ones", "--log2"]);
    assert!(o.status.success());
    let p: f64 = value(&stdout(&o), "pressure").parse().unwrap();
    assert!((p - 1.0).abs() < 1e-6, "{p}");
}

#[test]
fn spec_files_drive_the_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let shift = write(dir.path(), "shift.json", r#"{"kind": "finite", "matrix": [[1, 1], [1, 1]]}"#);
    let o = cms(&["pressure", "--shift", &shift, "--horizon", "20"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let p: f64 = value(&stdout(&o), "pressure").parse().unwrap();
    assert!((p - std::f64::consts::LN_2).abs() < 1e-3);

    write(dir.path(), "bouquet.json", r#"{"kind": "bouquet", "a": {"form": "ones"}}"#);
    write(
        dir.path(),
        "phi.json",
        r#"{"memory": 2, "scheme": "bouquet_spread", "C": 1.0, "beta": 0.0}"#,
    );
    let cfg = write(
        dir.path(),
        "run.json",
        r#"{"shift": "bouquet.json", "potential": "phi.json", "horizon": 40, "format": ["json"]}"#,
    );
    let o = cms(&["spr", "--config", &cfg]);
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(json["summary"]["spr"], "holds");
}
