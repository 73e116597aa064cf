use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use factorlab::cli::ExperimentRecord;

fn factorlab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_factorlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn records(out: &Path) -> Vec<ExperimentRecord> {
    fs::read_to_string(out.join("results.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn classify_writes_records_and_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.toml",
        r#"
        experiment = "anchors"
        [[case]]
        spectrum = { weights = [0.5, 0.5] }
        expect = "II_1"
        [[case]]
        spectrum = { weights = [1, 0.5, 0.16666666666666666] }
        "#,
    );
    let out = dir.path().join("out");
    let o = factorlab(&["classify", "--config", &cfg], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let recs = records(&out);
    assert_eq!(recs.len(), 2);
    assert_eq!(recs[0].schema_version, 1);
    assert_eq!(recs[0].outputs["factor_type"], "II_1");
    assert_eq!(recs[0].outputs["type_family"], "II");
    assert_eq!(recs[1].outputs["factor_type"], "III_1");
    assert_eq!(recs[1].runtime_ms, 0);
    assert!(recs[1].tolerances.contains_key("gcd_tol"));
    let csv = fs::read_to_string(out.join("table_anchors.csv")).unwrap();
    assert!(csv.starts_with("case,factor_type,type_family,lambda,structure,step\r\n"));
    assert_eq!(csv.lines().count(), 3);

    // append-only: a second run adds lines
    factorlab(&["classify", "--config", &cfg], &out);
    assert_eq!(records(&out).len(), 4);
}

#[test]
fn failed_expectation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.toml", "[[case]]\nspectrum = { powers = 0.5 }\nexpect = \"III_1\"\n");
    let out = dir.path().join("out");
    let o = factorlab(&["classify", "--config", &cfg], &out);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(records(&out)[0].outputs["passed"], false);
}

#[test]
fn config_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cases = [
        ("missing.toml", None),
        ("syntax.toml", Some("[[case]\n")),
        ("unknown.toml", Some("[[case]]\nspectrum = { weights = [1] }\ncolour = 3\n")),
        ("range.toml", Some("[[case]]\nspectrum = { powers = 1.5 }\n")),
        ("empty.toml", Some("experiment = \"x\"\n")),
    ];
    for (name, text) in cases {
        let path = match text {
            Some(t) => write(dir.path(), name, t),
            None => dir.path().join(name).to_string_lossy().into_owned(),
        };
        let o = factorlab(&["classify", "--config", &path], &out);
        assert_eq!(o.status.code(), Some(2), "{name}");
        assert!(String::from_utf8_lossy(&o.stderr).contains("error"), "{name}");
    }
    assert_eq!(factorlab(&["kappa"], &out).status.code(), Some(2));
    assert_eq!(factorlab(&["bogus"], &out).status.code(), Some(2));
    assert!(!out.join("results.jsonl").exists());
}

#[test]
fn lattice_exact_and_stack() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "l.toml",
        r#"
        [[case]]
        model = { dimension = 2, extent = [2, 2], boundary = "open", m = 2, rho = [0.64, 0.36] }
        amplitudes = ["4/5", "3/5"]
        stack = { m = 2, rho = [0.5, 0.5] }
        "#,
    );
    let out = dir.path().join("out");
    let o = factorlab(&["lattice", "--config", &cfg, "--exact", "--workers", "2"], &out);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r = &records(&out)[0];
    assert_eq!(r.outputs["exact"]["gap"], 1);
    assert_eq!(r.outputs["exact"]["integer_spectrum"], true);
    assert_eq!(r.outputs["commuting"], true);
    assert_eq!(r.outputs["region_type_family"], "III");
    assert_eq!(r.outputs["stacked"]["region_type"], "III_0.5625");
    assert!(r.outputs["ed_cut_error"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "k.toml",
        r#"
        [[case]]
        resource = { powers = 0.5 }
        schedule = [8, 16, 32]
        [[case]]
        resource = { uniform = 2 }
        schedule = [1, 2]
        metric = "vector"
        "#,
    );
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    factorlab(&["kappa", "--config", &cfg, "--seed", "5"], &a);
    factorlab(&["kappa", "--config", &cfg, "--seed", "5", "--workers", "1"], &b);
    let ra = fs::read(a.join("results.jsonl")).unwrap();
    assert!(!ra.is_empty());
    assert_eq!(ra, fs::read(b.join("results.jsonl")).unwrap());
    assert_eq!(
        fs::read(a.join("table_kappa.csv")).unwrap(),
        fs::read(b.join("table_kappa.csv")).unwrap()
    );
}

#[test]
fn shipped_configs_pass() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let dir = tempfile::tempdir().unwrap();
    for cmd in ["classify", "kappa", "lattice", "chain", "locc"] {
        let cfg = root.join(format!("{cmd}.toml"));
        let o = factorlab(&[cmd, "--config", cfg.to_str().unwrap(), "--exact"], dir.path());
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
    }
}
