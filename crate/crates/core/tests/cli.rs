//! End-to-end runs of the `rpost` binary.

use std::path::Path;
use std::process::{Command, Output};

fn rpost(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rpost")).args(args).output().unwrap()
}

fn arg(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn table_kld_writes_the_result_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    let json = dir.path().join("r.json");
    let o = rpost(&[
        "table-kld", "--n", "20", "--eps", "0.1", "--alphas", "0,0.5", "--reps", "3", "--draws", "1000", "--out",
        arg(&out), "--json", arg(&json),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,eps,alpha,metric,value,stderr,excluded_reps"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.len() == 7 && r[0] == "20" && r[1] == "0.1"));
    let table: rpost::simharness::ResultTable = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    assert_eq!(table.to_csv_string(), text);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("spec.json");
    std::fs::write(
        &cfg,
        r#"{"experiment":"NormalMeanKLD","n":30,"eps":0.2,"alpha_grid":[0.0,1.0],"prior":{"kind":"ImproperUniform"},"replications":2,"seed":1,"draws":1000}"#,
    )
    .unwrap();
    let out = dir.path().join("r.csv");
    let o = rpost(&["table-kld", "--config", arg(&cfg), "--eps", "0.1", "--out", arg(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().skip(1).all(|l| l.starts_with("30,0.1,")), "{text}");

    let o = rpost(&["regression", "--config", arg(&cfg), "--out", arg(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn predict_writes_a_density() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("x.csv");
    std::fs::write(&data, "x\n4.1\n5.3\n4.8\n5.9\n5.2\n8.0\n4.6\n5.1\n").unwrap();
    for est in ["erpde", "arpde", "hrpde"] {
        let out = dir.path().join(format!("{est}.csv"));
        let o = rpost(&[
            "predict", "--data", arg(&data), "--alpha", "0.5", "--prior", "conjugate", "--estimator", est, "--zmin",
            "-15", "--zmax", "25", "--zpoints", "2001", "--draws", "2000", "--out", arg(&out),
        ]);
        assert!(o.status.success(), "{est}: {}", String::from_utf8_lossy(&o.stderr));
        let text = std::fs::read_to_string(&out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("z,value,kind,alpha"));
        let rows: Vec<(f64, f64)> = lines
            .map(|l| {
                let f: Vec<&str> = l.split(',').collect();
                assert_eq!(f[2], est.to_uppercase());
                assert_eq!(f[3], "0.5");
                (f[0].parse().unwrap(), f[1].parse().unwrap())
            })
            .collect();
        assert_eq!(rows.len(), 2001);
        let mass: f64 = rows.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum();
        if est == "arpde" {
            // the pointwise median is not renormalized
            assert!(mass > 0.5 && mass <= 1.0 + 1e-3, "{est}: mass {mass}");
        } else {
            assert!((mass - 1.0).abs() < 1e-3, "{est}: mass {mass}");
        }
    }
}

#[test]
fn predict_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("x.csv");
    std::fs::write(&data, "1.0\nabc\n").unwrap();
    let out = dir.path().join("d.csv");
    let o = rpost(&["predict", "--data", arg(&data), "--alpha", "0", "--zmin", "0", "--zmax", "1", "--out", arg(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
}

#[test]
fn diagnose_merging_covers_both_branches() {
    let dir = tempfile::tempdir().unwrap();
    for alpha in ["0", "0.5"] {
        let out = dir.path().join(format!("m{alpha}.csv"));
        let o = rpost(&["diagnose-merging", "--n-list", "10,100", "--alpha", alpha, "--seed", "7", "--out", arg(&out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let text = std::fs::read_to_string(&out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "n,alpha,statistic");
        assert_eq!(lines.len(), 3);
        assert!(lines[1].starts_with(&format!("10,{alpha},")));
    }
    let out = dir.path().join("bad.csv");
    let o = rpost(&["diagnose-merging", "--n-list", "10", "--alpha", "0.5", "--data-lo", "-1", "--data-hi", "1", "--out", arg(&out)]);
    assert_eq!(o.status.code(), Some(1));
}
