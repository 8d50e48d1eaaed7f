//! End-to-end checks of the command-line binary: exit codes, artifact
//! layout, and byte-level reproducibility.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_frontlab");

fn config(name: &str) -> String {
    format!("{}/../../configs/{name}", env!("CARGO_MANIFEST_DIR"))
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn binary")
}

fn artifacts(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .expect("read artifact dir")
        .map(|e| {
            let e = e.expect("dir entry");
            let name = e.file_name().into_string().expect("utf-8 name");
            let bytes = std::fs::read(e.path()).expect("read artifact");
            (name, bytes)
        })
        .collect()
}

#[test]
fn constant_density_run_is_steady_and_inconclusive() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("run");
    let result = run(&[
        "simulate",
        "--config",
        &config("constant.toml"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");

    let verdicts = std::fs::read_to_string(out.join("verdicts.csv")).unwrap();
    let row = verdicts
        .lines()
        .find(|l| l.starts_with("constant_"))
        .expect("verdict row");
    assert!(row.contains("inconclusive"), "row: {row}");
    let zeta: f64 = row.split(',').nth(5).unwrap().parse().unwrap();
    assert_eq!(zeta, 0.0);

    // Steady data: every snapshot column of w agrees with the first.
    let snaps = std::fs::read_to_string(out.join("snapshots_constant_eps0.001.csv")).unwrap();
    for line in snaps.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let mut cols = line.split(',');
        let _s = cols.next().unwrap();
        let first: f64 = cols.next().unwrap().parse().unwrap();
        for c in cols {
            let v: f64 = c.parse().unwrap();
            assert_eq!(v, first, "drifted snapshot value in: {line}");
        }
    }
}

#[test]
fn reruns_are_byte_identical_outside_the_wall_clock_sidecar() {
    let dir = TempDir::new().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let result = run(&[
            "simulate",
            "--config",
            &config("constant.toml"),
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(result.status.success(), "{result:?}");
    }
    let a = artifacts(&out_a);
    let b = artifacts(&out_b);
    assert_eq!(
        a.keys().collect::<Vec<_>>(),
        b.keys().collect::<Vec<_>>(),
        "artifact sets differ"
    );
    for (name, bytes) in &a {
        if name == "run_meta.txt" {
            continue;
        }
        assert_eq!(bytes, &b[name], "artifact {name} differs between reruns");
    }
}

#[test]
fn verify_command_reports_all_suites_green() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("verify");
    let result = run(&[
        "verify",
        "--config",
        &config("verify.toml"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");
    let csv = std::fs::read_to_string(out.join("verify_suites.csv")).unwrap();
    let rows: Vec<&str> = csv
        .lines()
        .filter(|l| !l.starts_with('#') && !l.starts_with("suite,"))
        .collect();
    assert_eq!(rows.len(), 10, "suite count:\n{csv}");
    for row in rows {
        assert!(row.contains(",pass,"), "suite not green: {row}");
    }
}

#[test]
fn config_errors_exit_2() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(
        &bad,
        "[model]\nn = 1\nr_domain = 1.0\nm = 2.0\n\n[profile]\nr0 = 0.3\n",
    )
    .unwrap();
    let result = run(&["simulate", "--config", bad.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(2));
    assert!(!result.stderr.is_empty());

    // Sweeping needs a tail to scale; the constant profile has none.
    let result = run(&["sweep", "--config", &config("constant.toml")]);
    assert_eq!(result.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&result.stderr);
    assert!(msg.contains("tail"), "stderr: {msg}");
}

#[test]
fn zero_jobs_is_rejected() {
    let result = run(&[
        "simulate",
        "--config",
        &config("constant.toml"),
        "--jobs",
        "0",
    ]);
    assert_eq!(result.status.code(), Some(2));
}

#[test]
fn gnuplot_scripts_reference_existing_artifacts() {
    let dir = TempDir::new().unwrap();
    let toml = dir.path().join("plot.toml");
    let base = std::fs::read_to_string(config("constant.toml")).unwrap();
    std::fs::write(&toml, base.replace("gnuplot = false", "gnuplot = true")).unwrap();
    let out = dir.path().join("run");
    let result = run(&[
        "simulate",
        "--config",
        toml.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");
    let scripts: Vec<_> = std::fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| {
            let p = e.unwrap().path();
            (p.extension().is_some_and(|x| x == "gp")).then_some(p)
        })
        .collect();
    assert!(!scripts.is_empty(), "no gnuplot scripts emitted");
    for script in scripts {
        let text = std::fs::read_to_string(&script).unwrap();
        for token in text.split('"') {
            if token.ends_with(".csv") {
                assert!(
                    out.join(token).exists(),
                    "{} references missing {token}",
                    script.display()
                );
            }
        }
    }
}
