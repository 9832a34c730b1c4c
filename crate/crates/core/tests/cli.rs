//! End-to-end checks of the command-line interface: exit codes, validation
//! output, CSV determinism and the summary JSON.

use std::path::PathBuf;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lembas"))
}

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../../scenarios/{name}.scenario"))
}

#[test]
fn version_flag() {
    let out = bin().arg("--version").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("lembas"), "{text}");
}

#[test]
fn validate_accepts_shipped_scenarios() {
    for name in [
        "dispersive",
        "displaced_coherent",
        "jc_resonant",
        "fig2",
        "open_case1",
        "open_case2",
        "two_baths",
        "appendix_a",
    ] {
        let out = bin().arg("validate").arg(scenario(name)).output().unwrap();
        assert!(
            out.status.success(),
            "{name}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
}

#[test]
fn validate_reports_every_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken.scenario");
    std::fs::write(
        &path,
        "[model]\nkind = dispersive\nomega0 = 1.0\nnu = 1.0\ng = abc\nn_fock = 1\nbogus = 3\n\
         [initial]\nspin = mixture\nc = 1.5\nmode = fock\nn = 0\n\
         [evolution]\nt_final = -1.0\ndt = 0.01\n",
    )
    .unwrap();
    let out = bin().arg("validate").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    for needle in ["model.g", "model.n_fock", "model.bogus", "initial.c", "evolution.t_final"] {
        assert!(err.contains(needle), "missing `{needle}` in:\n{err}");
    }
}

#[test]
fn run_produces_deterministic_csv_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let csv1 = dir.path().join("a.csv");
    let csv2 = dir.path().join("b.csv");
    let summary = dir.path().join("summary.json");
    for (csv, with_summary) in [(&csv1, true), (&csv2, false)] {
        let mut cmd = bin();
        cmd.arg("run")
            .arg(scenario("dispersive"))
            .arg("--out")
            .arg(csv);
        if with_summary {
            cmd.arg("--summary-json").arg(&summary);
        }
        let out = cmd.output().unwrap();
        assert!(
            out.status.success(),
            "{}",
            String::from_utf8_lossy(&out.stderr)
        );
    }
    let b1 = std::fs::read(&csv1).unwrap();
    let b2 = std::fs::read(&csv2).unwrap();
    assert_eq!(b1, b2, "identical configs must produce byte-identical CSV");

    // CSV shape: stable header, finite entries, dS_irr column non-negative
    let text = String::from_utf8(b1).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    assert_eq!(
        header,
        "t,W1dot,Q1dot,W2dot,Q2dot,Q1dot_bath,U1,U2,W1cum,Q1cum,S1,dS1,dS_irr,dS_rev,corr_norm,E_total,trace_err,min_eig"
    );
    let idx = header.split(',').position(|c| c == "dS_irr").unwrap();
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 18);
        let v: f64 = fields[idx].parse().unwrap();
        assert!(v >= -1e-10, "dS_irr = {v}");
    }

    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(summary["scenario"], "dispersive");
    assert_eq!(summary["commutation_class"], "fully_commuting");
    let checks = summary["checks"].as_array().unwrap();
    assert!(checks.iter().all(|c| c["verdict"] != "fail"));
}

#[test]
fn run_rejects_missing_file() {
    let out = bin().arg("run").arg("no_such.scenario").output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
