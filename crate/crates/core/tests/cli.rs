mod common;

use std::collections::BTreeSet;
use std::fs;

use common::{args_for, fixture, invocations, run_cli};
use serde_json::{json, Value};

#[test]
fn every_command_is_exercised() {
    let covered: BTreeSet<&str> = invocations().iter().map(|(c, _, _)| *c).collect();
    for c in corrkit::cli::COMMANDS.iter().chain(&["run"]) {
        assert!(covered.contains(c), "{c} has no invocation");
    }
}

#[test]
fn reports_carry_the_exit_code() {
    for (cmd, inputs, flags) in invocations() {
        let (code, report) = run_cli(&args_for(cmd, &inputs, &flags));
        assert!(code == 0 || code == 1, "{cmd} {inputs:?}: exit {code}: {report}");
        assert_eq!(report["exit_code"], json!(code), "{cmd}");
        assert_eq!(report["metadata"]["tool"], "corrkit");
    }
}

#[test]
fn exit_codes_follow_the_verdict() {
    let cases = [
        ("check-usc", vec!["ex1.json"], vec![], 1),
        ("check-usc", vec!["constant.json"], vec![], 0),
        ("check-wcg", vec!["ex1.json"], vec!["--points", "1;3"], 1),
        ("check-wnq", vec!["ex1.json", "ex1_witness.json"], vec![], 0),
        ("equilibrium-selection", vec!["econ1.json"], vec![], 0),
        ("equilibrium-selection", vec!["econ1_full.json"], vec![], 1),
        ("verify-equilibrium", vec!["econ1.json"], vec!["--point", "0.2"], 1),
        ("check-usc", vec!["missing.json"], vec![], 2),
        ("check-usc", vec!["econ1.json"], vec![], 2),
        ("brouwer", vec!["delta1.json"], vec![], 2),
        ("check-nqc", vec!["step.json"], vec!["--cone", "sideways"], 2),
    ];
    for (cmd, inputs, flags, want) in cases {
        let (code, report) = run_cli(&args_for(cmd, &inputs, &flags));
        assert_eq!(code, want, "{cmd} {inputs:?} {flags:?}: {report}");
    }
    let (code, report) = run_cli(&["check-usc".into(), "--no-such-flag".into()]);
    assert_eq!((code, report), (2, Value::Null));
}

#[test]
fn load_errors_are_classified() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty.json");
    fs::write(&empty, "").unwrap();
    let (code, report) = run_cli(&["check-usc".into(), empty.display().to_string()]);
    assert_eq!(code, 2);
    assert_eq!(report["error"]["kind"], "ParseError");

    let mut econ: Value = serde_json::from_str(&fs::read_to_string(fixture("econ1.json")).unwrap()).unwrap();
    econ["payload"]["agents"][0].as_object_mut().unwrap().remove("B");
    let no_b = dir.path().join("no_b.json");
    fs::write(&no_b, econ.to_string()).unwrap();
    let (code, report) = run_cli(&["compute-w".into(), no_b.display().to_string()]);
    assert_eq!(code, 2);
    assert_eq!(report["error"]["kind"], "SchemaError");
    assert!(report["error"]["message"].as_str().unwrap().contains("\"B\""));
}

#[test]
fn repeated_runs_are_byte_identical() {
    for (cmd, inputs, flags) in invocations() {
        let a = args_for(cmd, &inputs, &flags);
        let (c1, r1) = run_cli(&a);
        let (c2, r2) = run_cli(&a);
        assert_eq!(c1, c2);
        assert_eq!(
            serde_json::to_string_pretty(&r1).unwrap(),
            serde_json::to_string_pretty(&r2).unwrap(),
            "{cmd} {inputs:?}"
        );
    }
}

/// A report holds everything needed to reproduce it: its embedded inputs
/// and options, replayed as an inline job, give the same report.
#[test]
fn reports_are_self_contained() {
    let dir = tempfile::tempdir().unwrap();
    for (cmd, inputs, flags) in invocations() {
        let (_, report) = run_cli(&args_for(cmd, &inputs, &flags));
        let docs = report["inputs"].as_array().unwrap();
        let names: Vec<String> = (0..docs.len()).map(|i| format!("in{i}")).collect();
        let job = json!({
            "version": "1",
            "kind": "job",
            "payload": {
                "command": report["command"],
                "inputs": names,
                "definitions": names.iter().cloned().zip(docs.iter().cloned()).collect::<serde_json::Map<_, _>>(),
                "options": report["options"],
            }
        });
        let path = dir.path().join("job.json");
        fs::write(&path, job.to_string()).unwrap();
        let (_, again) = run_cli(&["run".into(), path.display().to_string()]);
        assert_eq!(again, report, "{cmd} {inputs:?}");
    }
}

#[test]
fn out_and_csv_are_written() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let csv = dir.path().join("f.csv");
    let mut a = args_for("select", &["ex1.json", "ex1_simplex.json", "ex1_witness.json"], &[]);
    a.extend(["--out".into(), out.display().to_string(), "--csv".into(), csv.display().to_string()]);
    let (code, stdout_report) = run_cli(&a);
    assert_eq!((code, stdout_report), (0, Value::Null));
    let report: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(report["verdict"], "found");
    let table = fs::read_to_string(&csv).unwrap();
    let rows: Vec<&str> = table.lines().collect();
    assert_eq!(rows.len(), 202);
    // every sample matches the closed form max(x - 2, 0)
    for row in &rows[1..] {
        let v: Vec<f64> = row.split(',').map(|v| v.parse().unwrap()).collect();
        assert!((v[1] - (v[0] - 2.0).max(0.0)).abs() <= 1e-12, "{row}");
    }
}

#[test]
fn jobs_resolve_files_and_definitions() {
    let (code, report) = run_cli(&args_for("run", &["job_check_usc.json"], &[]));
    assert_eq!(code, 1);
    assert_eq!(report["command"], "check-usc");
    assert_eq!(report["result"]["counterexample"]["location"], json!([2.0]));

    let (code, report) = run_cli(&args_for("run", &["job_swap.json"], &[]));
    assert_eq!(code, 0);
    let p = report["result"]["fixed_point"]["point"].as_array().unwrap();
    for v in p {
        assert!((v.as_f64().unwrap() - 0.5).abs() <= 1e-9);
    }

    let dir = tempfile::tempdir().unwrap();
    let job = dir.path().join("job.json");
    fs::write(
        &job,
        r#"{"version":"1","kind":"job","payload":{"command":"check-usc","inputs":["nowhere"]}}"#,
    )
    .unwrap();
    let (code, report) = run_cli(&["run".into(), job.display().to_string()]);
    assert_eq!(code, 2);
    assert_eq!(report["error"]["kind"], "UnresolvedReference");
}
