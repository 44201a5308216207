#![allow(dead_code)]

use corrkit::setvalue::{Interval, IntervalUnion, PiecewiseCorrespondence};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random union of up to two intervals in `[-1, 1]` with endpoints on the
/// eighths and random openness; empty with probability `p_empty`.
pub fn random_union(r: &mut ChaCha8Rng, p_empty: f64) -> IntervalUnion {
    if r.random_bool(p_empty) {
        return IntervalUnion::empty();
    }
    let parts = (0..r.random_range(1..=2))
        .map(|_| {
            let a = r.random_range(-8..=8) as f64 / 8.0;
            let b = r.random_range(-8..=8) as f64 / 8.0;
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            if lo == hi {
                Interval::point(lo)
            } else {
                Interval::new(lo, r.random_bool(0.3), hi, r.random_bool(0.3))
            }
        })
        .collect();
    let u = IntervalUnion::from_intervals(parts);
    if u.is_empty() {
        IntervalUnion::point(0.0)
    } else {
        u
    }
}

/// Random piecewise-constant correspondence on `[0, 1]` with values in
/// `[-1, 1]`. Each breakpoint (a multiple of 0.05) is either its own cell
/// or attached to a neighbouring one.
pub fn random_piecewise(seed: u64, p_empty: f64) -> PiecewiseCorrespondence {
    let mut r = rng(seed);
    let mut bps: Vec<i32> = (0..r.random_range(0..=4)).map(|_| r.random_range(1..20)).collect();
    bps.sort();
    bps.dedup();
    let bps: Vec<f64> = bps.into_iter().map(|k| k as f64 / 20.0).collect();
    let mut cells = Vec::new();
    let mut lo = 0.0;
    let mut lo_open = false;
    for &b in &bps {
        match r.random_range(0..3) {
            0 => {
                cells.push(Interval::new(lo, lo_open, b, false));
                lo_open = true;
            }
            1 => {
                cells.push(Interval::new(lo, lo_open, b, true));
                lo_open = false;
            }
            _ => {
                cells.push(Interval::new(lo, lo_open, b, true));
                cells.push(Interval::point(b));
                lo_open = true;
            }
        }
        lo = b;
    }
    cells.push(Interval::new(lo, lo_open, 1.0, false));
    let pieces = cells
        .into_iter()
        .map(|c| (c, random_union(&mut r, p_empty)))
        .collect();
    PiecewiseCorrespondence::on_line(Interval::closed(0.0, 1.0), Interval::closed(-1.0, 1.0), pieces)
        .expect("cells partition [0, 1]")
}

/// Usc, compact-valued: closed values and each breakpoint value contains the
/// closures of its neighbours.
pub fn usc_fixtures() -> Vec<PiecewiseCorrespondence> {
    let c = |lo: f64, hi: f64| IntervalUnion::closed(lo, hi);
    vec![
        corrkit::fixtures::constant(0.0, 1.0, 0.0, 1.0),
        PiecewiseCorrespondence::on_line(
            Interval::closed(0.0, 1.0),
            Interval::closed(0.0, 2.0),
            vec![
                (Interval::new(0.0, false, 0.5, true), c(0.0, 1.0)),
                (Interval::point(0.5), c(0.0, 2.0)),
                (Interval::new(0.5, true, 1.0, false), c(1.0, 2.0)),
            ],
        )
        .unwrap(),
        PiecewiseCorrespondence::on_line(
            Interval::closed(0.0, 1.0),
            Interval::closed(-1.0, 1.0),
            vec![
                (Interval::new(0.0, false, 0.3, false), c(-1.0, 0.0)),
                (Interval::new(0.3, true, 1.0, false), c(-0.5, 0.0)),
            ],
        )
        .unwrap(),
    ]
}

/// Every fixture with a one-dimensional domain used across the suites.
pub fn fixture_suite() -> Vec<(&'static str, PiecewiseCorrespondence)> {
    let econ = corrkit::fixtures::econ1();
    let ag = &econ.agents()[0];
    vec![
        ("ex1", corrkit::fixtures::ex1()),
        ("constant", corrkit::fixtures::constant(0.0, 1.0, 0.0, 1.0)),
        ("econ1_p", ag.p.clone()),
        ("econ1_b", ag.b.clone()),
        ("econ1_a", ag.a.clone()),
    ]
}

pub fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

/// One invocation of every command over the shipped fixtures: the command
/// name, its input fixtures and extra flags.
pub fn invocations() -> Vec<(&'static str, Vec<&'static str>, Vec<&'static str>)> {
    vec![
        ("check-usc", vec!["ex1.json"], vec![]),
        ("check-usc", vec!["constant.json"], vec![]),
        ("check-lsc", vec!["ex1.json"], vec![]),
        ("check-lsc", vec!["step.json"], vec![]),
        ("check-ols", vec!["ex1.json"], vec![]),
        ("check-wcg", vec!["ex1.json"], vec!["--points", "1;3"]),
        ("check-wcg", vec!["constant.json"], vec!["--points", "0;1"]),
        ("check-nqc", vec!["step.json"], vec!["--cone", "nonneg"]),
        ("check-nqc", vec!["singleton.json"], vec!["--cone", "zero"]),
        ("check-wnq", vec!["ex1.json", "ex1_witness.json"], vec![]),
        ("check-wnq", vec!["ex1.json", "ex1_witness_1_3.json"], vec![]),
        ("search-wnq", vec!["ex1.json"], vec!["--points", "1;3"]),
        ("check-star", vec!["constant.json"], vec!["--points", "0;1", "--values", "0.5,0.5"]),
        ("check-wnqs", vec!["constant.json", "constant.json", "unit_segment.json"], vec![]),
        ("select", vec!["ex1.json", "ex1_simplex.json", "ex1_witness.json"], vec![]),
        ("select-star", vec!["constant.json", "unit_segment.json"], vec!["--values", "0,1"]),
        ("validate-selection", vec!["ex1.json", "ex1_simplex.json", "ex1_witness.json"], vec![]),
        ("brouwer", vec!["delta1.json"], vec!["--map", "swap"]),
        ("brouwer", vec!["triangle.json"], vec!["--map", "identity"]),
        (
            "compose-fix",
            vec!["ex1.json", "ex1_simplex.json", "ex1_witness.json"],
            vec!["--transfer", r#"{"affine":{"scale":[1],"shift":[2]}}"#],
        ),
        ("setval-fix", vec!["constant.json"], vec![]),
        ("compute-w", vec!["econ1.json"], vec![]),
        ("compute-w", vec!["econ1_full.json"], vec![]),
        ("equilibrium-selection", vec!["econ1.json"], vec![]),
        ("equilibrium-selection", vec!["econ1_full.json"], vec![]),
        ("equilibrium-approx", vec!["econ1.json"], vec![]),
        ("verify-equilibrium", vec!["econ1.json"], vec!["--point", "0.5"]),
        ("verify-equilibrium", vec!["econ1.json"], vec!["--point", "0.2"]),
        ("demo-ex1", vec![], vec![]),
        ("run", vec!["job_check_usc.json"], vec![]),
        ("run", vec!["job_swap.json"], vec![]),
    ]
}

/// Runs the binary and returns the exit code and the report with its
/// timestamp zeroed.
pub fn run_cli(args: &[String]) -> (i32, serde_json::Value) {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_corrkit"))
        .args(args)
        .output()
        .expect("binary runs");
    let mut report: serde_json::Value =
        serde_json::from_slice(&out.stdout).unwrap_or(serde_json::Value::Null);
    if let Some(m) = report.get_mut("metadata") {
        m["timestamp"] = 0.into();
    }
    (out.status.code().unwrap_or(-1), report)
}

pub fn args_for(cmd: &str, inputs: &[&str], flags: &[&str]) -> Vec<String> {
    let mut a = vec![cmd.to_string()];
    a.extend(inputs.iter().map(|i| fixture(i).display().to_string()));
    a.extend(flags.iter().map(|f| f.to_string()));
    a
}
