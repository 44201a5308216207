//! Command-line front end. Every command reads JSON documents, writes one
//! JSON report and optionally a CSV table, and exits with 0 (pass or found),
//! 1 (counterexample or not found) or 2 (input error).

use std::fmt::Debug;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::doc::{self, DocError, ToolkitDocument};
use crate::economy::{
    compute_w, equilibrium_via_approximation, equilibrium_via_selection, halving_schedule,
    verify_equilibrium_with, EconomyError, EquilibriumOptions,
};
use crate::fixedpoint::{
    approx_fixed_point_setvalued, brouwer_fixed_point, composed_fixed_point, BrouwerOptions,
    ComposeWitness, FixedPointError, SetValuedOptions, TransferMap,
};
use crate::fixtures;
use crate::grid::GridSpec;
use crate::properties::{
    falsify_lsc, falsify_natural_quasi_concave, falsify_open_lower_sections, falsify_usc,
    falsify_wcg, search_wnq_witness, verify_star_witness, verify_wnq_witness,
    verify_wnqs_property, Cone, Counterexample, PropertyError, Verdict, WcgVerdict,
};
use crate::selection::{
    build_selection, build_selection_star, unchecked_selection, unchecked_selection_star,
    validate_selection, Selection, SelectionError,
};
use crate::setvalue::{Correspondence, DEFAULT_DELTA_SCHEDULE};
use crate::simplex::{Simplex, SimplexError};
use crate::witness::{Orientation, Reparameterization, WnqWitness};

#[derive(Parser, Debug)]
#[command(name = "corrkit", version, about = "Set-valued maps, selections, fixed points and equilibria")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Clone, Debug)]
pub enum Command {
    /// Search for an upper semicontinuity violation.
    CheckUsc(Invocation),
    /// Search for a lower semicontinuity violation.
    CheckLsc(Invocation),
    /// Search for a lower section that is not open.
    CheckOls(Invocation),
    /// Look for values at --points with a convex graph.
    CheckWcg(Invocation),
    /// Natural quasi-concavity of a single-valued map (--cone zero|nonneg).
    CheckNqc(Invocation),
    /// Verify a WNQ witness: CORRESPONDENCE WITNESS.
    CheckWnq(Invocation),
    /// Search for a WNQ witness at --points.
    SearchWnq(Invocation),
    /// Verify --values at --points against every value of the map.
    CheckStar(Invocation),
    /// WNQS property: A CANDIDATE SIMPLEX [WITNESS] with --eps and --agent.
    CheckWnqs(Invocation),
    /// Build a selection: CORRESPONDENCE SIMPLEX WITNESS.
    Select(Invocation),
    /// Build the affine selection through --values: CORRESPONDENCE SIMPLEX.
    SelectStar(Invocation),
    /// Grid-check a selection: CORRESPONDENCE SIMPLEX [WITNESS] (or --values).
    ValidateSelection(Invocation),
    /// Fixed point of --map on SIMPLEX.
    Brouwer(Invocation),
    /// Fixed point of s∘T: CORRESPONDENCE SIMPLEX [WITNESS] with --transfer.
    ComposeFix(Invocation),
    /// Approximate fixed point of a convex-valued self-map, one document per coordinate.
    SetvalFix(Invocation),
    /// Improvement regions of an ECONOMY.
    ComputeW(Invocation),
    /// Equilibrium by patching in selections.
    EquilibriumSelection(Invocation),
    /// Equilibrium by shrinking inflations (--eps0, --eps-steps).
    EquilibriumApprox(Invocation),
    /// Certify --point as an equilibrium of ECONOMY.
    VerifyEquilibrium(Invocation),
    /// The worked three-case example end to end.
    DemoEx1(Invocation),
    /// Run a job document.
    Run(Invocation),
}

impl Command {
    pub fn parts(&self) -> (&'static str, &Invocation) {
        use Command::*;
        match self {
            CheckUsc(i) => ("check-usc", i),
            CheckLsc(i) => ("check-lsc", i),
            CheckOls(i) => ("check-ols", i),
            CheckWcg(i) => ("check-wcg", i),
            CheckNqc(i) => ("check-nqc", i),
            CheckWnq(i) => ("check-wnq", i),
            SearchWnq(i) => ("search-wnq", i),
            CheckStar(i) => ("check-star", i),
            CheckWnqs(i) => ("check-wnqs", i),
            Select(i) => ("select", i),
            SelectStar(i) => ("select-star", i),
            ValidateSelection(i) => ("validate-selection", i),
            Brouwer(i) => ("brouwer", i),
            ComposeFix(i) => ("compose-fix", i),
            SetvalFix(i) => ("setval-fix", i),
            ComputeW(i) => ("compute-w", i),
            EquilibriumSelection(i) => ("equilibrium-selection", i),
            EquilibriumApprox(i) => ("equilibrium-approx", i),
            VerifyEquilibrium(i) => ("verify-equilibrium", i),
            DemoEx1(i) => ("demo-ex1", i),
            Run(i) => ("run", i),
        }
    }
}

/// Commands a job may name.
pub const COMMANDS: [&str; 20] = [
    "check-usc",
    "check-lsc",
    "check-ols",
    "check-wcg",
    "check-nqc",
    "check-wnq",
    "search-wnq",
    "check-star",
    "check-wnqs",
    "select",
    "select-star",
    "validate-selection",
    "brouwer",
    "compose-fix",
    "setval-fix",
    "compute-w",
    "equilibrium-selection",
    "equilibrium-approx",
    "verify-equilibrium",
    "demo-ex1",
];

#[derive(Args, Clone, Debug, Default)]
pub struct Invocation {
    /// Input documents.
    pub inputs: Vec<PathBuf>,
    #[command(flatten)]
    pub options: Options,
    /// Report path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// CSV table path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// Tunables shared by all commands; also the `options` object of a job.
#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Options {
    /// Grid points per axis.
    #[arg(long, default_value_t = 1000)]
    pub grid: usize,
    /// Candidate values per value component.
    #[arg(long, default_value_t = 21)]
    pub value_resolution: usize,
    /// Probe radius (one grid step when absent).
    #[arg(long)]
    pub delta: Option<f64>,
    /// Tolerance; 1e-9 for brouwer and compose-fix, 1e-6 otherwise.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, default_value_t = 0.1)]
    pub eps0: f64,
    #[arg(long, default_value_t = 12)]
    pub eps_steps: usize,
    /// Inflation radius for check-wnqs.
    #[arg(long, default_value_t = 0.0)]
    pub eps: f64,
    /// Strategy coordinate for check-wnqs, or a single agent for compute-w.
    #[arg(long)]
    pub agent: Option<usize>,
    /// Points as "x1,x2;y1,y2".
    #[arg(long)]
    pub points: Option<String>,
    /// Values as "y1,y2".
    #[arg(long)]
    pub values: Option<String>,
    /// A point as "x1,x2".
    #[arg(long)]
    pub point: Option<String>,
    /// Warm start for setval-fix, as "x1,x2".
    #[arg(long)]
    pub warm: Option<String>,
    /// zero or nonneg.
    #[arg(long)]
    pub cone: Option<String>,
    /// identity, swap or JSON such as {"affine":{"matrix":[[0.5]],"offset":[0.1]}}.
    #[arg(long)]
    pub map: Option<String>,
    /// JSON such as {"affine":{"scale":[1],"shift":[2]}}.
    #[arg(long)]
    pub transfer: Option<String>,
    /// Lattice subdivisions for CSV samples of selections.
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
}

impl Default for Options {
    fn default() -> Self {
        Options {
            grid: 1000,
            value_resolution: 21,
            delta: None,
            tol: None,
            eps0: 0.1,
            eps_steps: 12,
            eps: 0.0,
            agent: None,
            points: None,
            values: None,
            point: None,
            warm: None,
            cone: None,
            map: None,
            transfer: None,
            samples: 200,
        }
    }
}

impl Options {
    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            resolution: self.grid,
            delta: self.delta,
            value_resolution: self.value_resolution,
        }
    }
}

/// Continuous self-maps of a simplex for `brouwer`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapSpec {
    Identity,
    /// Reverses the coordinates.
    Swap,
    /// `x_j -> x_j^p`.
    Power(f64),
    /// `x -> M x + b`.
    Affine {
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
    },
}

impl MapSpec {
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            MapSpec::Identity => x.to_vec(),
            MapSpec::Swap => x.iter().rev().copied().collect(),
            MapSpec::Power(p) => x.iter().map(|v| v.powf(*p)).collect(),
            MapSpec::Affine { matrix, offset } => matrix
                .iter()
                .zip(offset)
                .map(|(row, b)| b + row.iter().zip(x).map(|(m, v)| m * v).sum::<f64>())
                .collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Metadata {
    pub tool: String,
    pub version: String,
    /// Seconds since the Unix epoch; the only field that varies between runs.
    pub timestamp: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub command: String,
    pub verdict: String,
    pub exit_code: i32,
    pub inputs: Vec<ToolkitDocument>,
    pub options: Options,
    pub result: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
    pub metadata: Metadata,
}

impl Report {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    /// The report with the timestamp zeroed.
    pub fn canonical_json(&self) -> String {
        let mut r = self.clone();
        r.metadata.timestamp = 0;
        r.to_json()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub report: Report,
    pub csv: Option<String>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        self.report.exit_code
    }
}

/// A failed command with its error.
#[derive(Debug)]
struct Failure {
    code: i32,
    verdict: &'static str,
    error: ErrorInfo,
    result: Value,
}

fn kind_of<E: Debug>(e: &E) -> String {
    let s = format!("{e:?}");
    // Unwrap transparent wrappers such as `Selection(WitnessRejected(..))`.
    let mut rest = s.as_str();
    let mut last = "";
    for _ in 0..3 {
        let end = rest
            .find(|c: char| !c.is_alphanumeric() && c != '_')
            .unwrap_or(rest.len());
        last = &rest[..end];
        if rest[end..].starts_with('(')
            && matches!(last, "Selection" | "Property" | "FixedPoint" | "SetValue" | "Simplex" | "Witness")
        {
            rest = &rest[end + 1..];
        } else {
            break;
        }
    }
    last.to_string()
}

fn input_error<E: Debug + std::fmt::Display>(e: E) -> Failure {
    Failure {
        code: 2,
        verdict: "input_error",
        error: ErrorInfo {
            kind: kind_of(&e),
            message: e.to_string(),
        },
        result: Value::Null,
    }
}

fn not_found<E: Debug + std::fmt::Display>(e: E, result: Value) -> Failure {
    Failure {
        code: 1,
        verdict: "not_found",
        error: ErrorInfo {
            kind: kind_of(&e),
            message: e.to_string(),
        },
        result,
    }
}

impl From<DocError> for Failure {
    fn from(e: DocError) -> Self {
        input_error(e)
    }
}

impl From<PropertyError> for Failure {
    fn from(e: PropertyError) -> Self {
        input_error(e)
    }
}

impl From<SimplexError> for Failure {
    fn from(e: SimplexError) -> Self {
        input_error(e)
    }
}

impl From<SelectionError> for Failure {
    fn from(e: SelectionError) -> Self {
        match &e {
            SelectionError::WitnessRejected(c) | SelectionError::NoWcgTuple(c) => {
                let result = json!({ "counterexample": c });
                not_found(e, result)
            }
            SelectionError::EmptyCore => not_found(e, Value::Null),
            SelectionError::Property(_) | SelectionError::Witness(_) | SelectionError::SetValue(_) => {
                input_error(e)
            }
            _ => input_error(e),
        }
    }
}

impl From<FixedPointError> for Failure {
    fn from(e: FixedPointError) -> Self {
        match e {
            FixedPointError::Selection(inner) => inner.into(),
            FixedPointError::ToleranceNotReached { .. }
            | FixedPointError::PostVerificationFailed { .. } => not_found(e, Value::Null),
            _ => input_error(e),
        }
    }
}

impl From<EconomyError> for Failure {
    fn from(e: EconomyError) -> Self {
        use EconomyError::*;
        match e {
            Selection(inner) => inner.into(),
            FixedPoint(inner) => inner.into(),
            WitnessRejected { ref counterexample, .. } => {
                let result = json!({ "counterexample": counterexample });
                not_found(e, result)
            }
            WNotProper { .. }
            | WNotCovered { .. }
            | NoFixedPointWithinTolerance { .. }
            | CertificateFailed { .. }
            | IterateEscapedQ { .. }
            | NestingFailed { .. }
            | LimitCheckFailed { .. } => not_found(e, Value::Null),
            _ => input_error(e),
        }
    }
}

fn bad(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        verdict: "input_error",
        error: ErrorInfo {
            kind: "Usage".into(),
            message: message.into(),
        },
        result: Value::Null,
    }
}

fn parse_list(s: &str) -> Result<Vec<f64>, Failure> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| bad(format!("bad number {t:?}: {e}"))))
        .collect()
}

fn parse_points(s: &str) -> Result<Vec<Vec<f64>>, Failure> {
    s.split(';').map(parse_list).collect()
}

fn parse_json_arg<T: for<'de> Deserialize<'de>>(flag: &str, s: &str) -> Result<T, Failure> {
    let t = s.trim();
    let text = if t.starts_with('{') || t.starts_with('"') {
        t.to_string()
    } else {
        format!("{t:?}")
    };
    serde_json::from_str(&text).map_err(|e| bad(format!("--{flag}: {e}")))
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("results serialize")
}

fn input<'a>(inputs: &'a [ToolkitDocument], i: usize, what: &str) -> Result<&'a ToolkitDocument, Failure> {
    inputs
        .get(i)
        .ok_or_else(|| bad(format!("missing input {} ({what})", i + 1)))
}

/// `--points`, or the endpoints of a one-dimensional domain.
fn base_points(t: &dyn Correspondence, opts: &Options) -> Result<Vec<Vec<f64>>, Failure> {
    match &opts.points {
        Some(p) => parse_points(p),
        None if t.dim() == 1 => {
            let s = t.domain().side(0);
            Ok(vec![vec![s.lo], vec![s.hi]])
        }
        None => Err(bad("--points is required for multi-dimensional domains")),
    }
}

fn values(opts: &Options) -> Result<Vec<f64>, Failure> {
    opts.values
        .as_deref()
        .map(parse_list)
        .unwrap_or_else(|| Err(bad("--values is required")))
}

struct Success {
    code: i32,
    verdict: &'static str,
    result: Value,
    csv: Option<String>,
}

fn ok(verdict: &'static str, result: Value) -> Success {
    Success {
        code: 0,
        verdict,
        result,
        csv: None,
    }
}

fn falsifier(cx: Option<Counterexample>) -> Success {
    match cx {
        None => ok("pass", json!({ "counterexample": null })),
        Some(c) => Success {
            code: 1,
            verdict: "counterexample",
            result: json!({ "counterexample": c }),
            csv: None,
        },
    }
}

fn verdict(v: Verdict) -> Success {
    let pass = v.is_pass();
    Success {
        code: if pass { 0 } else { 1 },
        verdict: if pass { "pass" } else { "counterexample" },
        result: to_value(&v),
        csv: None,
    }
}

/// Selection from a witness document at `idx`, or from `--values`.
fn compose_witness(inputs: &[ToolkitDocument], idx: usize, opts: &Options) -> Result<ComposeWitness, Failure> {
    match inputs.get(idx) {
        Some(d) => Ok(ComposeWitness::Wnq(d.as_witness()?.clone())),
        None => Ok(ComposeWitness::Star(values(opts)?)),
    }
}

/// The worked example's witness at two base points: one knot where the
/// segment crosses 2, values 0 and 2.
pub fn ex1_witness(x1: f64, x2: f64) -> Result<WnqWitness, crate::witness::WitnessError> {
    let knot = (2.0 - x2) / (x1 - x2);
    WnqWitness::new(
        vec![vec![x1], vec![x2]],
        vec![0.0, 2.0],
        Reparameterization::one_knot(knot, Orientation::First)?,
    )
}

fn demo_ex1(opts: &Options) -> Result<Success, Failure> {
    let t = fixtures::ex1();
    let grid = opts.grid_spec();
    let tol = opts.tol.unwrap_or(1e-9);
    let mut stages = Vec::new();
    let mut all = true;
    let mut stage = |name: &str, good: bool, detail: Value| {
        all &= good;
        stages.push(json!({ "stage": name, "as_expected": good, "detail": detail }));
    };

    let usc = falsify_usc(&t, &grid)?;
    let lsc = falsify_lsc(&t, &grid)?;
    stage(
        "continuity",
        usc.is_some() && lsc.is_some(),
        json!({ "usc_counterexample": usc, "lsc_counterexample": lsc }),
    );

    let wcg = falsify_wcg(&t, &[vec![1.0], vec![3.0]], &grid)?;
    stage(
        "weakly_convex_graph",
        matches!(wcg, WcgVerdict::Refuted { .. }),
        to_value(&wcg),
    );

    let inner = ex1_witness(1.0, 3.0).map_err(input_error)?;
    let outer = ex1_witness(0.0, 4.0).map_err(input_error)?;
    let v_inner = verify_wnq_witness(&t, &inner, &grid)?;
    let v_outer = verify_wnq_witness(&t, &outer, &grid)?;
    stage(
        "wnq_witness",
        v_inner.is_pass() && v_outer.is_pass(),
        json!({ "witness": outer, "at_1_3": v_inner, "at_0_4": v_outer }),
    );

    let k = Simplex::new(vec![vec![0.0], vec![4.0]])?;
    let f = build_selection(&k, &t, &outer, &grid)?;
    let report = validate_selection(&f, &t, 10_000, 1e-6)?;
    stage(
        "selection",
        report.is_valid(),
        json!({ "selection": f, "validation": report }),
    );

    let fixed = composed_fixed_point(
        &k,
        &t,
        &ComposeWitness::Wnq(outer),
        &TransferMap::affine_1d(1.0, 2.0),
        &grid,
        &BrouwerOptions {
            tol,
            ..BrouwerOptions::default()
        },
    );
    match fixed {
        Ok(c) => {
            let x = c.result.point[0];
            let good = (2.0..=4.0).contains(&x) && c.result.residual <= tol;
            stage(
                "composed_fixed_point",
                good,
                json!({ "point": c.result.point, "residual": c.result.residual, "selection_value": c.selection_value, "post_distance": c.post_distance }),
            );
        }
        Err(e) => stage("composed_fixed_point", false, json!({ "error": e.to_string() })),
    }
    Ok(Success {
        code: if all { 0 } else { 1 },
        verdict: if all { "pass" } else { "counterexample" },
        result: json!({ "stages": stages }),
        csv: Some(f.to_csv(opts.samples)),
    })
}

fn dispatch(name: &str, inputs: &[ToolkitDocument], opts: &Options) -> Result<Success, Failure> {
    let grid = opts.grid_spec();
    grid.validate().map_err(bad)?;
    let tol6 = opts.tol.unwrap_or(1e-6);
    let tol9 = opts.tol.unwrap_or(1e-9);
    let corr = |i: usize| -> Result<&crate::setvalue::PiecewiseCorrespondence, Failure> {
        Ok(input(inputs, i, "correspondence")?.as_correspondence()?)
    };
    let simplex = |i: usize| -> Result<&Simplex, Failure> { Ok(input(inputs, i, "simplex")?.as_simplex()?) };
    let economy = |i: usize| -> Result<&crate::economy::AbstractEconomy, Failure> {
        Ok(input(inputs, i, "economy")?.as_economy()?)
    };
    let eq_opts = EquilibriumOptions {
        tol: tol6,
        grid,
        resolution: opts.grid,
        ..EquilibriumOptions::default()
    };
    Ok(match name {
        "check-usc" => falsifier(falsify_usc(corr(0)?, &grid)?),
        "check-lsc" => falsifier(falsify_lsc(corr(0)?, &grid)?),
        "check-ols" => falsifier(falsify_open_lower_sections(corr(0)?, &grid)?),
        "check-wcg" => {
            let t = corr(0)?;
            let v = falsify_wcg(t, &base_points(t, opts)?, &grid)?;
            let code = if matches!(v, WcgVerdict::Holds { .. }) { 0 } else { 1 };
            Success {
                code,
                verdict: if code == 0 { "found" } else { "counterexample" },
                result: to_value(&v),
                csv: None,
            }
        }
        "check-nqc" => {
            let cone = match opts.cone.as_deref().unwrap_or("nonneg") {
                "zero" => Cone::Zero,
                "nonneg" => Cone::Nonneg,
                other => return Err(bad(format!("--cone must be zero or nonneg, got {other:?}"))),
            };
            falsifier(falsify_natural_quasi_concave(corr(0)?, cone, &grid)?)
        }
        "check-wnq" => {
            let w = input(inputs, 1, "witness")?.as_witness()?;
            verdict(verify_wnq_witness(corr(0)?, w, &grid)?)
        }
        "search-wnq" => {
            let t = corr(0)?;
            match search_wnq_witness(t, &base_points(t, opts)?, &grid)? {
                Some(w) => ok("found", json!({ "witness": w })),
                None => Success {
                    code: 1,
                    verdict: "not_found",
                    result: json!({ "witness": null }),
                    csv: None,
                },
            }
        }
        "check-star" => {
            let t = corr(0)?;
            verdict(verify_star_witness(t, &base_points(t, opts)?, &values(opts)?, &grid)?)
        }
        "check-wnqs" => {
            let w = match inputs.get(3) {
                Some(d) => Some(d.as_witness()?),
                None => None,
            };
            let out = verify_wnqs_property(
                corr(0)?,
                simplex(2)?,
                corr(1)?,
                opts.eps,
                opts.agent.unwrap_or(0),
                &grid,
                w,
            )?;
            let pass = out.verdict.is_pass();
            Success {
                code: if pass { 0 } else { 1 },
                verdict: if pass { "pass" } else { "counterexample" },
                result: to_value(&out),
                csv: None,
            }
        }
        "select" | "select-star" => {
            let t = corr(0)?;
            let k = simplex(1)?;
            let f = if name == "select" {
                build_selection(k, t, input(inputs, 2, "witness")?.as_witness()?, &grid)?
            } else {
                build_selection_star(k, t, &values(opts)?, &grid)?
            };
            Success {
                csv: Some(f.to_csv(opts.samples)),
                ..ok("found", json!({ "selection": f }))
            }
        }
        "validate-selection" => {
            let t = corr(0)?;
            let k = simplex(1)?;
            let f: Selection = match inputs.get(2) {
                Some(d) => unchecked_selection(k, d.as_witness()?),
                None => unchecked_selection_star(k, &values(opts)?)?,
            };
            let report = validate_selection(&f, t, opts.grid.max(2), tol6)?;
            let valid = report.is_valid();
            Success {
                code: if valid { 0 } else { 1 },
                verdict: if valid { "pass" } else { "counterexample" },
                result: json!({ "selection": f, "validation": report }),
                csv: Some(f.to_csv(opts.samples)),
            }
        }
        "brouwer" => {
            let k = simplex(0)?;
            let map: MapSpec = match &opts.map {
                Some(m) => parse_json_arg("map", m)?,
                None => return Err(bad("--map is required")),
            };
            let h = |x: &[f64]| map.apply(x);
            let r = brouwer_fixed_point(
                k,
                &h,
                &BrouwerOptions {
                    tol: tol9,
                    ..BrouwerOptions::default()
                },
            )?;
            Success {
                csv: Some(r.trace_csv()),
                ..ok("found", json!({ "map": map, "fixed_point": r }))
            }
        }
        "compose-fix" => {
            let t = corr(0)?;
            let k = simplex(1)?;
            let s: TransferMap = match &opts.transfer {
                Some(s) => parse_json_arg("transfer", s)?,
                None => TransferMap::Affine {
                    scale: vec![1.0; k.ambient_dim()],
                    shift: vec![0.0; k.ambient_dim()],
                },
            };
            let w = compose_witness(inputs, 2, opts)?;
            let out = composed_fixed_point(
                k,
                t,
                &w,
                &s,
                &grid,
                &BrouwerOptions {
                    tol: tol9,
                    ..BrouwerOptions::default()
                },
            )?;
            Success {
                csv: Some(out.result.trace_csv()),
                ..ok("found", json!({ "transfer": s, "fixed_point": out }))
            }
        }
        "setval-fix" => {
            if inputs.is_empty() {
                return Err(bad("setval-fix needs one correspondence per coordinate"));
            }
            let coords = (0..inputs.len()).map(corr).collect::<Result<Vec<_>, _>>()?;
            let refs: Vec<&dyn Correspondence> = coords.iter().map(|c| *c as &dyn Correspondence).collect();
            let warm = opts.warm.as_deref().map(parse_list).transpose()?;
            let r = approx_fixed_point_setvalued(
                &refs,
                &SetValuedOptions {
                    tol: tol6,
                    resolution: opts.grid,
                    warm_start: warm,
                    ..SetValuedOptions::default()
                },
            )?;
            Success {
                csv: Some(r.trace_csv()),
                ..ok("found", json!({ "fixed_point": r }))
            }
        }
        "compute-w" => {
            let econ = economy(0)?;
            let agents: Vec<usize> = match opts.agent {
                Some(a) => vec![a],
                None => (0..econ.agents().len()).collect(),
            };
            let reports = agents
                .into_iter()
                .map(|i| compute_w(econ, i))
                .collect::<Result<Vec<_>, _>>()?;
            ok("found", json!({ "w": reports }))
        }
        "equilibrium-selection" => {
            let cert = equilibrium_via_selection(economy(0)?, &eq_opts)?;
            ok("found", json!({ "certificate": cert }))
        }
        "equilibrium-approx" => {
            let sched = halving_schedule(opts.eps0, opts.eps_steps);
            let cert = equilibrium_via_approximation(economy(0)?, &sched, &eq_opts)?;
            ok("found", json!({ "certificate": cert }))
        }
        "verify-equilibrium" => {
            let econ = economy(0)?;
            let x = match &opts.point {
                Some(p) => parse_list(p)?,
                None => return Err(bad("--point is required")),
            };
            let cert = verify_equilibrium_with(econ, &x, tol6, &DEFAULT_DELTA_SCHEDULE)?;
            let pass = cert.passed;
            Success {
                code: if pass { 0 } else { 1 },
                verdict: if pass { "pass" } else { "counterexample" },
                result: json!({ "certificate": cert }),
                csv: None,
            }
        }
        "demo-ex1" => demo_ex1(opts)?,
        other => return Err(bad(format!("unknown command {other:?}"))),
    })
}

fn timestamp() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn finish(name: &str, inputs: Vec<ToolkitDocument>, opts: &Options, res: Result<Success, Failure>) -> Outcome {
    let (code, verdict, result, error, csv) = match res {
        Ok(s) => (s.code, s.verdict, s.result, None, s.csv),
        Err(f) => (f.code, f.verdict, f.result, Some(f.error), None),
    };
    Outcome {
        report: Report {
            command: name.to_string(),
            verdict: verdict.to_string(),
            exit_code: code,
            inputs,
            options: opts.clone(),
            result,
            error,
            metadata: Metadata {
                tool: "corrkit".into(),
                version: env!("CARGO_PKG_VERSION").into(),
                timestamp: timestamp(),
            },
        },
        csv,
    }
}

/// Runs `name` on already loaded documents.
pub fn execute_documents(name: &str, inputs: Vec<ToolkitDocument>, opts: &Options) -> Outcome {
    let res = dispatch(name, &inputs, opts);
    finish(name, inputs, opts, res)
}

fn load_all(paths: &[PathBuf]) -> Result<Vec<ToolkitDocument>, Failure> {
    paths.iter().map(|p| doc::load(p).map_err(Failure::from)).collect()
}

fn run_job(path: &Path) -> Outcome {
    let staged = (|| {
        let d = doc::load(path)?;
        let job = d.as_job()?.clone();
        if !COMMANDS.contains(&job.command.as_str()) {
            return Err(Failure::from(DocError::SchemaError {
                field: "command".into(),
                message: format!("unknown command {:?}", job.command),
            }));
        }
        let opts: Options = if job.options.is_null() {
            Options::default()
        } else {
            serde_json::from_value(job.options.clone()).map_err(|e| {
                Failure::from(DocError::SchemaError {
                    field: "options".into(),
                    message: e.to_string(),
                })
            })?
        };
        let base = path.parent().unwrap_or(Path::new("."));
        let inputs = job
            .inputs
            .iter()
            .map(|n| doc::resolve(&job, n, base))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((job.command, inputs, opts))
    })();
    match staged {
        Ok((name, inputs, opts)) => execute_documents(&name, inputs, &opts),
        Err(f) => finish("run", Vec::new(), &Options::default(), Err(f)),
    }
}

/// Runs a parsed command without writing any files.
pub fn execute(command: &Command) -> Outcome {
    let (name, inv) = command.parts();
    if name == "run" {
        return match inv.inputs.as_slice() {
            [job] => run_job(job),
            _ => finish("run", Vec::new(), &inv.options, Err(bad("run takes exactly one job document"))),
        };
    }
    match load_all(&inv.inputs) {
        Ok(inputs) => execute_documents(name, inputs, &inv.options),
        Err(f) => finish(name, Vec::new(), &inv.options, Err(f)),
    }
}

/// Entry point for the binary: parses `args`, runs the command, writes the
/// report and CSV, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let outcome = execute(&cli.command);
    let (_, inv) = cli.command.parts();
    let json = outcome.report.to_json();
    let mut code = outcome.exit_code();
    match &inv.out {
        Some(p) => {
            if let Err(e) = std::fs::write(p, &json) {
                eprintln!("cannot write {}: {e}", p.display());
                code = 2;
            }
        }
        None => print!("{json}"),
    }
    if let (Some(p), Some(csv)) = (&inv.csv, &outcome.csv) {
        if let Err(e) = std::fs::write(p, csv) {
            eprintln!("cannot write {}: {e}", p.display());
            code = 2;
        }
    }
    if let Some(err) = &outcome.report.error {
        eprintln!("{}: {}", err.kind, err.message);
    }
    code
}
