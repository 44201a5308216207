//! Finite abstract economies with interval strategy sets, the sets `W_i`
//! where an agent has a feasible improvement, two equilibrium searches built
//! on continuous selections, and equilibrium certificates.

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::fixedpoint::{
    approx_fixed_point_setvalued, FixedPointError, FixedPointResult, SetValuedOptions,
};
use crate::grid::GridSpec;
use crate::properties::{verify_wnqs_property, Counterexample, PropertyError, Verdict};
use crate::selection::{
    unchecked_selection, wnq_witness_from_constant_core, Selection, SelectionError,
};
use crate::setvalue::{
    Correspondence, FnCorrespondence, Interval, IntervalUnion, PiecewiseCorrespondence, Rect,
    Region, SetValueError, DEFAULT_DELTA_SCHEDULE,
};
use crate::simplex::{Simplex, SimplexError};
use crate::witness::WnqWitness;

pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EconomyError {
    #[error("an economy needs at least one agent")]
    NoAgents,
    #[error("agent {agent}: strategy set [{lo}, {hi}] is not a nonempty compact interval")]
    BadStrategySet { agent: usize, lo: f64, hi: f64 },
    #[error("agent {agent}: {which} is not defined on the strategy profile box")]
    DomainMismatch { agent: usize, which: &'static str },
    #[error("agent {agent}: {which} takes values outside the agent's strategy set")]
    ValueOutsideStrategySet { agent: usize, which: &'static str },
    #[error("agent {agent}: B has an empty value on {cell}")]
    EmptyConstraint { agent: usize, cell: String },
    #[error("agent {agent}: A is not contained in B on {cell}")]
    ConstraintNotContained { agent: usize, cell: String },
    #[error("agent index {0} is out of range")]
    AgentOutOfRange(usize),
    #[error(
        "agent {agent}: W is the whole strategy space; a fixed point of the patched map \
         would then lie in W and contradict the diagonal condition, so W must be a proper subset"
    )]
    WNotProper { agent: usize },
    #[error("agent {agent}: the simplex does not cover W")]
    WNotCovered { agent: usize },
    #[error("agent {agent}: simplex must live in the {expected}-dimensional strategy space")]
    SimplexDimension { agent: usize, expected: usize },
    #[error("agent {agent}: witness rejected{}: {}", eps.map(|e| format!(" at eps = {e}")).unwrap_or_default(), counterexample.trace)]
    WitnessRejected {
        agent: usize,
        eps: Option<f64>,
        counterexample: Box<Counterexample>,
    },
    #[error("no fixed point within tolerance: best residual {best_residual:e} at {point:?}")]
    NoFixedPointWithinTolerance { best_residual: f64, point: Vec<f64> },
    #[error("agent {agent}: certificate failed at {point:?}: {reason}")]
    CertificateFailed {
        agent: usize,
        point: Vec<f64>,
        reason: String,
    },
    #[error("iterate {point:?} for eps = {eps} is outside Q (agent {agent})")]
    IterateEscapedQ {
        eps: f64,
        agent: usize,
        point: Vec<f64>,
    },
    #[error("nesting of Q failed between eps = {outer} and eps = {inner}")]
    NestingFailed { outer: f64, inner: f64 },
    #[error("agent {agent}: limit check failed at {point:?}")]
    LimitCheckFailed { agent: usize, point: Vec<f64> },
    #[error("point {point:?} is outside the strategy space")]
    OutsideDomain { point: Vec<f64> },
    #[error("eps schedule must be a nonempty strictly decreasing list of positive reals")]
    InvalidSchedule,
    #[error(transparent)]
    Property(#[from] PropertyError),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    FixedPoint(#[from] FixedPointError),
    #[error(transparent)]
    SetValue(#[from] SetValueError),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
}

/// One agent: strategy set `X_i`, constraint maps `A_i ⊂ B_i`, preference map
/// `P_i`, all defined on the profile box `X = Π X_j`, plus an optional
/// selection plan (simplex `K_i`, sub-correspondence `S_i`, witness).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Agent {
    pub name: String,
    #[serde(rename = "X")]
    pub strategies: (f64, f64),
    #[serde(rename = "A")]
    pub a: PiecewiseCorrespondence,
    #[serde(rename = "P")]
    pub p: PiecewiseCorrespondence,
    #[serde(rename = "B")]
    pub b: PiecewiseCorrespondence,
    #[serde(rename = "K", default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Simplex>,
    /// Sub-correspondence of `A_i ∩ P_i` to select from; `A_i ∩ P_i` itself
    /// when absent.
    #[serde(rename = "S", default, skip_serializing_if = "Option::is_none")]
    pub s: Option<PiecewiseCorrespondence>,
    /// Witness for `S_i` at the vertices of `K_i`; the constant-core witness
    /// when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<WnqWitness>,
}

impl Agent {
    pub fn strategy_interval(&self) -> Interval {
        Interval::closed(self.strategies.0, self.strategies.1)
    }

    /// `A_i ∩ P_i`.
    pub fn improvement(&self) -> Result<PiecewiseCorrespondence, SetValueError> {
        self.a.intersect(&self.p)
    }
}

/// A validated economy; immutable after construction.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AbstractEconomy {
    agents: Vec<Agent>,
    #[serde(skip)]
    domain: Rect,
}

#[derive(Deserialize)]
struct EconomyRepr {
    agents: Vec<Agent>,
}

impl<'de> Deserialize<'de> for AbstractEconomy {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = EconomyRepr::deserialize(deserializer)?;
        AbstractEconomy::new(repr.agents).map_err(serde::de::Error::custom)
    }
}

impl AbstractEconomy {
    /// Checks that every map lives on `Π X_i` with values in `X_i`, that
    /// `B_i` is nonempty-valued and that `A_i(x) ⊂ B_i(x)` on every cell of
    /// the common refinement.
    pub fn new(agents: Vec<Agent>) -> Result<Self, EconomyError> {
        if agents.is_empty() {
            return Err(EconomyError::NoAgents);
        }
        for (i, ag) in agents.iter().enumerate() {
            let (lo, hi) = ag.strategies;
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(EconomyError::BadStrategySet { agent: i, lo, hi });
            }
        }
        let domain = Rect::new(agents.iter().map(Agent::strategy_interval).collect());
        for (i, ag) in agents.iter().enumerate() {
            let xi = ag.strategy_interval();
            for (which, t) in [("A", &ag.a), ("P", &ag.p), ("B", &ag.b)] {
                if t.domain() != &domain {
                    return Err(EconomyError::DomainMismatch { agent: i, which });
                }
                if !t.pieces().iter().all(|p| p.value.is_subset_of_interval(&xi)) {
                    return Err(EconomyError::ValueOutsideStrategySet { agent: i, which });
                }
            }
            if let Some(s) = &ag.s {
                if s.domain() != &domain {
                    return Err(EconomyError::DomainMismatch { agent: i, which: "S" });
                }
            }
            if let Some(p) = ag.b.pieces().iter().find(|p| p.value.is_empty()) {
                return Err(EconomyError::EmptyConstraint {
                    agent: i,
                    cell: p.cell.to_string(),
                });
            }
            for pa in ag.a.pieces() {
                for pb in ag.b.pieces() {
                    let cell = pa.cell.intersect(&pb.cell);
                    if !cell.is_empty() && !pa.value.is_subset(&pb.value) {
                        return Err(EconomyError::ConstraintNotContained {
                            agent: i,
                            cell: cell.to_string(),
                        });
                    }
                }
            }
            if let Some(k) = &ag.k {
                if k.ambient_dim() != domain.dim() {
                    return Err(EconomyError::SimplexDimension {
                        agent: i,
                        expected: domain.dim(),
                    });
                }
            }
        }
        Ok(AbstractEconomy { agents, domain })
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    /// `X = Π X_i`.
    pub fn domain(&self) -> &Rect {
        &self.domain
    }

    fn agent(&self, i: usize) -> Result<&Agent, EconomyError> {
        self.agents.get(i).ok_or(EconomyError::AgentOutOfRange(i))
    }
}

/// `W_i = {x : (A_i ∩ P_i)(x) ≠ ∅}` as an exact union of cells.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WReport {
    pub agent: usize,
    pub region: Region,
    pub is_empty: bool,
    /// The region as one box, when it is one.
    pub as_box: Option<Rect>,
    /// `W_i ≠ X`.
    pub proper: bool,
}

pub fn compute_w(econ: &AbstractEconomy, agent: usize) -> Result<WReport, EconomyError> {
    let region = econ.agent(agent)?.improvement()?.nonempty_region();
    Ok(WReport {
        agent,
        is_empty: region.is_empty(),
        as_box: region.as_box(),
        proper: !region.is_whole_domain(),
        region,
    })
}

/// Per-agent verdicts at a candidate equilibrium.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AgentVerdict {
    pub agent: usize,
    pub name: String,
    /// `A_i(x) ∩ P_i(x)`, decided exactly.
    pub improvement: IntervalUnion,
    pub improvement_empty: bool,
    /// Distance from `x_i` to `cl B_i(x)`.
    pub closure_distance: f64,
    pub closure_member: bool,
    /// Distance from `x_i` to the graph adherence of `B_i` at `x`.
    pub adherence_distance: f64,
    pub adherence_member: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ApproxIterate {
    pub eps: f64,
    pub point: Vec<f64>,
    pub residual: f64,
    pub in_q: bool,
    /// The iterate also lies in the previous `Q`.
    pub in_previous_q: Option<bool>,
    /// Every cell value of the inflated constraints shrinks from the previous
    /// radius to this one.
    pub cellwise_nesting: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum MethodTrace {
    Verification,
    Selection {
        w: Vec<WReport>,
        patched_agents: Vec<usize>,
        fixed_point: FixedPointResult,
    },
    Approximation {
        eps_schedule: Vec<f64>,
        patched_agents: Vec<usize>,
        iterates: Vec<ApproxIterate>,
        limit_check: bool,
    },
}

/// A candidate equilibrium with the verdicts for both readings of the
/// constraint condition: `x_i ∈ B̄_i(x)` (graph adherence) and
/// `x_i ∈ cl B_i(x)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquilibriumCertificate {
    pub point: Vec<f64>,
    pub tol: f64,
    pub deltas: Vec<f64>,
    /// Improvement sets empty and `x_i ∈ B̄_i(x)` within `tol`.
    pub passed: bool,
    /// Improvement sets empty and `x_i ∈ cl B_i(x)` within `tol`.
    pub closure_form_passed: bool,
    pub agents: Vec<AgentVerdict>,
    pub trace: MethodTrace,
    pub notes: Vec<String>,
}

impl EquilibriumCertificate {
    /// Recomputes the verdicts at the same point and tolerance.
    pub fn reverify(&self, econ: &AbstractEconomy) -> Result<bool, EconomyError> {
        let again = verify_equilibrium_with(econ, &self.point, self.tol, &self.deltas)?;
        Ok(again.passed == self.passed
            && again.closure_form_passed == self.closure_form_passed
            && again.agents == self.agents)
    }
}

pub fn verify_equilibrium(
    econ: &AbstractEconomy,
    x: &[f64],
    tol: f64,
) -> Result<EquilibriumCertificate, EconomyError> {
    verify_equilibrium_with(econ, x, tol, &DEFAULT_DELTA_SCHEDULE)
}

/// Checks `(A_i ∩ P_i)(x) = ∅` exactly and `x_i` against `B̄_i(x)` (radii
/// `deltas`) and `cl B_i(x)` within `tol`, for every agent.
pub fn verify_equilibrium_with(
    econ: &AbstractEconomy,
    x: &[f64],
    tol: f64,
    deltas: &[f64],
) -> Result<EquilibriumCertificate, EconomyError> {
    if x.len() != econ.domain.dim() || !econ.domain.contains(x) {
        return Err(EconomyError::OutsideDomain { point: x.to_vec() });
    }
    let mut agents = Vec::with_capacity(econ.agents.len());
    for (i, ag) in econ.agents.iter().enumerate() {
        let improvement = ag.a.evaluate(x)?.intersect(ag.p.evaluate(x)?);
        let closure_distance = ag.b.evaluate(x)?.closure().distance(x[i]);
        let adherence_distance = ag.b.graph_adherence(x, deltas)?.distance(x[i]);
        agents.push(AgentVerdict {
            agent: i,
            name: ag.name.clone(),
            improvement_empty: improvement.is_empty(),
            improvement,
            closure_member: closure_distance <= tol,
            closure_distance,
            adherence_member: adherence_distance <= tol,
            adherence_distance,
        });
    }
    Ok(EquilibriumCertificate {
        point: x.to_vec(),
        tol,
        deltas: deltas.to_vec(),
        passed: agents.iter().all(|a| a.improvement_empty && a.adherence_member),
        closure_form_passed: agents.iter().all(|a| a.improvement_empty && a.closure_member),
        agents,
        trace: MethodTrace::Verification,
        notes: Vec::new(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumOptions {
    pub tol: f64,
    /// Grid for witness verification.
    pub grid: GridSpec,
    /// Grid points per axis for the fixed-point scan.
    pub resolution: usize,
    pub rounds: usize,
    pub deltas: Vec<f64>,
}

impl Default for EquilibriumOptions {
    fn default() -> Self {
        EquilibriumOptions {
            tol: DEFAULT_TOL,
            grid: GridSpec::default(),
            resolution: 1000,
            rounds: 60,
            deltas: DEFAULT_DELTA_SCHEDULE.to_vec(),
        }
    }
}

/// Where the selection replaces the constraint in the patched map.
#[derive(Clone, Copy, Debug, PartialEq)]
enum PatchRegion {
    /// `x ∈ K_i`.
    ClosedSimplex,
    /// `x ∈ W_i ∪ int_X K_i`.
    WOrRelativeInterior,
}

struct Patch {
    k: Simplex,
    w: Region,
    f: Selection,
    region: PatchRegion,
}

/// `T_i(x) = {f_i(x)}` on the patch region, `cl(B_i(x) + [-eps, eps]) ∩ X_i`
/// elsewhere (`eps = 0` gives `cl B_i(x)`).
fn patched_map(
    domain: &Rect,
    agent: &Agent,
    patch: Option<Patch>,
    eps: f64,
) -> FnCorrespondence<impl Fn(&[f64]) -> IntervalUnion + Send + Sync> {
    let b = agent.b.clone();
    let xi = agent.strategy_interval();
    let domain_c = domain.clone();
    let mut extra: Vec<Vec<f64>> = (0..domain.dim()).map(|a| b.breakpoints(a)).collect();
    if let Some(p) = &patch {
        for (a, (lo, hi)) in p.k.bounding_box().into_iter().enumerate() {
            extra[a].extend([lo, hi]);
        }
        for cell in p.w.cells() {
            for (a, side) in cell.sides().iter().enumerate() {
                extra[a].extend([side.lo, side.hi]);
            }
        }
    }
    let f = move |x: &[f64]| {
        if let Some(p) = &patch {
            let inside = match p.region {
                PatchRegion::ClosedSimplex => in_simplex(&p.k, x),
                PatchRegion::WOrRelativeInterior => {
                    p.w.contains(x) || in_relative_interior(&p.k, &domain_c, x)
                }
            };
            if inside {
                if let Ok(y) = p.f.eval(x) {
                    return IntervalUnion::point(y);
                }
            }
        }
        let v = b.evaluate(x).cloned().unwrap_or_else(|_| IntervalUnion::empty());
        let v = if eps > 0.0 { v.inflate_closed(eps) } else { v.closure() };
        v.intersect_interval(&xi)
    };
    let mut t = FnCorrespondence::new(domain.clone(), f);
    for (a, mut pts) in extra.into_iter().enumerate() {
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        t = t.with_breakpoints(a, pts);
    }
    t
}

fn in_simplex(k: &Simplex, x: &[f64]) -> bool {
    k.barycentric(x).map(|l| l.is_inside()).unwrap_or(false)
}

/// Interior of `K` relative to the box `X`: inside `K`, and every facet of
/// `K` that `x` touches lies in a face of `X`.
fn in_relative_interior(k: &Simplex, domain: &Rect, x: &[f64]) -> bool {
    let Ok(lambda) = k.barycentric(x) else {
        return false;
    };
    if !lambda.is_inside() {
        return false;
    }
    let full_dims = domain.sides().iter().filter(|s| s.width() > 0.0).count();
    if k.dim() < full_dims {
        return false;
    }
    lambda.weights().iter().enumerate().all(|(j, &w)| {
        w > 0.0 || {
            let facet: Vec<&Vec<f64>> = k
                .vertices()
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != j)
                .map(|(_, v)| v)
                .collect();
            domain.sides().iter().enumerate().any(|(a, side)| {
                facet.iter().all(|v| v[a] == side.lo) || facet.iter().all(|v| v[a] == side.hi)
            })
        }
    })
}

/// `W ⊂ K`: every corner of every cell closure of `W` lies in `K`.
fn covers(k: &Simplex, w: &Region) -> bool {
    w.cells().iter().all(|c| c.closure().corners().iter().all(|p| in_simplex(k, p)))
}

/// `(A_i + (-eps, eps)) ∩ P_i`, or `A_i ∩ P_i` when `eps = 0`.
fn inflated_improvement(
    agent: &Agent,
    eps: f64,
) -> FnCorrespondence<impl Fn(&[f64]) -> IntervalUnion + Send + Sync> {
    let a = agent.a.clone();
    let p = agent.p.clone();
    let dim = a.domain().dim();
    let breaks: Vec<Vec<f64>> = (0..dim)
        .map(|ax| {
            let mut v = a.breakpoints(ax);
            v.extend(p.breakpoints(ax));
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        })
        .collect();
    let mut t = FnCorrespondence::new(a.domain().clone(), move |x: &[f64]| {
        let (Ok(av), Ok(pv)) = (a.evaluate(x), p.evaluate(x)) else {
            return IntervalUnion::empty();
        };
        let av = if eps > 0.0 { av.inflate_open(eps) } else { av.clone() };
        av.intersect(pv)
    });
    for (ax, pts) in breaks.into_iter().enumerate() {
        t = t.with_breakpoints(ax, pts);
    }
    t
}

/// Builds the verified selection for one agent, or `None` when the agent
/// has no simplex (such agents are left unpatched).
fn plan_selection(
    econ: &AbstractEconomy,
    i: usize,
    w: &WReport,
    eps: f64,
    grid: &GridSpec,
    region: PatchRegion,
) -> Result<Option<Patch>, EconomyError> {
    let ag = &econ.agents[i];
    let Some(k) = &ag.k else {
        return Ok(None);
    };
    if !covers(k, &w.region) {
        return Err(EconomyError::WNotCovered { agent: i });
    }
    let candidate = match &ag.s {
        Some(s) => s.clone(),
        None => ag.improvement()?,
    };
    let witness = match &ag.witness {
        Some(w) => w.clone(),
        None => wnq_witness_from_constant_core(&candidate, k)?,
    };
    let a_eps = inflated_improvement(ag, eps);
    let outcome = verify_wnqs_property(&a_eps, k, &candidate, 0.0, i, grid, Some(&witness))?;
    if let Verdict::Refuted(c) = outcome.verdict {
        return Err(EconomyError::WitnessRejected {
            agent: i,
            eps: (eps > 0.0).then_some(eps),
            counterexample: Box::new(c),
        });
    }
    Ok(Some(Patch {
        k: k.clone(),
        w: w.region.clone(),
        f: unchecked_selection(k, &witness),
        region,
    }))
}

fn solve(
    maps: &[&dyn Correspondence],
    opts: &EquilibriumOptions,
    warm_start: Option<Vec<f64>>,
) -> Result<FixedPointResult, EconomyError> {
    let sv = SetValuedOptions {
        tol: opts.tol,
        resolution: opts.resolution,
        rounds: opts.rounds,
        warm_start,
    };
    match approx_fixed_point_setvalued(maps, &sv) {
        Ok(r) => Ok(r),
        Err(FixedPointError::ToleranceNotReached {
            best_residual,
            best_point,
            ..
        }) => Err(EconomyError::NoFixedPointWithinTolerance {
            best_residual,
            point: best_point,
        }),
        Err(e) => Err(e.into()),
    }
}

const CONTAINER_NOTE: &str = "value container D_i taken as X_i";

/// Patches `T_i = {f_i}` on `K_i` and `cl B_i` elsewhere, finds a fixed point
/// of the product map and certifies it. Agents without a simplex are not
/// patched.
pub fn equilibrium_via_selection(
    econ: &AbstractEconomy,
    opts: &EquilibriumOptions,
) -> Result<EquilibriumCertificate, EconomyError> {
    let n = econ.agents.len();
    let mut ws = Vec::with_capacity(n);
    let mut patches = Vec::with_capacity(n);
    for i in 0..n {
        let w = compute_w(econ, i)?;
        if !w.proper {
            return Err(EconomyError::WNotProper { agent: i });
        }
        let patch = if w.is_empty {
            None
        } else {
            plan_selection(econ, i, &w, 0.0, &opts.grid, PatchRegion::ClosedSimplex)?
        };
        ws.push(w);
        patches.push(patch);
    }
    let patched_agents: Vec<usize> = (0..n).filter(|&i| patches[i].is_some()).collect();
    let maps: Vec<_> = econ
        .agents
        .iter()
        .zip(patches)
        .map(|(ag, p)| patched_map(&econ.domain, ag, p, 0.0))
        .collect();
    let refs: Vec<&dyn Correspondence> = maps.iter().map(|m| m as &dyn Correspondence).collect();
    let fixed = solve(&refs, opts, None)?;
    let x = fixed.point.clone();

    for w in &ws {
        if w.region.contains(&x) {
            return Err(EconomyError::CertificateFailed {
                agent: w.agent,
                point: x,
                reason: "the fixed point lies in W".into(),
            });
        }
    }
    let mut cert = verify_equilibrium_with(econ, &x, opts.tol, &opts.deltas)?;
    require_closure_form(&cert)?;
    cert.trace = MethodTrace::Selection {
        w: ws,
        patched_agents,
        fixed_point: fixed,
    };
    cert.notes.push(CONTAINER_NOTE.into());
    Ok(cert)
}

fn require_closure_form(cert: &EquilibriumCertificate) -> Result<(), EconomyError> {
    for a in &cert.agents {
        let reason = if !a.improvement_empty {
            format!("A ∩ P = {} is nonempty", a.improvement)
        } else if !a.closure_member {
            format!("x_i is {:e} away from cl B", a.closure_distance)
        } else {
            continue;
        };
        return Err(EconomyError::CertificateFailed {
            agent: a.agent,
            point: cert.point.clone(),
            reason,
        });
    }
    Ok(())
}

/// Membership of `x` in `Q_eps`: `x_i ∈ cl(B_i(x) + [-eps, eps]) ∩ X_i`
/// within `tol` and `(A_i ∩ P_i)(x) = ∅` for all `i`; returns the first
/// failing agent.
fn q_failure(econ: &AbstractEconomy, x: &[f64], eps: f64, tol: f64) -> Result<Option<usize>, EconomyError> {
    for (i, ag) in econ.agents.iter().enumerate() {
        let b = ag
            .b
            .evaluate(x)?
            .inflate_closed(eps)
            .intersect_interval(&ag.strategy_interval());
        let empty = ag.a.evaluate(x)?.intersect(ag.p.evaluate(x)?).is_empty();
        if !(b.distance(x[i]) <= tol && empty) {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

fn cellwise_nesting(econ: &AbstractEconomy, outer: f64, inner: f64) -> bool {
    econ.agents.iter().all(|ag| {
        let xi = ag.strategy_interval();
        ag.b.pieces().iter().all(|p| {
            p.value
                .inflate_closed(inner)
                .intersect_interval(&xi)
                .is_subset(&p.value.inflate_closed(outer).intersect_interval(&xi))
        })
    })
}

/// For each radius in `eps_schedule`: selects from `(A_i + (-eps, eps)) ∩ P_i`
/// on `K_i`, patches it in on `W_i ∪ int_X K_i` with `cl(B_i + eps) ∩ X_i`
/// elsewhere, and finds a fixed point warm-started at the previous one.
/// Each iterate must lie in `Q_eps` and in the previous `Q`; the last one is
/// accepted when `x_i` passes the limit membership check against `B_i`.
pub fn equilibrium_via_approximation(
    econ: &AbstractEconomy,
    eps_schedule: &[f64],
    opts: &EquilibriumOptions,
) -> Result<EquilibriumCertificate, EconomyError> {
    let ok = !eps_schedule.is_empty()
        && eps_schedule.iter().all(|&e| e > 0.0 && e.is_finite())
        && eps_schedule.windows(2).all(|w| w[1] < w[0]);
    if !ok {
        return Err(EconomyError::InvalidSchedule);
    }
    let n = econ.agents.len();
    let mut ws = Vec::with_capacity(n);
    for i in 0..n {
        let w = compute_w(econ, i)?;
        if !w.proper {
            return Err(EconomyError::WNotProper { agent: i });
        }
        ws.push(w);
    }
    let mut iterates: Vec<ApproxIterate> = Vec::with_capacity(eps_schedule.len());
    let mut patched_agents = Vec::new();
    let mut warm: Option<Vec<f64>> = None;
    for (step, &eps) in eps_schedule.iter().enumerate() {
        let mut patches = Vec::with_capacity(n);
        for (i, w) in ws.iter().enumerate() {
            patches.push(if w.is_empty {
                None
            } else {
                plan_selection(econ, i, w, eps, &opts.grid, PatchRegion::WOrRelativeInterior)?
            });
        }
        patched_agents = (0..n).filter(|&i| patches[i].is_some()).collect();
        let maps: Vec<_> = econ
            .agents
            .iter()
            .zip(patches)
            .map(|(ag, p)| patched_map(&econ.domain, ag, p, eps))
            .collect();
        let refs: Vec<&dyn Correspondence> = maps.iter().map(|m| m as &dyn Correspondence).collect();
        let fixed = solve(&refs, opts, warm.clone())?;
        let x = fixed.point;
        if let Some(agent) = q_failure(econ, &x, eps, opts.tol)? {
            return Err(EconomyError::IterateEscapedQ { eps, agent, point: x });
        }
        let (in_previous_q, nesting) = if step > 0 {
            let outer = eps_schedule[step - 1];
            (
                Some(q_failure(econ, &x, outer, opts.tol)?.is_none()),
                cellwise_nesting(econ, outer, eps),
            )
        } else {
            (None, true)
        };
        if in_previous_q == Some(false) || !nesting {
            return Err(EconomyError::NestingFailed {
                outer: eps_schedule[step - 1],
                inner: eps,
            });
        }
        iterates.push(ApproxIterate {
            eps,
            point: x.clone(),
            residual: fixed.residual,
            in_q: true,
            in_previous_q,
            cellwise_nesting: nesting,
        });
        warm = Some(x);
    }
    let x = warm.expect("schedule is nonempty");
    for (i, ag) in econ.agents.iter().enumerate() {
        if !ag
            .b
            .limit_membership_check(&x, x[i], eps_schedule, &opts.deltas, opts.tol)?
        {
            return Err(EconomyError::LimitCheckFailed { agent: i, point: x });
        }
    }
    let mut cert = verify_equilibrium_with(econ, &x, opts.tol, &opts.deltas)?;
    require_closure_form(&cert)?;
    cert.trace = MethodTrace::Approximation {
        eps_schedule: eps_schedule.to_vec(),
        patched_agents,
        iterates,
        limit_check: true,
    };
    cert.notes.push(CONTAINER_NOTE.into());
    Ok(cert)
}

/// `eps0 * 2^{-k}` for `k = 0..=halvings`.
pub fn halving_schedule(eps0: f64, halvings: usize) -> Vec<f64> {
    (0..=halvings).map(|k| eps0 / f64::powi(2.0, k as i32)).collect()
}
