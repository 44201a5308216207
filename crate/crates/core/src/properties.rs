//! Grid-based falsifiers and witness verifiers for continuity and generalized
//! concavity of correspondences.
//!
//! A falsifier that finds nothing makes a claim only at the grid it was run
//! on. Every counterexample it does return carries enough data to be
//! replayed against the definition it cites.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{
    combine_points, domain_axes, for_each_point, lex_product, product_size, segment_crossings,
    weight_set,
};
use crate::setvalue::{Correspondence, Interval, IntervalUnion, SetValueError};
use crate::simplex::{Simplex, SimplexError};
use crate::witness::{convex_value, Orientation, Reparameterization, WitnessError, WnqWitness};

pub use crate::grid::GridSpec;

/// Slack allowed when checking that `g` maps weights into the simplex.
pub const TOL_SIMPLEX: f64 = 1e-9;
/// Round-off slack for single-valued comparisons in the cone test.
pub const TOL_CONE: f64 = 1e-12;

/// Number of halvings of the probe radius a violation must survive.
const PROBE_LEVELS: i32 = 9;
const MAX_POINTS: u128 = 20_000_000;
const MAX_TUPLES: u128 = 2_000_000;
const NQC_AXIS_POINTS: usize = 41;
const NQC_WEIGHT_STEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PropertyError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("T(x_{index}) is empty at {point:?}")]
    EmptyValueAt { index: usize, point: Vec<f64> },
    #[error("value y_{0} is not in T(x_{0})")]
    WitnessValueNotInT(usize),
    #[error("g maps {lambda:?} to weights summing to {sum}, not to the simplex")]
    ReparamNotSimplexValued { lambda: Vec<f64>, sum: f64 },
    #[error("map is not single-valued at {point:?} (value {value})")]
    NotSingleValued { point: Vec<f64>, value: String },
    #[error("{0} candidate tuples exceed the search limit")]
    TooManyCandidates(u128),
    #[error("{0} grid points exceed the scan limit")]
    TooManyPoints(u128),
    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
    #[error("agent index {agent} out of range for a {dim}-dimensional domain")]
    AgentOutOfRange { agent: usize, dim: usize },
    #[error("inflation radius must be finite and nonnegative, got {0}")]
    InvalidEpsilon(f64),
    #[error("expected {expected} base points, got {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error(transparent)]
    SetValue(#[from] SetValueError),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
    #[error(transparent)]
    Witness(#[from] WitnessError),
}

/// The definition a counterexample refutes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Definition {
    UpperSemicontinuous,
    LowerSemicontinuous,
    OpenLowerSections,
    WeaklyConvexGraph,
    NaturalQuasiConcave,
    WeaklyNaturallyQuasiConcave,
    WeaklyStarConcave,
    WnqsProperty,
}

impl fmt::Display for Definition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Definition::UpperSemicontinuous => "upper semicontinuity",
            Definition::LowerSemicontinuous => "lower semicontinuity",
            Definition::OpenLowerSections => "open lower sections",
            Definition::WeaklyConvexGraph => "weakly convex graph",
            Definition::NaturalQuasiConcave => "natural quasi C-concavity",
            Definition::WeaklyNaturallyQuasiConcave => "weak natural quasi-concavity",
            Definition::WeaklyStarConcave => "weak *-concavity",
            Definition::WnqsProperty => "WNQS property",
        })
    }
}

/// Cone `C ⊂ R` for the natural quasi-concavity test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cone {
    Zero,
    Nonneg,
}

/// One weight vector at which a choice of values fails.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Refutation {
    pub values: Vec<f64>,
    pub weights: Vec<f64>,
    /// `g(λ)`; equal to `weights` when no reparameterization is involved.
    pub applied: Vec<f64>,
    pub point: Vec<f64>,
    pub combination: f64,
    pub value_at_point: IntervalUnion,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// `T(x) ⊂ V` with `V` open, yet `T(x') ⊄ V`.
    OpenCover {
        value: IntervalUnion,
        open_set: IntervalUnion,
        neighbor: Vec<f64>,
        neighbor_value: IntervalUnion,
    },
    /// `T(x) ∩ V ≠ ∅` with `V` open, yet `T(x') ∩ V = ∅`.
    OpenMeet {
        value: IntervalUnion,
        open_set: IntervalUnion,
        neighbor: Vec<f64>,
        neighbor_value: IntervalUnion,
    },
    /// `x ∈ T⁻¹(y)` but the neighbour `x'` is not.
    LowerSection {
        y: f64,
        neighbor: Vec<f64>,
        neighbor_value: IntervalUnion,
    },
    /// Every candidate tuple fails at the listed weights.
    NoCompatibleValues {
        base_points: Vec<Vec<f64>>,
        refutations: Vec<Refutation>,
    },
    /// A specific choice of values fails.
    Combination {
        base_points: Vec<Vec<f64>>,
        refutation: Refutation,
    },
    ConeCondition {
        x1: Vec<f64>,
        x2: Vec<f64>,
        lambda: f64,
        f1: f64,
        f2: f64,
        f_mid: f64,
        cone: Cone,
    },
    /// `T(x) ⊄ allowed`, where `allowed` is `A(x)` or `A(x) + (-ε, ε)`.
    Containment {
        value: IntervalUnion,
        allowed: IntervalUnion,
    },
    /// `x_i ∈ T(x)`.
    Diagonal { coordinate: usize, value: IntervalUnion },
    /// No witness at the simplex vertices.
    NoWitness {
        base_points: Vec<Vec<f64>>,
        grid: GridSpec,
    },
    /// The supplied witness was refuted.
    WitnessRefuted { inner: Box<Counterexample> },
}

/// A violation of a definition at a concrete location.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub definition: Definition,
    pub location: Vec<f64>,
    pub violation: Violation,
    pub trace: String,
}

impl Counterexample {
    /// Re-evaluates the stored data against `t` and reports whether the
    /// violation is reproduced.
    ///
    /// Containment violations store the allowed set they were checked
    /// against, so replaying them needs only the candidate map.
    pub fn replay(&self, t: &dyn Correspondence) -> Result<bool, PropertyError> {
        let at = |x: &[f64]| t.value_at(x).map_err(PropertyError::from);
        Ok(match &self.violation {
            Violation::OpenCover {
                value,
                open_set,
                neighbor,
                ..
            } => {
                at(&self.location)? == *value
                    && value.is_subset(open_set)
                    && open_set.parts().iter().all(|p| p.lo_open && p.hi_open)
                    && !at(neighbor)?.is_subset(open_set)
            }
            Violation::OpenMeet {
                value,
                open_set,
                neighbor,
                ..
            } => {
                at(&self.location)? == *value
                    && !value.intersect(open_set).is_empty()
                    && open_set.parts().iter().all(|p| p.lo_open && p.hi_open)
                    && at(neighbor)?.intersect(open_set).is_empty()
            }
            Violation::LowerSection { y, neighbor, .. } => {
                at(&self.location)?.contains(*y) && !at(neighbor)?.contains(*y)
            }
            Violation::NoCompatibleValues {
                base_points,
                refutations,
            } => {
                !refutations.is_empty()
                    && refutations
                        .iter()
                        .map(|r| replay_refutation(t, base_points, r, true))
                        .collect::<Result<Vec<_>, _>>()?
                        .into_iter()
                        .all(|b| b)
            }
            Violation::Combination {
                base_points,
                refutation,
            } => replay_refutation(
                t,
                base_points,
                refutation,
                self.definition != Definition::WeaklyStarConcave,
            )?,
            Violation::ConeCondition {
                x1,
                x2,
                lambda,
                cone,
                ..
            } => {
                let f1 = single_value(t, x1)?;
                let f2 = single_value(t, x2)?;
                let mid = combine_points(
                    t.domain(),
                    &[x1.clone(), x2.clone()],
                    &[*lambda, 1.0 - *lambda],
                );
                !cone_holds(single_value(t, &mid)?, f1, f2, *cone)
            }
            Violation::Containment { value, allowed } => {
                at(&self.location)? == *value && !value.is_subset(allowed)
            }
            Violation::Diagonal { coordinate, value } => {
                at(&self.location)? == *value && value.contains(self.location[*coordinate])
            }
            Violation::NoWitness { base_points, grid } => {
                search_wnq_witness(t, base_points, grid)?.is_none()
            }
            Violation::WitnessRefuted { inner } => inner.replay(t)?,
        })
    }
}

fn replay_refutation(
    t: &dyn Correspondence,
    base_points: &[Vec<f64>],
    r: &Refutation,
    combined_point: bool,
) -> Result<bool, PropertyError> {
    let values_ok = r
        .values
        .iter()
        .zip(base_points)
        .map(|(&y, x)| t.value_at(x).map(|v| v.contains(y)))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .all(|b| b);
    let sum = convex_value(&r.applied, &r.values);
    let point_ok =
        !combined_point || combine_points(t.domain(), base_points, &r.weights) == r.point;
    Ok(values_ok
        && point_ok
        && sum == r.combination
        && (r.applied.iter().sum::<f64>() - 1.0).abs() <= TOL_SIMPLEX
        && !t.value_at(&r.point)?.contains(r.combination))
}

/// Outcome of a witness verification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "counterexample", rename_all = "snake_case")]
#[allow(clippy::large_enum_variant)]
pub enum Verdict {
    Pass,
    Refuted(Counterexample),
}

impl Verdict {
    pub fn is_pass(&self) -> bool {
        matches!(self, Verdict::Pass)
    }

    pub fn counterexample(&self) -> Option<&Counterexample> {
        match self {
            Verdict::Pass => None,
            Verdict::Refuted(c) => Some(c),
        }
    }
}

/// Outcome of the weakly-convex-graph falsifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum WcgVerdict {
    /// The listed values satisfy every tested weight.
    Holds { values: Vec<f64> },
    Refuted { counterexample: Counterexample },
}

fn prepare(t: &dyn Correspondence, grid: &GridSpec) -> Result<Vec<Vec<f64>>, PropertyError> {
    grid.validate().map_err(PropertyError::InvalidGrid)?;
    let axes = domain_axes(t, grid.resolution);
    let size = product_size(&axes);
    if size > MAX_POINTS {
        return Err(PropertyError::TooManyPoints(size));
    }
    Ok(axes)
}

/// Runs `check` on every grid point in lexicographic order and returns the
/// first counterexample.
fn scan(
    axes: &[Vec<f64>],
    mut check: impl FnMut(&[f64]) -> Result<Option<Counterexample>, PropertyError>,
) -> Result<Option<Counterexample>, PropertyError> {
    let mut out = Ok(None);
    for_each_point(axes, |x| match check(x) {
        Ok(None) => true,
        other => {
            out = other;
            false
        }
    });
    out
}

/// Probe directions `{-1, 0, 1}^m \ {0}` in lexicographic order; offsets
/// along them have sup-norm equal to the probe radius.
pub fn directions(m: usize) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    lex_product(&vec![3; m], |idx| {
        if idx.iter().any(|&i| i != 1) {
            out.push(idx.iter().map(|&i| i as f64 - 1.0).collect());
        }
        true
    });
    out
}

/// Looks for a neighbour of `x` along `dir` where `violated` holds at every
/// radius `δ, δ/2, ..., δ/2^8`. Returns the neighbour at radius `δ`.
///
/// Requiring persistence keeps grid points next to a jump from being blamed
/// for it: only a point where the map actually changes within every
/// neighbourhood is reported.
fn persistent_probe(
    t: &dyn Correspondence,
    x: &[f64],
    delta: f64,
    dir: &[f64],
    violated: impl Fn(&IntervalUnion) -> bool,
) -> Result<Option<(Vec<f64>, IntervalUnion)>, PropertyError> {
    let mut first = None;
    for k in 0..PROBE_LEVELS {
        let h = delta / 2f64.powi(k);
        let xp: Vec<f64> = x.iter().zip(dir).map(|(c, d)| c + h * d).collect();
        if !t.domain().contains(&xp) {
            return Ok(None);
        }
        let v = t.value_at(&xp)?;
        if !violated(&v) {
            return Ok(None);
        }
        if first.is_none() {
            first = Some((xp, v));
        }
    }
    Ok(first)
}

/// Searches for a point where `T` fails to be upper semicontinuous.
///
/// At each grid point the open set is `V = cl T(x) + (-δ/2, δ/2)`; a
/// violation is a neighbour `x'` with `T(x') ⊄ V` at every probe radius.
pub fn falsify_usc(
    t: &dyn Correspondence,
    grid: &GridSpec,
) -> Result<Option<Counterexample>, PropertyError> {
    let axes = prepare(t, grid)?;
    let delta = grid.delta_for(t.domain());
    let dirs = directions(t.dim());
    scan(&axes, |x| {
        let value = t.value_at(x)?;
        let open_set = value.closure().inflate_open(delta / 2.0);
        for d in &dirs {
            if let Some((neighbor, neighbor_value)) =
                persistent_probe(t, x, delta, d, |v| !v.is_subset(&open_set))?
            {
                return Ok(Some(Counterexample {
                    definition: Definition::UpperSemicontinuous,
                    location: x.to_vec(),
                    trace: format!(
                        "T({x:?}) = {value} lies in the open set V = {open_set}, \
                         but T({neighbor:?}) = {neighbor_value} does not, at every probe radius down to {:e}",
                        delta / 2f64.powi(PROBE_LEVELS - 1)
                    ),
                    violation: Violation::OpenCover {
                        value,
                        open_set,
                        neighbor,
                        neighbor_value,
                    },
                }));
            }
        }
        Ok(None)
    })
}

/// Open probe inside a value component: the component shrunk by `δ/2` at
/// both ends, or a `δ/2`-wide interval at its midpoint when it is narrower
/// than `δ`.
fn lsc_probe(c: &Interval, delta: f64) -> Interval {
    if c.width() > delta {
        Interval::open(c.lo + delta / 2.0, c.hi - delta / 2.0)
    } else {
        let m = c.midpoint();
        Interval::open(m - delta / 4.0, m + delta / 4.0)
    }
}

/// Searches for a point where `T` fails to be lower semicontinuous, probing
/// with open sets that meet `T(x)` inside one of its components.
pub fn falsify_lsc(
    t: &dyn Correspondence,
    grid: &GridSpec,
) -> Result<Option<Counterexample>, PropertyError> {
    let axes = prepare(t, grid)?;
    let delta = grid.delta_for(t.domain());
    let dirs = directions(t.dim());
    scan(&axes, |x| {
        let value = t.value_at(x)?;
        for c in value.parts() {
            if !(c.lo.is_finite() && c.hi.is_finite()) {
                continue;
            }
            let open_set = IntervalUnion::from_interval(lsc_probe(c, delta));
            for d in &dirs {
                if let Some((neighbor, neighbor_value)) =
                    persistent_probe(t, x, delta, d, |v| v.intersect(&open_set).is_empty())?
                {
                    return Ok(Some(Counterexample {
                        definition: Definition::LowerSemicontinuous,
                        location: x.to_vec(),
                        trace: format!(
                            "T({x:?}) = {value} meets the open set V = {open_set}, \
                             but T({neighbor:?}) = {neighbor_value} misses it at every probe radius"
                        ),
                        violation: Violation::OpenMeet {
                            value,
                            open_set,
                            neighbor,
                            neighbor_value,
                        },
                    }));
                }
            }
        }
        Ok(None)
    })
}

fn lower_section_at(
    t: &dyn Correspondence,
    x: &[f64],
    y: f64,
    delta: f64,
    dirs: &[Vec<f64>],
) -> Result<Option<Counterexample>, PropertyError> {
    for d in dirs {
        if let Some((neighbor, neighbor_value)) =
            persistent_probe(t, x, delta, d, |v| !v.contains(y))?
        {
            return Ok(Some(Counterexample {
                definition: Definition::OpenLowerSections,
                location: x.to_vec(),
                trace: format!(
                    "{y} ∈ T({x:?}) but {y} ∉ T({neighbor:?}) = {neighbor_value} at every probe radius, \
                     so the lower section of {y} is not a neighbourhood of {x:?}"
                ),
                violation: Violation::LowerSection {
                    y,
                    neighbor,
                    neighbor_value,
                },
            }));
        }
    }
    Ok(None)
}

/// Searches for a value `y` whose lower section `{x : y ∈ T(x)}` is not open,
/// trying the candidate members of each `T(x)`.
pub fn falsify_open_lower_sections(
    t: &dyn Correspondence,
    grid: &GridSpec,
) -> Result<Option<Counterexample>, PropertyError> {
    let axes = prepare(t, grid)?;
    let delta = grid.delta_for(t.domain());
    let dirs = directions(t.dim());
    scan(&axes, |x| {
        for y in t.value_at(x)?.sample_members(grid.value_resolution) {
            if let Some(c) = lower_section_at(t, x, y, delta, &dirs)? {
                return Ok(Some(c));
            }
        }
        Ok(None)
    })
}

/// Checks the lower section of one value `y`.
pub fn falsify_lower_section_at(
    t: &dyn Correspondence,
    y: f64,
    grid: &GridSpec,
) -> Result<Option<Counterexample>, PropertyError> {
    let axes = prepare(t, grid)?;
    let delta = grid.delta_for(t.domain());
    let dirs = directions(t.dim());
    scan(&axes, |x| {
        if t.value_at(x)?.contains(y) {
            lower_section_at(t, x, y, delta, &dirs)
        } else {
            Ok(None)
        }
    })
}

/// Candidate values at each base point, endpoints first.
fn candidates(
    t: &dyn Correspondence,
    xs: &[Vec<f64>],
    grid: &GridSpec,
) -> Result<Vec<Vec<f64>>, PropertyError> {
    grid.validate().map_err(PropertyError::InvalidGrid)?;
    if xs.is_empty() {
        return Err(PropertyError::ArityMismatch {
            expected: 1,
            found: 0,
        });
    }
    let mut out = Vec::with_capacity(xs.len());
    for (index, x) in xs.iter().enumerate() {
        let v = t.value_at(x)?;
        if v.is_empty() {
            return Err(PropertyError::EmptyValueAt {
                index,
                point: x.clone(),
            });
        }
        out.push(v.sample_members(grid.value_resolution));
    }
    let total: u128 = out.iter().map(|c| c.len() as u128).product();
    if total > MAX_TUPLES {
        return Err(PropertyError::TooManyCandidates(total));
    }
    Ok(out)
}

/// Weights with the combined points and the values of `T` there, computed
/// once per weight set and shared by every candidate tuple.
struct WeightTable {
    weights: Vec<Vec<f64>>,
    points: Vec<Vec<f64>>,
    values: Vec<IntervalUnion>,
}

impl WeightTable {
    fn new(
        t: &dyn Correspondence,
        xs: &[Vec<f64>],
        weights: Vec<Vec<f64>>,
    ) -> Result<Self, PropertyError> {
        let points: Vec<Vec<f64>> = weights
            .iter()
            .map(|l| combine_points(t.domain(), xs, l))
            .collect();
        let values = points
            .iter()
            .map(|p| t.value_at(p))
            .collect::<Result<_, _>>()?;
        Ok(WeightTable {
            weights,
            points,
            values,
        })
    }

    /// First weight vector at which `Σ g_i(λ_i) y_i ∉ T(Σ λ_i x_i)`.
    fn first_failure(
        &self,
        ys: &[f64],
        g: Option<&Reparameterization>,
    ) -> Option<Refutation> {
        for (k, l) in self.weights.iter().enumerate() {
            let applied = match g {
                Some(g) => g.apply(l),
                None => l.clone(),
            };
            let y = convex_value(&applied, ys);
            if !self.values[k].contains(y) {
                return Some(Refutation {
                    values: ys.to_vec(),
                    weights: l.clone(),
                    applied,
                    point: self.points[k].clone(),
                    combination: y,
                    value_at_point: self.values[k].clone(),
                });
            }
        }
        None
    }
}

fn check_point_dims(t: &dyn Correspondence, xs: &[Vec<f64>]) -> Result<(), PropertyError> {
    for x in xs {
        if x.len() != t.dim() {
            return Err(SetValueError::DimensionMismatch {
                expected: t.dim(),
                found: x.len(),
            }
            .into());
        }
    }
    Ok(())
}

/// Looks for values `y_i ∈ T(x_i)` with `Σ λ_i y_i ∈ T(Σ λ_i x_i)` for all
/// tested weights. When no candidate tuple works, the counterexample lists
/// one failing weight per tuple.
pub fn falsify_wcg(
    t: &dyn Correspondence,
    xs: &[Vec<f64>],
    grid: &GridSpec,
) -> Result<WcgVerdict, PropertyError> {
    check_point_dims(t, xs)?;
    let cands = candidates(t, xs, grid)?;
    let table = WeightTable::new(t, xs, weight_set(t, xs, grid.resolution, &[]))?;
    let lens: Vec<usize> = cands.iter().map(Vec::len).collect();
    let mut refutations = Vec::new();
    let mut holds = None;
    let mut ys = vec![0.0; xs.len()];
    lex_product(&lens, |idx| {
        for (i, &j) in idx.iter().enumerate() {
            ys[i] = cands[i][j];
        }
        match table.first_failure(&ys, None) {
            None => {
                holds = Some(ys.clone());
                false
            }
            Some(r) => {
                refutations.push(r);
                true
            }
        }
    });
    if let Some(values) = holds {
        return Ok(WcgVerdict::Holds { values });
    }
    let first = &refutations[0];
    Ok(WcgVerdict::Refuted {
        counterexample: Counterexample {
            definition: Definition::WeaklyConvexGraph,
            location: first.point.clone(),
            trace: format!(
                "none of the {} candidate value tuples at {:?} keeps every convex combination in the graph; \
                 e.g. y = {:?} gives {} ∉ T({:?}) = {} at weights {:?}",
                refutations.len(),
                xs,
                first.values,
                first.combination,
                first.point,
                first.value_at_point,
                first.weights
            ),
            violation: Violation::NoCompatibleValues {
                base_points: xs.to_vec(),
                refutations,
            },
        },
    })
}

fn single_value(f: &dyn Correspondence, x: &[f64]) -> Result<f64, PropertyError> {
    let v = f.value_at(x)?;
    v.as_singleton().ok_or_else(|| PropertyError::NotSingleValued {
        point: x.to_vec(),
        value: v.to_string(),
    })
}

/// `f_mid ∈ co{f1, f2} + C` up to [`TOL_CONE`].
fn cone_holds(f_mid: f64, f1: f64, f2: f64, cone: Cone) -> bool {
    let lo = f1.min(f2) - TOL_CONE;
    let hi = f1.max(f2) + TOL_CONE;
    match cone {
        Cone::Zero => (lo..=hi).contains(&f_mid),
        Cone::Nonneg => f_mid >= lo,
    }
}

/// Tests `f(λ x_1 + (1-λ) x_2) ∈ co{f(x_1), f(x_2)} + C` over pairs of a
/// coarse domain grid (41 points per axis plus breakpoints) and weights
/// `k/100` plus segment crossings.
pub fn falsify_natural_quasi_concave(
    f: &dyn Correspondence,
    cone: Cone,
    grid: &GridSpec,
) -> Result<Option<Counterexample>, PropertyError> {
    grid.validate().map_err(PropertyError::InvalidGrid)?;
    let axes = domain_axes(f, grid.resolution.min(NQC_AXIS_POINTS));
    let mut pts = Vec::new();
    for_each_point(&axes, |x| {
        pts.push(x.to_vec());
        true
    });
    let vals = pts
        .iter()
        .map(|p| single_value(f, p))
        .collect::<Result<Vec<_>, _>>()?;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let pair = [pts[i].clone(), pts[j].clone()];
            for l in weight_set(f, &pair, NQC_WEIGHT_STEPS, &[]) {
                let mid = combine_points(f.domain(), &pair, &l);
                let f_mid = single_value(f, &mid)?;
                if !cone_holds(f_mid, vals[i], vals[j], cone) {
                    return Ok(Some(Counterexample {
                        definition: Definition::NaturalQuasiConcave,
                        location: mid.clone(),
                        trace: format!(
                            "f({mid:?}) = {f_mid} is outside co{{{}, {}}} + C for x1 = {:?}, x2 = {:?}, λ = {}",
                            vals[i], vals[j], pts[i], pts[j], l[0]
                        ),
                        violation: Violation::ConeCondition {
                            x1: pts[i].clone(),
                            x2: pts[j].clone(),
                            lambda: l[0],
                            f1: vals[i],
                            f2: vals[j],
                            f_mid,
                            cone,
                        },
                    }));
                }
            }
        }
    }
    Ok(None)
}

fn check_members(
    t: &dyn Correspondence,
    xs: &[Vec<f64>],
    ys: &[f64],
) -> Result<(), PropertyError> {
    for (i, (x, &y)) in xs.iter().zip(ys).enumerate() {
        if !t.value_at(x)?.contains(y) {
            return Err(PropertyError::WitnessValueNotInT(i));
        }
    }
    Ok(())
}

/// Interior knots of `g`, translated to first-coordinate weights.
fn g_breakpoints(g: &Reparameterization) -> Vec<f64> {
    let c = g.components();
    if c.len() != 2 {
        return Vec::new();
    }
    c[0].breakpoints()
        .chain(c[1].breakpoints().map(|b| 1.0 - b))
        .collect()
}

fn check_simplex_valued(
    g: &Reparameterization,
    weights: &[Vec<f64>],
) -> Result<(), PropertyError> {
    for l in weights {
        let sum: f64 = g.apply(l).iter().sum();
        if !((sum - 1.0).abs() <= TOL_SIMPLEX) {
            return Err(PropertyError::ReparamNotSimplexValued {
                lambda: l.clone(),
                sum,
            });
        }
    }
    Ok(())
}

/// Checks `Σ g_i(λ_i) y_i ∈ T(Σ λ_i x_i)` on the weight grid (uniform
/// weights, segment crossings and the knots of `g`).
pub fn verify_wnq_witness(
    t: &dyn Correspondence,
    witness: &WnqWitness,
    grid: &GridSpec,
) -> Result<Verdict, PropertyError> {
    grid.validate().map_err(PropertyError::InvalidGrid)?;
    let xs = witness.points();
    check_point_dims(t, xs)?;
    check_members(t, xs, witness.values())?;
    let weights = weight_set(t, xs, grid.resolution, &g_breakpoints(witness.g()));
    check_simplex_valued(witness.g(), &weights)?;
    let table = WeightTable::new(t, xs, weights)?;
    Ok(match table.first_failure(witness.values(), Some(witness.g())) {
        None => Verdict::Pass,
        Some(r) => Verdict::Refuted(Counterexample {
            definition: Definition::WeaklyNaturallyQuasiConcave,
            location: r.point.clone(),
            trace: format!(
                "at weights {:?}, g(λ) = {:?} gives y = {} ∉ T({:?}) = {}",
                r.weights, r.applied, r.combination, r.point, r.value_at_point
            ),
            violation: Violation::Combination {
                base_points: xs.to_vec(),
                refutation: r,
            },
        }),
    })
}

/// Reparameterizations tried by [`search_wnq_witness`], in order: identity,
/// then for two base points one-knot maps with knots at the segment's
/// breakpoint crossings followed by `0.1, ..., 0.9`, each in both
/// orientations. With three or more base points only the identity is
/// compatible with the simplex condition.
pub fn search_families(t: &dyn Correspondence, xs: &[Vec<f64>]) -> Vec<Reparameterization> {
    let mut out = vec![Reparameterization::identity(xs.len())];
    if xs.len() != 2 {
        return out;
    }
    let mut knots: Vec<f64> = segment_crossings(t, &xs[0], &xs[1])
        .into_iter()
        .filter(|&k| k > 0.0 && k < 1.0)
        .collect();
    knots.sort_by(f64::total_cmp);
    for k in 1..10 {
        knots.push(k as f64 / 10.0);
    }
    let mut seen = Vec::new();
    for k in knots {
        if seen.contains(&k) {
            continue;
        }
        seen.push(k);
        for o in [Orientation::First, Orientation::Second] {
            if let Ok(g) = Reparameterization::one_knot(k, o) {
                out.push(g);
            }
        }
    }
    out
}

/// Enumerates candidate values and [`search_families`] and returns the first
/// combination that passes [`verify_wnq_witness`].
pub fn search_wnq_witness(
    t: &dyn Correspondence,
    xs: &[Vec<f64>],
    grid: &GridSpec,
) -> Result<Option<WnqWitness>, PropertyError> {
    check_point_dims(t, xs)?;
    let cands = candidates(t, xs, grid)?;
    let lens: Vec<usize> = cands.iter().map(Vec::len).collect();
    for g in search_families(t, xs) {
        let weights = weight_set(t, xs, grid.resolution, &g_breakpoints(&g));
        check_simplex_valued(&g, &weights)?;
        let table = WeightTable::new(t, xs, weights)?;
        let mut found = None;
        let mut ys = vec![0.0; xs.len()];
        lex_product(&lens, |idx| {
            for (i, &j) in idx.iter().enumerate() {
                ys[i] = cands[i][j];
            }
            if table.first_failure(&ys, Some(&g)).is_none() {
                found = Some(ys.clone());
                false
            } else {
                true
            }
        });
        if let Some(values) = found {
            return Ok(Some(WnqWitness::new(xs.to_vec(), values, g)?));
        }
    }
    Ok(None)
}

/// Checks `Σ λ_i y_i ∈ T(x)` for every tested weight and every domain grid
/// point `x`.
pub fn verify_star_witness(
    t: &dyn Correspondence,
    xs: &[Vec<f64>],
    ys: &[f64],
    grid: &GridSpec,
) -> Result<Verdict, PropertyError> {
    let axes = prepare(t, grid)?;
    check_point_dims(t, xs)?;
    if xs.len() != ys.len() || xs.is_empty() {
        return Err(PropertyError::ArityMismatch {
            expected: xs.len(),
            found: ys.len(),
        });
    }
    check_members(t, xs, ys)?;
    let weights = weight_set(t, xs, grid.resolution, &[]);
    let combos: Vec<f64> = weights
        .iter()
        .map(|l| convex_value(l, ys))
        .collect();
    let found = scan(&axes, |x| {
        let v = t.value_at(x)?;
        for (l, &c) in weights.iter().zip(&combos) {
            if !v.contains(c) {
                return Ok(Some(Counterexample {
                    definition: Definition::WeaklyStarConcave,
                    location: x.to_vec(),
                    trace: format!("Σ λ_i y_i = {c} at λ = {l:?} is not in T({x:?}) = {v}"),
                    violation: Violation::Combination {
                        base_points: xs.to_vec(),
                        refutation: Refutation {
                            values: ys.to_vec(),
                            weights: l.clone(),
                            applied: l.clone(),
                            point: x.to_vec(),
                            combination: c,
                            value_at_point: v.clone(),
                        },
                    },
                }));
            }
        }
        Ok(None)
    })?;
    Ok(found.map_or(Verdict::Pass, Verdict::Refuted))
}

/// Result of [`verify_wnqs_property`]: the verdict and the witness used for
/// clause (a), when one was available.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WnqsOutcome {
    pub verdict: Verdict,
    pub witness: Option<WnqWitness>,
}

/// Checks that `candidate` witnesses the WNQS property of `A` on `K` for
/// the strategy coordinate `agent`:
///
/// (a) `candidate` has a verified WNQ witness at the vertices of `K`
/// (the supplied one, or else one found by [`search_wnq_witness`]);
/// (b) `candidate(x) ⊂ A(x)` when `eps = 0`, or `⊂ A(x) + (-eps, eps)`;
/// (c) `x_agent ∉ candidate(x)`;
///
/// with (b) and (c) checked at every domain grid point inside `K`.
pub fn verify_wnqs_property(
    a: &dyn Correspondence,
    k: &Simplex,
    candidate: &dyn Correspondence,
    eps: f64,
    agent: usize,
    grid: &GridSpec,
    witness: Option<&WnqWitness>,
) -> Result<WnqsOutcome, PropertyError> {
    if !(eps >= 0.0 && eps.is_finite()) {
        return Err(PropertyError::InvalidEpsilon(eps));
    }
    if a.domain() != candidate.domain() {
        return Err(PropertyError::DomainMismatch(format!(
            "A is defined on {}, the candidate on {}",
            a.domain(),
            candidate.domain()
        )));
    }
    if k.ambient_dim() != candidate.dim() || !k.vertices().iter().all(|v| candidate.domain().contains(v)) {
        return Err(PropertyError::DomainMismatch(format!(
            "simplex {k} is not inside {}",
            candidate.domain()
        )));
    }
    if agent >= candidate.dim() {
        return Err(PropertyError::AgentOutOfRange {
            agent,
            dim: candidate.dim(),
        });
    }
    let axes = prepare(candidate, grid)?;
    let vertices = k.vertices().to_vec();

    let witness = match witness {
        Some(w) => {
            if w.points() != vertices.as_slice() {
                return Err(PropertyError::DomainMismatch(
                    "witness base points differ from the simplex vertices".into(),
                ));
            }
            if let Verdict::Refuted(inner) = verify_wnq_witness(candidate, w, grid)? {
                return Ok(WnqsOutcome {
                    verdict: Verdict::Refuted(Counterexample {
                        definition: Definition::WnqsProperty,
                        location: inner.location.clone(),
                        trace: format!("clause (a): supplied witness refuted: {}", inner.trace),
                        violation: Violation::WitnessRefuted {
                            inner: Box::new(inner),
                        },
                    }),
                    witness: Some(w.clone()),
                });
            }
            w.clone()
        }
        None => match search_wnq_witness(candidate, &vertices, grid)? {
            Some(w) => w,
            None => {
                return Ok(WnqsOutcome {
                    verdict: Verdict::Refuted(Counterexample {
                        definition: Definition::WnqsProperty,
                        location: vertices[0].clone(),
                        trace: "clause (a): no WNQ witness found at the simplex vertices".into(),
                        violation: Violation::NoWitness {
                            base_points: vertices,
                            grid: *grid,
                        },
                    }),
                    witness: None,
                })
            }
        },
    };

    let found = scan(&axes, |x| {
        if !k.contains(x) {
            return Ok(None);
        }
        let value = candidate.value_at(x)?;
        let a_x = a.value_at(x)?;
        let allowed = if eps == 0.0 { a_x } else { a_x.inflate_open(eps) };
        if !value.is_subset(&allowed) {
            return Ok(Some(Counterexample {
                definition: Definition::WnqsProperty,
                location: x.to_vec(),
                trace: format!("clause (b): candidate value {value} at {x:?} is not inside {allowed}"),
                violation: Violation::Containment { value, allowed },
            }));
        }
        if value.contains(x[agent]) {
            return Ok(Some(Counterexample {
                definition: Definition::WnqsProperty,
                location: x.to_vec(),
                trace: format!(
                    "clause (c): coordinate {agent} of {x:?} lies in the candidate value {value}"
                ),
                violation: Violation::Diagonal {
                    coordinate: agent,
                    value,
                },
            }));
        }
        Ok(None)
    })?;
    Ok(WnqsOutcome {
        verdict: found.map_or(Verdict::Pass, Verdict::Refuted),
        witness: Some(witness),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::setvalue::{FnCorrespondence, PiecewiseCorrespondence, Rect};

    fn unit() -> Rect {
        Rect::closed(&[(0.0, 1.0)])
    }

    fn small() -> GridSpec {
        GridSpec::with_resolution(201)
    }

    #[test]
    fn ex1_is_not_usc_at_two() {
        let t = fixtures::ex1();
        let c = falsify_usc(&t, &GridSpec::default()).unwrap().unwrap();
        assert_eq!(c.location, vec![2.0]);
        assert!(c.replay(&t).unwrap());
    }

    #[test]
    fn ex1_is_not_lsc_at_two() {
        let t = fixtures::ex1();
        let c = falsify_lsc(&t, &GridSpec::default()).unwrap().unwrap();
        assert_eq!(c.location, vec![2.0]);
        assert!(c.replay(&t).unwrap());
    }

    #[test]
    fn continuous_maps_pass() {
        let grows = FnCorrespondence::new(unit(), |x: &[f64]| IntervalUnion::closed(0.0, x[0]));
        assert!(falsify_usc(&grows, &small()).unwrap().is_none());
        let diag = FnCorrespondence::new(unit(), |x: &[f64]| IntervalUnion::point(x[0]));
        assert!(falsify_lsc(&diag, &small()).unwrap().is_none());
        assert!(falsify_usc(&diag, &small()).unwrap().is_none());
        let c = fixtures::constant(0.0, 1.0, 0.2, 0.7);
        assert!(falsify_usc(&c, &small()).unwrap().is_none());
        assert!(falsify_lsc(&c, &small()).unwrap().is_none());
        assert!(falsify_open_lower_sections(&c, &small()).unwrap().is_none());
    }

    #[test]
    fn open_strip_has_open_lower_sections() {
        let strip = FnCorrespondence::new(unit(), |x: &[f64]| {
            Interval::open(x[0], x[0] + 1.0).into()
        });
        let c = falsify_open_lower_sections(&strip, &small()).unwrap();
        assert!(c.is_none(), "{c:?}");
    }

    #[test]
    fn ex1_lower_section_of_minus_one_is_a_point() {
        let t = fixtures::ex1();
        let c = falsify_lower_section_at(&t, -1.0, &small()).unwrap().unwrap();
        assert_eq!(c.location, vec![2.0]);
        assert!(c.replay(&t).unwrap());
        assert!(falsify_open_lower_sections(&t, &small()).unwrap().is_some());
    }

    #[test]
    fn wcg_refuted_at_one_and_three() {
        let t = fixtures::ex1();
        let v = falsify_wcg(&t, &[vec![1.0], vec![3.0]], &GridSpec::default()).unwrap();
        let WcgVerdict::Refuted { counterexample } = v else {
            panic!("expected refutation")
        };
        let Violation::NoCompatibleValues { refutations, .. } = &counterexample.violation else {
            panic!()
        };
        assert!(refutations.iter().all(|r| r.point == vec![2.0]));
        assert!(counterexample.replay(&t).unwrap());
    }

    #[test]
    fn wcg_holds_for_convex_graphs() {
        let c = fixtures::constant(0.0, 1.0, 0.0, 1.0);
        assert!(matches!(
            falsify_wcg(&c, &[vec![0.0], vec![1.0]], &small()).unwrap(),
            WcgVerdict::Holds { .. }
        ));
        let band = FnCorrespondence::new(unit(), |x: &[f64]| IntervalUnion::closed(x[0], x[0] + 1.0));
        let WcgVerdict::Holds { values } =
            falsify_wcg(&band, &[vec![0.0], vec![1.0]], &small()).unwrap()
        else {
            panic!()
        };
        assert_eq!(values, vec![0.0, 1.0]);
    }

    #[test]
    fn empty_value_is_an_error() {
        let t = PiecewiseCorrespondence::on_line(
            Interval::closed(0.0, 1.0),
            Interval::closed(0.0, 1.0),
            vec![(Interval::closed(0.0, 1.0), IntervalUnion::empty())],
        )
        .unwrap();
        assert!(matches!(
            falsify_wcg(&t, &[vec![0.0], vec![1.0]], &small()),
            Err(PropertyError::EmptyValueAt { index: 0, .. })
        ));
    }

    #[test]
    fn cone_test() {
        let id = FnCorrespondence::new(unit(), |x: &[f64]| IntervalUnion::point(x[0]));
        assert!(falsify_natural_quasi_concave(&id, Cone::Zero, &small())
            .unwrap()
            .is_none());
        let dip = FnCorrespondence::new(unit(), |x: &[f64]| {
            IntervalUnion::point(-(1.0 - (2.0 * x[0] - 1.0).abs()))
        });
        let c = falsify_natural_quasi_concave(&dip, Cone::Nonneg, &small())
            .unwrap()
            .unwrap();
        assert!(c.replay(&dip).unwrap());
        let Violation::ConeCondition { x1, f1, f2, f_mid, .. } = &c.violation else {
            panic!()
        };
        assert_eq!(x1[0], 0.0);
        assert!(*f_mid < f1.min(*f2));
        let set = fixtures::constant(0.0, 1.0, 0.0, 1.0);
        assert!(matches!(
            falsify_natural_quasi_concave(&set, Cone::Zero, &small()),
            Err(PropertyError::NotSingleValued { .. })
        ));
    }

    #[test]
    fn reference_witness_passes_and_identity_fails() {
        let t = fixtures::ex1();
        let g = Reparameterization::one_knot(0.5, Orientation::First).unwrap();
        let w = WnqWitness::new(vec![vec![1.0], vec![3.0]], vec![0.0, 2.0], g).unwrap();
        assert!(verify_wnq_witness(&t, &w, &GridSpec::default()).unwrap().is_pass());

        let id = WnqWitness::with_identity(vec![vec![1.0], vec![3.0]], vec![0.0, 2.0]).unwrap();
        let v = verify_wnq_witness(&t, &id, &GridSpec::default()).unwrap();
        let c = v.counterexample().unwrap();
        assert_eq!(c.location, vec![2.0]);
        let Violation::Combination { refutation, .. } = &c.violation else {
            panic!()
        };
        assert!((refutation.weights[0] - 0.5).abs() < 1e-15);
        assert_eq!(refutation.combination, 1.0);
        assert!(c.replay(&t).unwrap());
    }

    #[test]
    fn witness_errors() {
        let t = fixtures::ex1();
        let bad = WnqWitness::with_identity(vec![vec![1.0], vec![3.0]], vec![-1.0, 2.0]).unwrap();
        assert_eq!(
            verify_wnq_witness(&t, &bad, &small()),
            Err(PropertyError::WitnessValueNotInT(0))
        );
        let lopsided = Reparameterization::new(vec![
            crate::witness::PiecewiseLinear::new(vec![(0.0, 0.0), (0.5, 0.9), (1.0, 1.0)]).unwrap(),
            crate::witness::PiecewiseLinear::identity(),
        ]);
        let w = WnqWitness::new(vec![vec![1.0], vec![3.0]], vec![0.0, 2.0], lopsided).unwrap();
        assert!(matches!(
            verify_wnq_witness(&t, &w, &small()),
            Err(PropertyError::ReparamNotSimplexValued { .. })
        ));
    }

    #[test]
    fn search_recovers_the_knot_witness() {
        let t = fixtures::ex1();
        let w = search_wnq_witness(&t, &[vec![1.0], vec![3.0]], &GridSpec::default())
            .unwrap()
            .unwrap();
        assert_eq!(w.values(), &[0.0, 2.0]);
        assert_eq!(w.g(), &Reparameterization::one_knot(0.5, Orientation::First).unwrap());
    }

    #[test]
    fn search_fails_on_separated_values() {
        let t = PiecewiseCorrespondence::on_line(
            Interval::closed(0.0, 2.0),
            Interval::closed(0.0, 1.0),
            vec![
                (Interval::new(0.0, false, 1.0, true), IntervalUnion::point(0.0)),
                (Interval::closed(1.0, 2.0), IntervalUnion::point(1.0)),
            ],
        )
        .unwrap();
        assert!(search_wnq_witness(&t, &[vec![0.0], vec![2.0]], &small())
            .unwrap()
            .is_none());
    }

    #[test]
    fn star_witness() {
        let c = fixtures::constant(0.0, 1.0, 0.0, 1.0);
        assert!(verify_star_witness(&c, &[vec![0.0], vec![1.0]], &[0.5, 0.5], &small())
            .unwrap()
            .is_pass());
        let t = fixtures::ex1();
        let v = verify_star_witness(&t, &[vec![1.0], vec![3.0]], &[0.0, 2.0], &small()).unwrap();
        assert!(v.counterexample().unwrap().replay(&t).unwrap());
    }

    #[test]
    fn wnqs_clauses() {
        let a = fixtures::constant(0.0, 1.0, 0.0, 0.6);
        let k = Simplex::new(vec![vec![0.0], vec![0.4]]).unwrap();
        let cand = fixtures::constant(0.0, 1.0, 0.45, 0.5);
        let out = verify_wnqs_property(&a, &k, &cand, 0.0, 0, &small(), None).unwrap();
        assert!(out.verdict.is_pass());
        assert_eq!(out.witness.unwrap().values(), &[0.45, 0.45]);

        let wide = Simplex::new(vec![vec![0.0], vec![0.5]]).unwrap();
        let out = verify_wnqs_property(&a, &wide, &cand, 0.0, 0, &small(), None).unwrap();
        let c = out.verdict.counterexample().unwrap();
        assert!(matches!(c.violation, Violation::Diagonal { .. }));
        assert_eq!(c.location, vec![0.45]);
        assert!(c.replay(&cand).unwrap());

        let narrow_a = fixtures::constant(0.0, 1.0, 0.0, 0.3);
        let out = verify_wnqs_property(&narrow_a, &k, &cand, 0.1, 0, &small(), None).unwrap();
        assert!(matches!(
            out.verdict.counterexample().unwrap().violation,
            Violation::Containment { .. }
        ));
        let out = verify_wnqs_property(&narrow_a, &k, &cand, 0.21, 0, &small(), None).unwrap();
        assert!(out.verdict.is_pass());
    }
}
