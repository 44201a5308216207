//! Fixed points. Continuous self-maps of a simplex (including `s ∘ f` for
//! selections `f`) use a Sperner-labelled simplicial search; convex-valued
//! self-maps of a box use residual minimization.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::{axis_points, for_each_point, lex_product, GridSpec};
use crate::selection::{build_selection, build_selection_star, Selection, SelectionError};
use crate::setvalue::{Correspondence, IntervalUnion, Rect, SetValueError};
use crate::simplex::{distance, permutations, Simplex, SimplexError};
use crate::witness::WnqWitness;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FixedPointError {
    #[error("map leaves the simplex: h({point:?}) = {image:?}")]
    NotSelfMap { point: Vec<f64>, image: Vec<f64> },
    #[error("tolerance not reached after depth {max_depth}; best residual {best_residual:e} at {best_point:?}")]
    ToleranceNotReached {
        max_depth: usize,
        best_residual: f64,
        best_point: Vec<f64>,
    },
    #[error("fixed point {point:?} is at distance {distance:e} from s(T(x*))")]
    PostVerificationFailed { point: Vec<f64>, distance: f64 },
    #[error("tolerance must be positive and finite, got {0}")]
    InvalidTolerance(f64),
    #[error("the map has {found} coordinates, the domain has {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("transfer map: {0}")]
    InvalidTransfer(String),
    #[error(transparent)]
    Selection(#[from] SelectionError),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
    #[error(transparent)]
    SetValue(#[from] SetValueError),
}

/// Number of completely labelled cells of the global subdivision at a depth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParityCount {
    pub depth: usize,
    pub cells: usize,
    pub completely_labelled: usize,
}

impl ParityCount {
    pub fn is_odd(&self) -> bool {
        self.completely_labelled % 2 == 1
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iteration: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointResult {
    pub point: Vec<f64>,
    pub residual: f64,
    /// Map evaluations (simplicial search) or scan rounds (box search).
    pub iterations: usize,
    pub depth: usize,
    /// Best residual so far after each refinement step; non-increasing.
    pub trace: Vec<TraceEntry>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub parity: Vec<ParityCount>,
}

impl FixedPointResult {
    /// `(iteration, residual)` rows with a header.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("iteration,residual\n");
        for e in &self.trace {
            out.push_str(&format!("{},{}\n", e.iteration, e.residual));
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BrouwerOptions {
    pub tol: f64,
    pub max_depth: usize,
    /// Cap on refined cells before giving up.
    pub max_expansions: usize,
    /// Cells kept per subdivision level.
    pub beam_width: usize,
    /// Global subdivision depths at which to count completely labelled cells
    /// (limited to at most 5000 cells).
    pub parity_depth: usize,
}

impl Default for BrouwerOptions {
    fn default() -> Self {
        BrouwerOptions {
            tol: 1e-9,
            max_depth: 60,
            max_expansions: 100_000,
            beam_width: 16,
            parity_depth: 4,
        }
    }
}

const PARITY_CELL_LIMIT: usize = 5000;

/// Vertex memo key: barycentric weights rounded to `1e-15`, so that a vertex
/// reached through different cells gets one label.
fn key(l: &[f64]) -> Vec<i64> {
    l.iter().map(|w| (w * 1e15).round() as i64).collect()
}

#[derive(Clone)]
struct VertexData {
    label: usize,
    residual: f64,
    displacement: Vec<f64>,
}

struct Labeller<'a> {
    k: &'a Simplex,
    h: &'a dyn Fn(&[f64]) -> Vec<f64>,
    memo: HashMap<Vec<i64>, VertexData>,
    evaluations: usize,
    best: (f64, Vec<f64>),
    trace: Vec<TraceEntry>,
}

impl<'a> Labeller<'a> {
    fn new(k: &'a Simplex, h: &'a dyn Fn(&[f64]) -> Vec<f64>) -> Self {
        Labeller {
            k,
            h,
            memo: HashMap::new(),
            evaluations: 0,
            best: (f64::INFINITY, Vec::new()),
            trace: Vec::new(),
        }
    }

    /// Label is the least `i` with `λ_i(x) > 0` and `λ_i(h(x)) ≤ λ_i(x)`;
    /// such an index exists because both weight vectors sum to one. If
    /// round-off hides it, the support index with the largest drop is used,
    /// which keeps the labelling proper on faces.
    fn visit(&mut self, lambda: &[f64]) -> Result<VertexData, FixedPointError> {
        let kk = key(lambda);
        if let Some(v) = self.memo.get(&kk) {
            return Ok(v.clone());
        }
        let x = self.k.combine(lambda);
        let hx = (self.h)(&x);
        self.evaluations += 1;
        let image = match self.k.barycentric(&hx) {
            Ok(b) if b.is_inside() => b.into_inner(),
            _ => {
                return Err(FixedPointError::NotSelfMap {
                    point: x,
                    image: hx,
                })
            }
        };
        let label = (0..lambda.len())
            .find(|&i| lambda[i] > 0.0 && image[i] <= lambda[i])
            .unwrap_or_else(|| {
                (0..lambda.len())
                    .filter(|&i| lambda[i] > 0.0)
                    .max_by(|&a, &b| {
                        (lambda[a] - image[a]).total_cmp(&(lambda[b] - image[b]))
                    })
                    .unwrap_or(0)
            });
        let residual = distance(&x, &hx);
        let displacement: Vec<f64> = hx.iter().zip(&x).map(|(a, b)| a - b).collect();
        if residual < self.best.0 {
            self.best = (residual, x);
            self.trace.push(TraceEntry {
                iteration: self.evaluations,
                residual,
            });
        }
        let v = VertexData {
            label,
            residual,
            displacement,
        };
        self.memo.insert(kk, v.clone());
        Ok(v)
    }

    fn is_complete(&mut self, cell: &[Vec<f64>]) -> Result<bool, FixedPointError> {
        let mut seen = vec![false; cell.len()];
        for v in cell {
            let l = self.visit(v)?.label;
            if seen[l] {
                return Ok(false);
            }
            seen[l] = true;
        }
        Ok(true)
    }
}

/// One level of barycentric subdivision of a cell given by the barycentric
/// weights of its vertices.
fn subdivide_weights(cell: &[Vec<f64>]) -> Vec<Vec<Vec<f64>>> {
    let n = cell.len();
    let m = cell[0].len();
    permutations(n)
        .into_iter()
        .map(|perm| {
            let mut acc = vec![0.0; m];
            perm.iter()
                .enumerate()
                .map(|(k, &p)| {
                    for (a, c) in acc.iter_mut().zip(&cell[p]) {
                        *a += c;
                    }
                    acc.iter().map(|a| a / (k + 1) as f64).collect()
                })
                .collect()
        })
        .collect()
}

/// Distance from the origin to the convex hull of `points`, by projecting
/// onto the affine hull of every subset and keeping feasible projections.
fn hull_distance(points: &[Vec<f64>]) -> f64 {
    let n = points.len();
    let d = points[0].len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << n) {
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let p0 = DVector::from_column_slice(&points[idx[0]]);
        if idx.len() == 1 {
            best = best.min(p0.norm());
            continue;
        }
        let a = DMatrix::from_fn(d, idx.len() - 1, |r, c| points[idx[c + 1]][r] - p0[r]);
        let g = a.transpose() * &a;
        let Some(t) = g.lu().solve(&(-(a.transpose() * &p0))) else {
            continue;
        };
        if t.iter().any(|&v| v < -1e-12) || t.sum() > 1.0 + 1e-12 {
            continue;
        }
        best = best.min((p0 + a * t).norm());
    }
    best
}

fn cell_barycenter(cell: &[Vec<f64>]) -> Vec<f64> {
    let n = cell.len() as f64;
    let mut out = vec![0.0; cell[0].len()];
    for v in cell {
        for (o, c) in out.iter_mut().zip(v) {
            *o += c;
        }
    }
    out.iter().map(|o| o / n).collect()
}

/// Completely labelled cell counts of the global barycentric subdivision at
/// depths `1..=max_depth` (stopping before more than 5000 cells).
fn parity_counts(lab: &mut Labeller<'_>, max_depth: usize) -> Result<Vec<ParityCount>, FixedPointError> {
    let n = lab.k.vertex_count();
    let root: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();
    let mut cells = vec![root];
    let mut out = Vec::new();
    for depth in 1..=max_depth {
        let next: Vec<Vec<Vec<f64>>> = cells.iter().flat_map(|c| subdivide_weights(c)).collect();
        if next.len() > PARITY_CELL_LIMIT {
            break;
        }
        let mut complete = 0;
        for c in &next {
            if lab.is_complete(c)? {
                complete += 1;
            }
        }
        out.push(ParityCount {
            depth,
            cells: next.len(),
            completely_labelled: complete,
        });
        cells = next;
    }
    Ok(out)
}

fn check_tol(tol: f64) -> Result<(), FixedPointError> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(FixedPointError::InvalidTolerance(tol));
    }
    Ok(())
}

/// Finds `x` with `|h(x) - x| ≤ tol` for a continuous `h: K -> K`.
///
/// The vertices and the barycenter are probed first. Otherwise the search
/// subdivides level by level and keeps the cells whose vertex displacements
/// `h(v) - v` come closest to surrounding zero. Parity counts of the global
/// subdivision are recorded for the first few depths.
pub fn brouwer_fixed_point(
    k: &Simplex,
    h: &dyn Fn(&[f64]) -> Vec<f64>,
    opts: &BrouwerOptions,
) -> Result<FixedPointResult, FixedPointError> {
    check_tol(opts.tol)?;
    let n = k.vertex_count();
    let mut lab = Labeller::new(k, h);
    let root: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();

    let finish = |lab: &Labeller<'_>, depth: usize, parity: Vec<ParityCount>| FixedPointResult {
        point: lab.best.1.clone(),
        residual: lab.best.0,
        iterations: lab.evaluations,
        depth,
        trace: lab.trace.clone(),
        parity,
    };

    for v in &root {
        lab.visit(v)?;
        if lab.best.0 <= opts.tol {
            let parity = parity_counts(&mut lab, opts.parity_depth)?;
            return Ok(finish(&lab, 0, parity));
        }
    }
    lab.visit(&cell_barycenter(&root))?;
    if lab.best.0 <= opts.tol {
        let parity = parity_counts(&mut lab, opts.parity_depth)?;
        return Ok(finish(&lab, 0, parity));
    }
    let parity = parity_counts(&mut lab, opts.parity_depth)?;
    if lab.best.0 <= opts.tol {
        return Ok(finish(&lab, 1, parity));
    }

    // Completely labelled cells need not nest, so children are ranked by how
    // close the hull of their vertex displacements comes to zero, then by the
    // largest vertex residual, then by completeness.
    let mut frontier: Vec<Vec<Vec<f64>>> = vec![root];
    let mut expansions = 0;
    for depth in 1..=opts.max_depth {
        let mut next = Vec::new();
        for cell in &frontier {
            expansions += 1;
            if expansions > opts.max_expansions {
                break;
            }
            for child in subdivide_weights(cell) {
                let incomplete = !lab.is_complete(&child)?;
                let mut score = 0.0f64;
                let mut disp = Vec::with_capacity(child.len());
                for v in &child {
                    let data = lab.visit(v)?;
                    score = score.max(data.residual);
                    disp.push(data.displacement);
                }
                next.push(((hull_distance(&disp), score), incomplete, child));
            }
        }
        if lab.best.0 <= opts.tol {
            return Ok(finish(&lab, depth, parity));
        }
        if next.is_empty() {
            break;
        }
        // Stable sort keeps subdivision order among ties.
        next.sort_by(|a, b| {
            a.0 .0
                .total_cmp(&b.0 .0)
                .then(a.0 .1.total_cmp(&b.0 .1))
                .then(a.1.cmp(&b.1))
        });
        next.truncate(opts.beam_width.max(1));
        frontier = next.into_iter().map(|(_, _, c)| c).collect();
        for cell in &frontier {
            lab.visit(&cell_barycenter(cell))?;
        }
        if lab.best.0 <= opts.tol {
            return Ok(finish(&lab, depth, parity));
        }
    }
    Err(FixedPointError::ToleranceNotReached {
        max_depth: opts.max_depth,
        best_residual: lab.best.0,
        best_point: lab.best.1,
    })
}

/// Continuous map `s: R -> R^d` from values back into the simplex's space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransferMap {
    /// `s(y) = shift + y * scale`, coordinatewise.
    Affine { scale: Vec<f64>, shift: Vec<f64> },
    /// Continuous piecewise-linear `R -> R` through knots `(y, s(y))` with
    /// increasing `y`, constant beyond the end knots.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
}

impl TransferMap {
    pub fn affine_1d(scale: f64, shift: f64) -> Self {
        TransferMap::Affine {
            scale: vec![scale],
            shift: vec![shift],
        }
    }

    pub fn validate(&self) -> Result<(), FixedPointError> {
        match self {
            TransferMap::Affine { scale, shift } => {
                if scale.len() != shift.len() || scale.is_empty() {
                    return Err(FixedPointError::InvalidTransfer(
                        "scale and shift must have the same nonzero length".into(),
                    ));
                }
            }
            TransferMap::PiecewiseLinear { knots } => {
                if knots.is_empty() || knots.windows(2).any(|w| !(w[1].0 > w[0].0)) {
                    return Err(FixedPointError::InvalidTransfer(
                        "knots must be nonempty with increasing abscissae".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn output_dim(&self) -> usize {
        match self {
            TransferMap::Affine { scale, .. } => scale.len(),
            TransferMap::PiecewiseLinear { .. } => 1,
        }
    }

    pub fn apply(&self, y: f64) -> Vec<f64> {
        match self {
            TransferMap::Affine { scale, shift } => {
                scale.iter().zip(shift).map(|(a, b)| b + y * a).collect()
            }
            TransferMap::PiecewiseLinear { knots } => vec![pl_eval(knots, y)],
        }
    }

    /// Distance from `x` to `s(S)` for a closed interval `S = [lo, hi]`.
    fn distance_to_image(&self, x: &[f64], lo: f64, hi: f64) -> f64 {
        match self {
            TransferMap::Affine { scale, shift } => {
                // Minimize |shift + y scale - x| over y in [lo, hi].
                let aa: f64 = scale.iter().map(|a| a * a).sum();
                let y = if aa > 0.0 {
                    let num: f64 = scale
                        .iter()
                        .zip(shift)
                        .zip(x)
                        .map(|((a, b), xc)| a * (xc - b))
                        .sum();
                    (num / aa).clamp(lo, hi)
                } else {
                    lo
                };
                distance(&self.apply(y), x)
            }
            TransferMap::PiecewiseLinear { knots } => {
                let mut cands = vec![lo, hi];
                cands.extend(knots.iter().map(|k| k.0).filter(|y| (lo..=hi).contains(y)));
                for w in knots.windows(2) {
                    let ((y0, s0), (y1, s1)) = (w[0], w[1]);
                    if s1 != s0 {
                        let y = y0 + (x[0] - s0) * (y1 - y0) / (s1 - s0);
                        if (y0..=y1).contains(&y) && (lo..=hi).contains(&y) {
                            cands.push(y);
                        }
                    }
                }
                cands
                    .into_iter()
                    .map(|y| (pl_eval(knots, y) - x[0]).abs())
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }
}

fn pl_eval(knots: &[(f64, f64)], y: f64) -> f64 {
    let i = knots.partition_point(|k| k.0 <= y);
    if i == 0 {
        return knots[0].1;
    }
    if i == knots.len() {
        return knots[i - 1].1;
    }
    let (y0, s0) = knots[i - 1];
    let (y1, s1) = knots[i];
    s0 + (s1 - s0) * (y - y0) / (y1 - y0)
}

/// Witness for [`composed_fixed_point`]: a WNQ witness, or values whose
/// convex combinations lie in every `T(x)`.
#[derive(Clone, Debug, PartialEq)]
pub enum ComposeWitness {
    Wnq(WnqWitness),
    Star(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComposedFixedPoint {
    pub result: FixedPointResult,
    pub selection_value: f64,
    pub t_value: IntervalUnion,
    /// Distance from `x*` to `s(cl T(x*))`.
    pub post_distance: f64,
    pub selection: Selection,
}

/// Finds `x* ∈ s(T(x*))` by building a continuous selection `f` of `T` on
/// `K`, solving `x = s(f(x))` and then checking the set-valued inclusion
/// directly against `T(x*)` within `2 tol`.
///
/// When `s ∘ f` has several fixed points the first one found is returned;
/// uniqueness is not claimed.
pub fn composed_fixed_point(
    k: &Simplex,
    t: &dyn Correspondence,
    witness: &ComposeWitness,
    s: &TransferMap,
    grid: &GridSpec,
    opts: &BrouwerOptions,
) -> Result<ComposedFixedPoint, FixedPointError> {
    s.validate()?;
    if s.output_dim() != k.ambient_dim() {
        return Err(FixedPointError::DimensionMismatch {
            expected: k.ambient_dim(),
            found: s.output_dim(),
        });
    }
    let f = match witness {
        ComposeWitness::Wnq(w) => build_selection(k, t, w, grid)?,
        ComposeWitness::Star(ys) => build_selection_star(k, t, ys, grid)?,
    };
    let h = |x: &[f64]| match f.eval(x) {
        Ok(y) => s.apply(y),
        // Off the simplex by round-off only; the self-map check reports it.
        Err(_) => vec![f64::NAN; x.len()],
    };
    let result = brouwer_fixed_point(k, &h, opts)?;
    let x = &result.point;
    let selection_value = f.eval(x)?;
    let t_value = t.value_at(x)?;
    let post_distance = t_value
        .closure()
        .parts()
        .iter()
        .map(|p| s.distance_to_image(x, p.lo, p.hi))
        .fold(f64::INFINITY, f64::min);
    if !(post_distance <= 2.0 * opts.tol) {
        return Err(FixedPointError::PostVerificationFailed {
            point: x.clone(),
            distance: post_distance,
        });
    }
    Ok(ComposedFixedPoint {
        result,
        selection_value,
        t_value,
        post_distance,
        selection: f,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetValuedOptions {
    pub tol: f64,
    /// Coarse grid points per axis (reduced so the grid has at most two
    /// million points).
    pub resolution: usize,
    pub rounds: usize,
    pub warm_start: Option<Vec<f64>>,
}

impl Default for SetValuedOptions {
    fn default() -> Self {
        SetValuedOptions {
            tol: 1e-6,
            resolution: 1000,
            rounds: 60,
            warm_start: None,
        }
    }
}

const SCAN_BUDGET: f64 = 2e6;
const WINDOW: usize = 9;

/// `max_i dist(x_i, co T_i(x))`, or infinity if some value is empty.
pub fn setvalued_residual(
    coords: &[&dyn Correspondence],
    x: &[f64],
) -> Result<f64, FixedPointError> {
    let mut r = 0.0f64;
    for (i, t) in coords.iter().enumerate() {
        let v = t.value_at(x)?.convex_hull();
        r = r.max(v.distance(x[i]));
    }
    Ok(r)
}

/// Minimizes the coordinatewise residual of the product map
/// `x -> Π_i co T_i(x)` on the common box domain: a coarse lexicographic
/// scan that includes every breakpoint and its floating-point neighbours,
/// then shrinking 9-point windows around the incumbent. Only strict
/// improvements replace the incumbent, so ties keep the earliest point.
pub fn approx_fixed_point_setvalued(
    coords: &[&dyn Correspondence],
    opts: &SetValuedOptions,
) -> Result<FixedPointResult, FixedPointError> {
    check_tol(opts.tol)?;
    let Some(first) = coords.first() else {
        return Err(FixedPointError::DimensionMismatch {
            expected: 1,
            found: 0,
        });
    };
    let domain: Rect = first.domain().clone();
    let m = domain.dim();
    if coords.len() != m {
        return Err(FixedPointError::DimensionMismatch {
            expected: m,
            found: coords.len(),
        });
    }
    for t in coords {
        if t.domain() != &domain {
            return Err(SetValueError::DomainMismatch {
                left: domain.to_string(),
                right: t.domain().to_string(),
            }
            .into());
        }
    }

    let mut best = (f64::INFINITY, Vec::new());
    let mut trace = Vec::new();
    let mut iteration = 0;
    let record = |best: &(f64, Vec<f64>), trace: &mut Vec<TraceEntry>, iteration: usize| {
        trace.push(TraceEntry {
            iteration,
            residual: best.0,
        })
    };
    let done = |best: &(f64, Vec<f64>), trace: Vec<TraceEntry>, iteration: usize| FixedPointResult {
        point: best.1.clone(),
        residual: best.0,
        iterations: iteration,
        depth: iteration,
        trace,
        parity: Vec::new(),
    };

    if let Some(w) = &opts.warm_start {
        if w.len() == m && domain.contains(w) {
            best = (setvalued_residual(coords, w)?, w.clone());
            record(&best, &mut trace, iteration);
            if best.0 <= opts.tol {
                return Ok(done(&best, trace, iteration));
            }
        }
    }

    let per_axis = (opts.resolution.max(2) as f64)
        .min(SCAN_BUDGET.powf(1.0 / m as f64).floor())
        .max(2.0) as usize;
    let axes: Vec<Vec<f64>> = (0..m)
        .map(|a| {
            let mut extra = Vec::new();
            for t in coords {
                for b in t.breakpoints(a) {
                    extra.extend([b.next_down(), b, b.next_up()]);
                }
            }
            axis_points(domain.side(a), per_axis, &extra)
        })
        .collect();
    let mut err = None;
    for_each_point(&axes, |x| match setvalued_residual(coords, x) {
        Ok(r) => {
            if r < best.0 {
                best = (r, x.to_vec());
            }
            best.0 > opts.tol
        }
        Err(e) => {
            err = Some(e);
            false
        }
    });
    if let Some(e) = err {
        return Err(e);
    }
    iteration += 1;
    record(&best, &mut trace, iteration);
    if best.0 <= opts.tol {
        return Ok(done(&best, trace, iteration));
    }

    let mut radius: Vec<f64> = (0..m)
        .map(|a| {
            let w = domain.side(a).width();
            if w > 0.0 {
                w / (per_axis - 1) as f64
            } else {
                0.0
            }
        })
        .collect();
    for _ in 0..opts.rounds {
        let center = best.1.clone();
        let mut err = None;
        lex_product(&vec![WINDOW; m], |idx| {
            let x: Vec<f64> = idx
                .iter()
                .enumerate()
                .map(|(a, &i)| {
                    let off = (i as f64 / (WINDOW - 1) as f64) * 2.0 - 1.0;
                    center[a] + off * radius[a]
                })
                .collect();
            if !domain.contains(&x) {
                return true;
            }
            match setvalued_residual(coords, &x) {
                Ok(r) => {
                    if r < best.0 {
                        best = (r, x);
                    }
                    true
                }
                Err(e) => {
                    err = Some(e);
                    false
                }
            }
        });
        if let Some(e) = err {
            return Err(e);
        }
        iteration += 1;
        record(&best, &mut trace, iteration);
        if best.0 <= opts.tol {
            return Ok(done(&best, trace, iteration));
        }
        for r in radius.iter_mut() {
            *r /= 2.0;
        }
    }
    Err(FixedPointError::ToleranceNotReached {
        max_depth: opts.rounds,
        best_residual: best.0,
        best_point: best.1,
    })
}

/// `[lo, hi]` as a one-dimensional simplex.
pub fn segment(lo: f64, hi: f64) -> Result<Simplex, SimplexError> {
    Simplex::new(vec![vec![lo], vec![hi]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::setvalue::FnCorrespondence;
    use crate::witness::{Orientation, Reparameterization};

    #[test]
    fn identity_is_fixed_at_first_probe() {
        let k = segment(0.0, 1.0).unwrap();
        let r = brouwer_fixed_point(&k, &|x: &[f64]| x.to_vec(), &BrouwerOptions::default()).unwrap();
        assert_eq!(r.residual, 0.0);
        assert_eq!(r.depth, 0);
        assert_eq!(r.point, vec![0.0]);
        assert!(r.parity.iter().all(ParityCount::is_odd));
    }

    #[test]
    fn swap_on_embedded_segment() {
        let k = Simplex::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let r = brouwer_fixed_point(&k, &|x: &[f64]| vec![x[1], x[0]], &BrouwerOptions::default())
            .unwrap();
        assert!((r.point[0] - 0.5).abs() <= 1e-9 && (r.point[1] - 0.5).abs() <= 1e-9);
        assert!(r.parity.iter().all(ParityCount::is_odd));
    }

    #[test]
    fn rotation_of_a_triangle_needs_refinement() {
        let k = Simplex::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        // Contraction towards an off-centre point: fixed point (0.3, 0.2).
        let h = |x: &[f64]| vec![0.3 + 0.5 * (x[0] - 0.3), 0.2 + 0.5 * (x[1] - 0.2)];
        let r = brouwer_fixed_point(&k, &h, &BrouwerOptions::default()).unwrap();
        assert!(r.residual <= 1e-9);
        assert!((r.point[0] - 0.3).abs() < 1e-8 && (r.point[1] - 0.2).abs() < 1e-8);
        assert!(r.parity.len() >= 3);
        assert!(r.parity.iter().all(ParityCount::is_odd), "{:?}", r.parity);
        assert!(r.trace.windows(2).all(|w| w[1].residual <= w[0].residual));
    }

    #[test]
    fn nonlinear_maps_in_two_and_three_dimensions() {
        let k = Simplex::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let h = |x: &[f64]| vec![0.2 + 0.3 * x[1] * x[1], 0.1 + 0.4 * x[0] * x[0]];
        let r = brouwer_fixed_point(&k, &h, &BrouwerOptions::default()).unwrap();
        assert!(r.residual <= 1e-9, "{}", r.residual);
        assert!(r.parity.iter().all(ParityCount::is_odd));

        let k3 = Simplex::new(vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        let h3 = |x: &[f64]| vec![0.1 + 0.2 * x[2], 0.15 + 0.1 * x[0] * x[1], 0.3 - 0.2 * x[1]];
        let r = brouwer_fixed_point(&k3, &h3, &BrouwerOptions::default()).unwrap();
        assert!(r.residual <= 1e-9, "{}", r.residual);
        assert!(r.parity.iter().all(ParityCount::is_odd), "{:?}", r.parity);
    }

    #[test]
    fn square_map_finds_an_endpoint() {
        let k = segment(0.0, 1.0).unwrap();
        let r = brouwer_fixed_point(&k, &|x: &[f64]| vec![x[0] * x[0]], &BrouwerOptions::default())
            .unwrap();
        assert!(r.point[0] == 0.0 || r.point[0] == 1.0);
    }

    #[test]
    fn leaving_the_simplex_is_an_error() {
        let k = segment(0.0, 1.0).unwrap();
        let e = brouwer_fixed_point(&k, &|x: &[f64]| vec![x[0] + 2.0], &BrouwerOptions::default());
        assert!(matches!(e, Err(FixedPointError::NotSelfMap { .. })));
    }

    #[test]
    fn ex1_composed_with_shift() {
        let t = fixtures::ex1();
        let k = segment(0.0, 4.0).unwrap();
        let w = WnqWitness::new(
            vec![vec![0.0], vec![4.0]],
            vec![0.0, 2.0],
            Reparameterization::one_knot(0.5, Orientation::First).unwrap(),
        )
        .unwrap();
        let out = composed_fixed_point(
            &k,
            &t,
            &ComposeWitness::Wnq(w),
            &TransferMap::affine_1d(1.0, 2.0),
            &GridSpec::default(),
            &BrouwerOptions::default(),
        )
        .unwrap();
        let x = out.result.point[0];
        assert!((2.0..=4.0).contains(&x));
        assert!((out.selection_value + 2.0 - x).abs() <= 1e-9);
        assert!(out.post_distance <= 2e-9);
    }

    #[test]
    fn constant_transfer() {
        let t = fixtures::constant(0.0, 1.0, 0.0, 1.0);
        let k = segment(0.0, 1.0).unwrap();
        let s = TransferMap::affine_1d(0.0, 0.3);
        let out = composed_fixed_point(
            &k,
            &t,
            &ComposeWitness::Star(vec![0.5, 0.5]),
            &s,
            &GridSpec::with_resolution(101),
            &BrouwerOptions::default(),
        )
        .unwrap();
        assert!((out.result.point[0] - 0.3).abs() <= 1e-9);
        let id = composed_fixed_point(
            &k,
            &t,
            &ComposeWitness::Star(vec![0.5, 0.5]),
            &TransferMap::PiecewiseLinear {
                knots: vec![(0.0, 0.0), (1.0, 1.0)],
            },
            &GridSpec::with_resolution(101),
            &BrouwerOptions::default(),
        )
        .unwrap();
        assert!((id.result.point[0] - 0.5).abs() <= 1e-9);
    }

    #[test]
    fn setvalued_residual_search() {
        let dom = Rect::closed(&[(0.0, 1.0)]);
        let flip = FnCorrespondence::new(dom.clone(), |x: &[f64]| IntervalUnion::point(1.0 - x[0]));
        let r = approx_fixed_point_setvalued(&[&flip], &SetValuedOptions::default()).unwrap();
        assert!((r.point[0] - 0.5).abs() <= 1e-6);
        assert!(r.trace.windows(2).all(|w| w[1].residual <= w[0].residual));

        let full = fixtures::constant(0.0, 1.0, 0.0, 1.0);
        let r = approx_fixed_point_setvalued(&[&full], &SetValuedOptions::default()).unwrap();
        assert_eq!(r.residual, 0.0);
        assert_eq!(r.point, vec![0.0]);

        let away = FnCorrespondence::new(dom, |x: &[f64]| IntervalUnion::point(x[0] + 0.5));
        assert!(matches!(
            approx_fixed_point_setvalued(&[&away], &SetValuedOptions::default()),
            Err(FixedPointError::ToleranceNotReached { .. })
        ));
    }

    #[test]
    fn warm_start_is_honoured() {
        let full = fixtures::constant(0.0, 1.0, 0.0, 1.0);
        let opts = SetValuedOptions {
            warm_start: Some(vec![0.7]),
            ..SetValuedOptions::default()
        };
        let r = approx_fixed_point_setvalued(&[&full], &opts).unwrap();
        assert_eq!(r.point, vec![0.7]);
    }
}
