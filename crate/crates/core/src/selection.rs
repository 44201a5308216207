//! Continuous selections on a simplex built from verified witnesses:
//! `f(x) = Σ g_i(λ_i(x)) y_i`, or the affine `f(x) = Σ λ_i(x) y_i`.

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::grid::{segment_crossings, GridSpec};
use crate::properties::{
    falsify_wcg, verify_star_witness, verify_wnq_witness, Counterexample, PropertyError, Verdict,
    WcgVerdict,
};
use crate::setvalue::{
    Correspondence, Interval, IntervalUnion, PiecewiseCorrespondence, Rect, SetValueError,
};
use crate::simplex::{compositions, lattice_steps_within, Simplex, SimplexError};
use crate::witness::{convex_value, Reparameterization, WitnessError, WnqWitness};

const LATTICE_BUDGET: u128 = 200_000;
const MAX_REPORTED_VIOLATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SelectionError {
    #[error("witness rejected: {}", .0.trace)]
    WitnessRejected(Box<Counterexample>),
    #[error("witness base points must be the simplex vertices in order")]
    BasePointsNotVertices,
    #[error("point {point:?} is outside the simplex")]
    OutsideSimplex { point: Vec<f64> },
    #[error("the values of T have empty intersection over the simplex")]
    EmptyCore,
    #[error("no value tuple at the simplex vertices has a convex graph: {}", .0.trace)]
    NoWcgTuple(Box<Counterexample>),
    #[error(transparent)]
    Property(#[from] PropertyError),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
    #[error(transparent)]
    Witness(#[from] WitnessError),
    #[error(transparent)]
    SetValue(#[from] SetValueError),
}

/// How vertex values are blended.
#[derive(Clone, Debug, PartialEq)]
pub enum SelectionForm {
    /// `f(x) = Σ g_i(λ_i(x)) y_i`.
    Wnq(Reparameterization),
    /// `f(x) = Σ λ_i(x) y_i`.
    Star,
}

/// A single-valued map on a simplex interpolating values at its vertices.
#[derive(Clone, Debug, PartialEq)]
pub struct Selection {
    simplex: Simplex,
    values: Vec<f64>,
    form: SelectionForm,
}

impl Selection {
    pub fn simplex(&self) -> &Simplex {
        &self.simplex
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn form(&self) -> &SelectionForm {
        &self.form
    }

    /// Blend of the vertex values at barycentric weights `lambda`.
    pub fn eval_weights(&self, lambda: &[f64]) -> f64 {
        match &self.form {
            SelectionForm::Wnq(g) => convex_value(&g.apply(lambda), &self.values),
            SelectionForm::Star => convex_value(lambda, &self.values),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, SelectionError> {
        let lambda = self.simplex.barycentric(x)?;
        if !lambda.is_inside() {
            return Err(SelectionError::OutsideSimplex { point: x.to_vec() });
        }
        Ok(self.eval_weights(lambda.weights()))
    }

    /// `(x, f(x))` at the uniform lattice with `steps` subdivisions per edge.
    pub fn sample(&self, steps: usize) -> Vec<(Vec<f64>, f64)> {
        lattice_points(&self.simplex, steps)
            .into_iter()
            .map(|(x, l)| {
                let y = self.eval_weights(&l);
                (x, y)
            })
            .collect()
    }

    /// Samples as CSV with header `x0,...,f`.
    pub fn to_csv(&self, steps: usize) -> String {
        let d = self.simplex.ambient_dim();
        let mut out = String::new();
        let header: Vec<String> = if d == 1 {
            vec!["x".into()]
        } else {
            (0..d).map(|i| format!("x{i}")).collect()
        };
        out.push_str(&header.join(","));
        out.push_str(",f\n");
        for (x, y) in self.sample(steps) {
            for c in &x {
                out.push_str(&format!("{c},"));
            }
            out.push_str(&format!("{y}\n"));
        }
        out
    }

    /// The selection viewed as a single-valued correspondence on the
    /// bounding box of its simplex (exactly the simplex for segments on a
    /// line).
    pub fn as_correspondence(&self) -> SelectionMap<'_> {
        let domain = Rect::new(
            self.simplex
                .bounding_box()
                .into_iter()
                .map(|(lo, hi)| Interval::closed(lo, hi))
                .collect(),
        );
        SelectionMap {
            selection: self,
            domain,
        }
    }
}

impl Serialize for Selection {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            simplex: &'a Simplex,
            values: &'a [f64],
            form: &'static str,
            #[serde(skip_serializing_if = "Option::is_none")]
            g: Option<&'a Reparameterization>,
        }
        let (form, g) = match &self.form {
            SelectionForm::Wnq(g) => ("wnq", Some(g)),
            SelectionForm::Star => ("star", None),
        };
        Repr {
            simplex: &self.simplex,
            values: &self.values,
            form,
            g,
        }
        .serialize(serializer)
    }
}

/// Adaptor returned by [`Selection::as_correspondence`]. Points of the box
/// outside the simplex map to `∅`.
pub struct SelectionMap<'a> {
    selection: &'a Selection,
    domain: Rect,
}

impl Correspondence for SelectionMap<'_> {
    fn domain(&self) -> &Rect {
        &self.domain
    }

    fn value_at(&self, x: &[f64]) -> Result<IntervalUnion, SetValueError> {
        crate::setvalue::check_point(&self.domain, x)?;
        Ok(match self.selection.eval(x) {
            Ok(y) => IntervalUnion::point(y),
            Err(_) => IntervalUnion::empty(),
        })
    }
}

fn check_base_points(k: &Simplex, witness: &WnqWitness) -> Result<(), SelectionError> {
    if witness.points() != k.vertices() {
        return Err(SelectionError::BasePointsNotVertices);
    }
    Ok(())
}

/// Builds `f(x) = Σ g_i(λ_i(x)) y_i` after verifying the witness on `grid`.
pub fn build_selection(
    k: &Simplex,
    t: &dyn Correspondence,
    witness: &WnqWitness,
    grid: &GridSpec,
) -> Result<Selection, SelectionError> {
    check_base_points(k, witness)?;
    if let Verdict::Refuted(c) = verify_wnq_witness(t, witness, grid)? {
        return Err(SelectionError::WitnessRejected(Box::new(c)));
    }
    Ok(Selection {
        simplex: k.clone(),
        values: witness.values().to_vec(),
        form: SelectionForm::Wnq(witness.g().clone()),
    })
}

/// Builds the affine `f(x) = Σ λ_i(x) y_i` after checking that every convex
/// combination of `ys` lies in `T(x)` at every grid point.
pub fn build_selection_star(
    k: &Simplex,
    t: &dyn Correspondence,
    ys: &[f64],
    grid: &GridSpec,
) -> Result<Selection, SelectionError> {
    if let Verdict::Refuted(c) = verify_star_witness(t, k.vertices(), ys, grid)? {
        return Err(SelectionError::WitnessRejected(Box::new(c)));
    }
    Ok(Selection {
        simplex: k.clone(),
        values: ys.to_vec(),
        form: SelectionForm::Star,
    })
}

/// Selection built without verification, for tests of the validator.
pub fn unchecked_selection(k: &Simplex, witness: &WnqWitness) -> Selection {
    Selection {
        simplex: k.clone(),
        values: witness.values().to_vec(),
        form: SelectionForm::Wnq(witness.g().clone()),
    }
}

/// The affine selection through `ys` without any check against a map.
pub fn unchecked_selection_star(k: &Simplex, ys: &[f64]) -> Result<Selection, SelectionError> {
    if ys.len() != k.vertex_count() {
        return Err(WitnessError::ArityMismatch {
            expected: k.vertex_count(),
            found: ys.len(),
        }
        .into());
    }
    Ok(Selection {
        simplex: k.clone(),
        values: ys.to_vec(),
        form: SelectionForm::Star,
    })
}

/// A grid point where `f(x) ∉ T(x)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MembershipViolation {
    pub point: Vec<f64>,
    pub value: f64,
    pub t_value: IntervalUnion,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelectionReport {
    pub points_checked: usize,
    pub violation_count: usize,
    /// First violations in scan order, at most 100.
    pub violations: Vec<MembershipViolation>,
    /// `max |f(x) - f(x')|` over adjacent lattice points.
    pub modulus: f64,
    /// `max |f(x) - f(x')| / |x - x'|` over the same pairs.
    pub lipschitz: f64,
    /// Edge length of the lattice divided by the subdivision count.
    pub spacing: f64,
    pub tol_continuity: f64,
    pub within_tolerance: bool,
}

impl SelectionReport {
    pub fn is_valid(&self) -> bool {
        self.violation_count == 0
    }
}

/// Lattice points of `k` with their barycentric weights, in lexicographic
/// order of the integer compositions.
fn lattice_points(k: &Simplex, steps: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let n = k.vertex_count();
    let steps = lattice_steps_within(n, steps.max(1), LATTICE_BUDGET);
    compositions(n, steps)
        .into_iter()
        .map(|c| {
            let mut l: Vec<f64> = c.iter().map(|&v| v as f64 / steps as f64).collect();
            let head: f64 = l[..n - 1].iter().sum();
            l[n - 1] = 1.0 - head;
            (k.combine(&l), l)
        })
        .collect()
}

/// Checks `f(x) ∈ T(x)` over a lattice on the simplex (`resolution` points
/// per edge for segments) plus the points where edges cross breakpoints of
/// `T`, and estimates the modulus of continuity over adjacent lattice points.
pub fn validate_selection(
    f: &Selection,
    t: &dyn Correspondence,
    resolution: usize,
    tol_continuity: f64,
) -> Result<SelectionReport, SelectionError> {
    let k = f.simplex();
    let n = k.vertex_count();
    let steps = lattice_steps_within(n, resolution.saturating_sub(1).max(1), LATTICE_BUDGET);
    let comps = compositions(n, steps);
    let lattice = lattice_points(k, steps);

    let mut extra: Vec<Vec<f64>> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (k.vertex(i), k.vertex(j));
            for s in segment_crossings(t, a, b) {
                for s in [s.next_down(), s, s.next_up()] {
                    if (0.0..=1.0).contains(&s) {
                        let mut l = vec![0.0; n];
                        l[i] = s;
                        l[j] = 1.0 - s;
                        extra.push(l);
                    }
                }
            }
        }
    }

    let mut violations = Vec::new();
    let mut violation_count = 0;
    let mut fvals = Vec::with_capacity(lattice.len());
    let mut check = |x: &[f64], l: &[f64]| -> Result<f64, SelectionError> {
        let y = f.eval_weights(l);
        let tv = t.value_at(x)?;
        if !tv.contains(y) {
            violation_count += 1;
            if violations.len() < MAX_REPORTED_VIOLATIONS {
                violations.push(MembershipViolation {
                    point: x.to_vec(),
                    value: y,
                    t_value: tv,
                });
            }
        }
        Ok(y)
    };
    for (x, l) in &lattice {
        fvals.push(check(x, l)?);
    }
    for l in &extra {
        let x = k.combine(l);
        check(&x, l)?;
    }

    // Neighbours in the lattice: move one unit of weight between two coordinates.
    let index: std::collections::HashMap<&[usize], usize> =
        comps.iter().enumerate().map(|(i, c)| (c.as_slice(), i)).collect();
    let mut modulus = 0.0f64;
    let mut lipschitz = 0.0f64;
    let mut nb = vec![0usize; n];
    for (p, c) in comps.iter().enumerate() {
        for i in 0..n {
            if c[i] == 0 {
                continue;
            }
            for j in 0..n {
                if j == i {
                    continue;
                }
                nb.copy_from_slice(c);
                nb[i] -= 1;
                nb[j] += 1;
                if let Some(&q) = index.get(nb.as_slice()) {
                    if q > p {
                        let df = (fvals[p] - fvals[q]).abs();
                        let dx = crate::simplex::distance(&lattice[p].0, &lattice[q].0);
                        modulus = modulus.max(df);
                        if dx > 0.0 {
                            lipschitz = lipschitz.max(df / dx);
                        }
                    }
                }
            }
        }
    }
    let spacing = k.diameter() / steps as f64;
    Ok(SelectionReport {
        points_checked: lattice.len() + extra.len(),
        violation_count,
        violations,
        modulus,
        lipschitz,
        spacing,
        tol_continuity,
        within_tolerance: modulus <= tol_continuity,
    })
}

/// Witness with every value equal to the least element of the core of `T`
/// over the bounding box of `K` and identity reparameterization.
///
/// When the core has an open lower end its first component's midpoint is
/// used instead.
pub fn wnq_witness_from_constant_core(
    t: &PiecewiseCorrespondence,
    k: &Simplex,
) -> Result<WnqWitness, SelectionError> {
    let bbox = Rect::new(
        k.bounding_box()
            .into_iter()
            .map(|(lo, hi)| Interval::closed(lo, hi))
            .collect(),
    );
    let core = t.restrict(&bbox)?.core();
    let y = core.representative().ok_or(SelectionError::EmptyCore)?;
    Ok(WnqWitness::with_identity(
        k.vertices().to_vec(),
        vec![y; k.vertex_count()],
    )?)
}

/// Witness with the values of a weakly-convex-graph tuple at the vertices of
/// `K` and identity reparameterization.
pub fn wnq_witness_from_convex_graph(
    t: &dyn Correspondence,
    k: &Simplex,
    grid: &GridSpec,
) -> Result<WnqWitness, SelectionError> {
    match falsify_wcg(t, k.vertices(), grid)? {
        WcgVerdict::Holds { values } => Ok(WnqWitness::with_identity(k.vertices().to_vec(), values)?),
        WcgVerdict::Refuted { counterexample } => {
            Err(SelectionError::NoWcgTuple(Box::new(counterexample)))
        }
    }
}
