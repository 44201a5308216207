use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{bounding_rect, union_equals, AtomGrid, Interval, IntervalUnion, Rect, SetValueError};

/// Probe radii used for graph adherence when the caller has no preference.
/// Only the last radius determines the result.
pub const DEFAULT_DELTA_SCHEDULE: [f64; 3] = [1e-3, 1e-6, 1e-9];

const MAX_ATOMS: u128 = 4_000_000;

/// A correspondence `T: X -> 2^R` on a box domain `X ⊂ R^m`.
///
/// Implementors report the coordinates where their value may jump so that
/// grid-based checks can include them.
pub trait Correspondence: Send + Sync {
    fn domain(&self) -> &Rect;

    /// `T(x)`; fails with `OutsideDomain` when `x ∉ X`.
    fn value_at(&self, x: &[f64]) -> Result<IntervalUnion, SetValueError>;

    /// Coordinates along `axis` where the value may be discontinuous.
    fn breakpoints(&self, _axis: usize) -> Vec<f64> {
        Vec::new()
    }

    fn dim(&self) -> usize {
        self.domain().dim()
    }
}

pub(crate) fn check_point(domain: &Rect, x: &[f64]) -> Result<(), SetValueError> {
    if x.len() != domain.dim() {
        return Err(SetValueError::DimensionMismatch {
            expected: domain.dim(),
            found: x.len(),
        });
    }
    if !domain.contains(x) {
        return Err(SetValueError::OutsideDomain {
            point: x.to_vec(),
            domain: domain.to_string(),
        });
    }
    Ok(())
}

/// A correspondence given by a closure, for maps that are not piecewise
/// constant (e.g. `x -> [0, x]`).
pub struct FnCorrespondence<F> {
    domain: Rect,
    f: F,
    breakpoints: Vec<Vec<f64>>,
}

impl<F> FnCorrespondence<F>
where
    F: Fn(&[f64]) -> IntervalUnion + Send + Sync,
{
    pub fn new(domain: Rect, f: F) -> Self {
        let dim = domain.dim();
        FnCorrespondence {
            domain,
            f,
            breakpoints: vec![Vec::new(); dim],
        }
    }

    pub fn with_breakpoints(mut self, axis: usize, points: Vec<f64>) -> Self {
        self.breakpoints[axis] = points;
        self
    }
}

impl<F> Correspondence for FnCorrespondence<F>
where
    F: Fn(&[f64]) -> IntervalUnion + Send + Sync,
{
    fn domain(&self) -> &Rect {
        &self.domain
    }

    fn value_at(&self, x: &[f64]) -> Result<IntervalUnion, SetValueError> {
        check_point(&self.domain, x)?;
        Ok((self.f)(x))
    }

    fn breakpoints(&self, axis: usize) -> Vec<f64> {
        self.breakpoints.get(axis).cloned().unwrap_or_default()
    }
}

/// One cell of a [`PiecewiseCorrespondence`] and its constant value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Piece {
    #[serde(rename = "box")]
    pub cell: Rect,
    pub value: IntervalUnion,
}

/// A correspondence that is constant on each cell of a finite box partition
/// of its domain. Every domain point lies in exactly one cell.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseCorrespondence {
    domain: Rect,
    codomain: Interval,
    pieces: Vec<Piece>,
    breaks: Vec<Vec<f64>>,
}

impl PiecewiseCorrespondence {
    pub fn new(
        domain: Rect,
        codomain: Interval,
        pieces: Vec<Piece>,
    ) -> Result<Self, SetValueError> {
        if domain.is_empty() {
            return Err(SetValueError::EmptyDomain);
        }
        let dim = domain.dim();
        for (index, p) in pieces.iter().enumerate() {
            if p.cell.dim() != dim {
                return Err(SetValueError::DimensionMismatch {
                    expected: dim,
                    found: p.cell.dim(),
                });
            }
            if !p.cell.is_subset(&domain) {
                return Err(SetValueError::CellOutsideDomain {
                    index,
                    cell: p.cell.to_string(),
                });
            }
            if !p.value.is_subset_of_interval(&codomain) {
                return Err(SetValueError::ValueOutsideCodomain {
                    index,
                    value: p.value.to_string(),
                    codomain: codomain.to_string(),
                });
            }
        }
        let pieces: Vec<Piece> = pieces.into_iter().filter(|p| !p.cell.is_empty()).collect();

        let grid = AtomGrid::new(dim, std::iter::once(&domain).chain(pieces.iter().map(|p| &p.cell)));
        let atoms = grid.atom_count();
        if atoms > MAX_ATOMS {
            return Err(SetValueError::TooManyAtoms(atoms));
        }
        let mut failure = None;
        grid.for_each(|pt| {
            if !domain.contains(pt) {
                return true;
            }
            let count = pieces.iter().filter(|p| p.cell.contains(pt)).count();
            if count != 1 {
                failure = Some(SetValueError::NotAPartition {
                    point: pt.to_vec(),
                    count,
                });
                return false;
            }
            true
        });
        if let Some(err) = failure {
            return Err(err);
        }

        Ok(Self::assemble(domain, codomain, pieces))
    }

    /// Builds without re-validating the partition; callers guarantee it.
    fn assemble(domain: Rect, codomain: Interval, pieces: Vec<Piece>) -> Self {
        let dim = domain.dim();
        let mut breaks = vec![Vec::new(); dim];
        for p in &pieces {
            for (axis, s) in p.cell.sides().iter().enumerate() {
                breaks[axis].push(s.lo);
                breaks[axis].push(s.hi);
            }
        }
        for b in breaks.iter_mut() {
            b.retain(|v| v.is_finite());
            b.sort_by(f64::total_cmp);
            b.dedup();
        }
        PiecewiseCorrespondence {
            domain,
            codomain,
            pieces,
            breaks,
        }
    }

    /// `T(x) = value` for every `x` in `domain`.
    pub fn constant(
        domain: Rect,
        codomain: Interval,
        value: IntervalUnion,
    ) -> Result<Self, SetValueError> {
        let cell = domain.clone();
        Self::new(domain, codomain, vec![Piece { cell, value }])
    }

    /// One-dimensional convenience constructor.
    pub fn on_line(
        domain: Interval,
        codomain: Interval,
        pieces: Vec<(Interval, IntervalUnion)>,
    ) -> Result<Self, SetValueError> {
        Self::new(
            Rect::interval(domain),
            codomain,
            pieces
                .into_iter()
                .map(|(cell, value)| Piece {
                    cell: Rect::interval(cell),
                    value,
                })
                .collect(),
        )
    }

    pub fn codomain(&self) -> &Interval {
        &self.codomain
    }

    pub fn pieces(&self) -> &[Piece] {
        &self.pieces
    }

    /// Value of the unique cell containing `x`.
    pub fn evaluate(&self, x: &[f64]) -> Result<&IntervalUnion, SetValueError> {
        check_point(&self.domain, x)?;
        self.pieces
            .iter()
            .find(|p| p.cell.contains(x))
            .map(|p| &p.value)
            .ok_or_else(|| SetValueError::OutsideDomain {
                point: x.to_vec(),
                domain: self.domain.to_string(),
            })
    }

    /// Smallest positive distance between distinct cell boundaries on any axis.
    pub fn min_gap(&self) -> f64 {
        self.breaks
            .iter()
            .flat_map(|b| b.windows(2).map(|w| w[1] - w[0]))
            .fold(f64::INFINITY, f64::min)
    }

    fn map_values(&self, codomain: Interval, f: impl Fn(&IntervalUnion) -> IntervalUnion) -> Self {
        let pieces = self
            .pieces
            .iter()
            .map(|p| Piece {
                cell: p.cell.clone(),
                value: f(&p.value),
            })
            .collect();
        Self::assemble(self.domain.clone(), codomain, pieces)
    }

    /// `(cl T)(x) = cl T(x)`.
    pub fn closure_values(&self) -> Self {
        self.map_values(self.codomain.closure(), IntervalUnion::closure)
    }

    /// `(co T)(x) = co T(x)`.
    pub fn convexify_values(&self) -> Self {
        self.map_values(self.codomain, IntervalUnion::convex_hull)
    }

    /// `(T ∩ F)(x) = T(x) ∩ F(x)` on the common refinement of both partitions.
    pub fn intersect(&self, other: &PiecewiseCorrespondence) -> Result<Self, SetValueError> {
        if self.domain != other.domain {
            return Err(SetValueError::DomainMismatch {
                left: self.domain.to_string(),
                right: other.domain.to_string(),
            });
        }
        let codomain = {
            let c = self.codomain.intersect(&other.codomain);
            if c.is_empty() {
                self.codomain
            } else {
                c
            }
        };
        let mut pieces = Vec::new();
        for a in &self.pieces {
            for b in &other.pieces {
                let cell = a.cell.intersect(&b.cell);
                if !cell.is_empty() {
                    pieces.push(Piece {
                        cell,
                        value: a.value.intersect(&b.value),
                    });
                }
            }
        }
        Ok(Self::assemble(self.domain.clone(), codomain, pieces))
    }

    /// `x -> cl(T(x) + (-eps, eps)) ∩ Y`.
    pub fn minkowski_inflate(&self, eps: f64, codomain: &Interval) -> Result<Self, SetValueError> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(SetValueError::InvalidRadius(eps));
        }
        Ok(self.map_values(*codomain, |v| v.inflate_closed(eps).intersect_interval(codomain)))
    }

    /// Approximation from above of the graph adherence `T̄(x)`: the closure of
    /// the union of values over cells within Euclidean distance `δ` of `x`,
    /// where `δ` is the last entry of `deltas`. Exact for this piecewise
    /// constant class once `δ` is below the distance from `x` to every cell
    /// whose closure misses `x`.
    pub fn graph_adherence(&self, x: &[f64], deltas: &[f64]) -> Result<IntervalUnion, SetValueError> {
        let delta = last_of_schedule(deltas)?;
        check_point(&self.domain, x)?;
        Ok(self
            .pieces
            .iter()
            .filter(|p| p.cell.distance(x) <= delta)
            .fold(IntervalUnion::empty(), |acc, p| acc.union(&p.value.closure())))
    }

    /// Accepts `y ∈ T̄(x)` when `y` lies within `tol` of the adherence of
    /// every inflation `cl(T + (-ε, ε)) ∩ Y` along `eps_schedule`.
    pub fn limit_membership_check(
        &self,
        x: &[f64],
        y: f64,
        eps_schedule: &[f64],
        deltas: &[f64],
        tol: f64,
    ) -> Result<bool, SetValueError> {
        last_of_schedule(eps_schedule)?;
        for &eps in eps_schedule {
            let inflated = self.minkowski_inflate(eps, &self.codomain)?;
            let adherence = inflated.graph_adherence(x, deltas)?;
            if !(adherence.distance(y) <= tol) {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Restriction to `domain ∩ rect`.
    pub fn restrict(&self, rect: &Rect) -> Result<Self, SetValueError> {
        let domain = self.domain.intersect(rect);
        if domain.is_empty() {
            return Err(SetValueError::EmptyDomain);
        }
        let pieces = self
            .pieces
            .iter()
            .filter_map(|p| {
                let cell = p.cell.intersect(&domain);
                (!cell.is_empty()).then(|| Piece {
                    cell,
                    value: p.value.clone(),
                })
            })
            .collect();
        Ok(Self::assemble(domain, self.codomain, pieces))
    }

    /// `∩ {T(x) : x ∈ X}`, computed exactly over the cells.
    pub fn core(&self) -> IntervalUnion {
        let mut it = self.pieces.iter();
        let Some(first) = it.next() else {
            return IntervalUnion::empty();
        };
        it.fold(first.value.clone(), |acc, p| acc.intersect(&p.value))
    }

    /// Union of the cells with nonempty value.
    pub fn nonempty_region(&self) -> Region {
        Region::new(
            self.domain.clone(),
            self.pieces
                .iter()
                .filter(|p| !p.value.is_empty())
                .map(|p| p.cell.clone())
                .collect(),
        )
    }

    pub fn is_nonempty_valued(&self) -> bool {
        self.pieces.iter().all(|p| !p.value.is_empty())
    }
}

fn last_of_schedule(schedule: &[f64]) -> Result<f64, SetValueError> {
    let ok = !schedule.is_empty()
        && schedule.iter().all(|&d| d > 0.0 && d.is_finite())
        && schedule.windows(2).all(|w| w[1] < w[0]);
    if !ok {
        return Err(SetValueError::InvalidSchedule);
    }
    Ok(schedule[schedule.len() - 1])
}

impl Correspondence for PiecewiseCorrespondence {
    fn domain(&self) -> &Rect {
        &self.domain
    }

    fn value_at(&self, x: &[f64]) -> Result<IntervalUnion, SetValueError> {
        self.evaluate(x).cloned()
    }

    fn breakpoints(&self, axis: usize) -> Vec<f64> {
        self.breaks.get(axis).cloned().unwrap_or_default()
    }
}

#[derive(Serialize, Deserialize)]
struct CorrespondenceRepr {
    domain: Rect,
    codomain: Interval,
    cells: Vec<Piece>,
}

impl Serialize for PiecewiseCorrespondence {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        CorrespondenceRepr {
            domain: self.domain.clone(),
            codomain: self.codomain,
            cells: self.pieces.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for PiecewiseCorrespondence {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let r = CorrespondenceRepr::deserialize(deserializer)?;
        PiecewiseCorrespondence::new(r.domain, r.codomain, r.cells).map_err(serde::de::Error::custom)
    }
}

/// A finite union of boxes inside a domain, e.g. `{x : (A ∩ P)(x) ≠ ∅}`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Region {
    #[serde(skip)]
    domain: Rect,
    cells: Vec<Rect>,
}

impl Region {
    pub fn new(domain: Rect, cells: Vec<Rect>) -> Self {
        Region { domain, cells }
    }

    pub fn cells(&self) -> &[Rect] {
        &self.cells
    }

    pub fn is_empty(&self) -> bool {
        self.cells.iter().all(Rect::is_empty)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.cells.iter().any(|c| c.contains(x))
    }

    /// The region as a single box, when it is one.
    pub fn as_box(&self) -> Option<Rect> {
        let hull = bounding_rect(&self.cells)?;
        union_equals(&hull, &self.cells).then_some(hull)
    }

    /// True when the region is all of the domain.
    pub fn is_whole_domain(&self) -> bool {
        union_equals(&self.domain, &self.cells)
    }

    /// Smallest distance from `x` to the closure of the region.
    pub fn distance(&self, x: &[f64]) -> f64 {
        self.cells
            .iter()
            .map(|c| c.distance(x))
            .fold(f64::INFINITY, f64::min)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn iv(s: &str) -> Interval {
        s.parse().unwrap()
    }

    fn u(parts: &[&str]) -> IntervalUnion {
        IntervalUnion::from_intervals(parts.iter().map(|s| iv(s)).collect())
    }

    #[test]
    fn ex1_values() {
        let t = fixtures::ex1();
        assert_eq!(t.evaluate(&[2.0]).unwrap(), &u(&["[-2,0]"]));
        assert_eq!(t.evaluate(&[1.0]).unwrap(), &u(&["[0,2]"]));
        assert_eq!(t.evaluate(&[3.0]).unwrap(), &u(&["(0,2]"]));
        assert_eq!(t.evaluate(&[0.0]).unwrap(), &u(&["[0,2]"]));
        assert!(matches!(
            t.evaluate(&[4.5]),
            Err(SetValueError::OutsideDomain { .. })
        ));
        assert!(matches!(
            t.evaluate(&[1.0, 1.0]),
            Err(SetValueError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn partition_is_validated() {
        let gap = PiecewiseCorrespondence::on_line(
            iv("[0,4]"),
            iv("[-2,2]"),
            vec![(iv("[0,2)"), u(&["[0,1]"])), (iv("(2,4]"), u(&["[0,1]"]))],
        );
        assert!(matches!(gap, Err(SetValueError::NotAPartition { count: 0, .. })));
        let overlap = PiecewiseCorrespondence::on_line(
            iv("[0,4]"),
            iv("[-2,2]"),
            vec![(iv("[0,2]"), u(&["[0,1]"])), (iv("[2,4]"), u(&["[0,1]"]))],
        );
        assert!(matches!(overlap, Err(SetValueError::NotAPartition { count: 2, .. })));
        let outside = PiecewiseCorrespondence::on_line(
            iv("[0,4]"),
            iv("[0,1]"),
            vec![(iv("[0,4]"), u(&["[0,2]"]))],
        );
        assert!(matches!(outside, Err(SetValueError::ValueOutsideCodomain { .. })));
    }

    #[test]
    fn closure_of_values() {
        let cl = fixtures::ex1().closure_values();
        assert_eq!(cl.evaluate(&[3.0]).unwrap(), &u(&["[0,2]"]));
        let empty = PiecewiseCorrespondence::on_line(
            iv("[0,1]"),
            iv("[0,1]"),
            vec![(iv("[0,1]"), IntervalUnion::empty())],
        )
        .unwrap();
        assert!(empty.closure_values().evaluate(&[0.5]).unwrap().is_empty());
    }

    #[test]
    fn pointwise_intersection() {
        let ex1 = fixtures::ex1();
        let c = PiecewiseCorrespondence::constant(
            Rect::interval(iv("[0,4]")),
            iv("[-2,2]"),
            u(&["[-2,0]"]),
        )
        .unwrap();
        let both = ex1.intersect(&c).unwrap();
        assert_eq!(both.evaluate(&[1.0]).unwrap(), &IntervalUnion::point(0.0));
        assert_eq!(both.evaluate(&[2.0]).unwrap(), &u(&["[-2,0]"]));
        assert!(both.evaluate(&[3.0]).unwrap().is_empty());

        let other = PiecewiseCorrespondence::constant(
            Rect::interval(iv("[0,3]")),
            iv("[-2,2]"),
            u(&["[0,1]"]),
        )
        .unwrap();
        assert!(matches!(
            ex1.intersect(&other),
            Err(SetValueError::DomainMismatch { .. })
        ));
    }

    #[test]
    fn inflation_clips_to_codomain() {
        let t = PiecewiseCorrespondence::constant(
            Rect::interval(iv("[0,1]")),
            iv("[0,4]"),
            u(&["[0,1]"]),
        )
        .unwrap();
        let inflated = t.minkowski_inflate(0.5, &iv("[0,4]")).unwrap();
        assert_eq!(inflated.evaluate(&[0.3]).unwrap(), &u(&["[0,1.5]"]));
        assert!(matches!(
            t.minkowski_inflate(0.0, &iv("[0,4]")),
            Err(SetValueError::InvalidRadius(_))
        ));
    }

    #[test]
    fn inflation_absorbs_the_gap_at_the_jump() {
        // [-2,0] ∪ (0,2] widened by 0.1; checked by dense membership sampling.
        let t = PiecewiseCorrespondence::constant(
            Rect::interval(iv("[0,1]")),
            iv("[-3,3]"),
            u(&["[-2,-0.05]", "(0.05,2]"]),
        )
        .unwrap();
        let inflated = t.minkowski_inflate(0.1, &iv("[-3,3]")).unwrap();
        let v = inflated.evaluate(&[0.5]).unwrap();
        for k in 0..=6000 {
            let y = -3.0 + k as f64 * 1e-3;
            let expected = (-2.1..=2.1).contains(&y);
            assert_eq!(v.contains(y), expected, "y = {y}");
        }
    }

    #[test]
    fn adherence_at_the_jump() {
        let t = fixtures::ex1();
        let adh = t.graph_adherence(&[2.0], &DEFAULT_DELTA_SCHEDULE).unwrap();
        assert_eq!(adh, u(&["[-2,2]"]));
        assert_eq!(
            t.graph_adherence(&[1.0], &DEFAULT_DELTA_SCHEDULE).unwrap(),
            u(&["[0,2]"])
        );
        assert_eq!(
            t.graph_adherence(&[3.0], &DEFAULT_DELTA_SCHEDULE).unwrap(),
            u(&["[0,2]"])
        );
        assert!(matches!(
            t.graph_adherence(&[1.0], &[1e-3, 1e-2]),
            Err(SetValueError::InvalidSchedule)
        ));
    }

    #[test]
    fn limit_membership() {
        let t = fixtures::ex1();
        let eps: Vec<f64> = (0..=20).map(|k| 0.5f64.powi(k)).collect();
        assert!(t
            .limit_membership_check(&[2.0], 1.5, &eps, &DEFAULT_DELTA_SCHEDULE, 1e-6)
            .unwrap());
        assert!(t
            .limit_membership_check(&[1.0], 0.0, &eps, &DEFAULT_DELTA_SCHEDULE, 1e-6)
            .unwrap());
        let to_hundredth = [0.1, 0.05, 0.01];
        // 2.1 is 0.1 away from T̄(2) = [-2, 2].
        assert!(!t
            .limit_membership_check(&[2.0], 2.1, &to_hundredth, &DEFAULT_DELTA_SCHEDULE, 1e-6)
            .unwrap());
    }

    #[test]
    fn region_shape() {
        let t = fixtures::ex1();
        let c = PiecewiseCorrespondence::constant(
            Rect::interval(iv("[0,4]")),
            iv("[-2,2]"),
            u(&["[-2,0]"]),
        )
        .unwrap();
        let w = t.intersect(&c).unwrap().nonempty_region();
        assert_eq!(w.as_box(), Some(Rect::interval(iv("[0,2]"))));
        assert!(!w.is_whole_domain());
        assert!(w.contains(&[2.0]));
        assert!(!w.contains(&[2.5]));
        assert_eq!(t.nonempty_region().as_box(), Some(Rect::interval(iv("[0,4]"))));
        assert!(t.nonempty_region().is_whole_domain());
    }

    #[test]
    fn restriction_and_core() {
        let t = PiecewiseCorrespondence::on_line(
            iv("[0,1]"),
            iv("[0,1]"),
            vec![
                (iv("[0,0.25)"), u(&["[0,1]"])),
                (iv("[0.25,0.5)"), u(&["[0.4,0.7]"])),
                (iv("[0.5,0.75)"), u(&["[0,1]"])),
                (iv("[0.75,1]"), u(&["[0.4,0.7]"])),
            ],
        )
        .unwrap();
        assert_eq!(t.core(), u(&["[0.4,0.7]"]));
        let r = t.restrict(&Rect::interval(iv("[0,0.2]"))).unwrap();
        assert_eq!(r.core(), u(&["[0,1]"]));
        assert_eq!(fixtures::ex1().core(), IntervalUnion::empty());
        assert_eq!(t.min_gap(), 0.25);
    }

    #[test]
    fn serde_round_trip() {
        let t = fixtures::ex1();
        let json = serde_json::to_string(&t).unwrap();
        assert!(json.contains("\"(2, 4]\""));
        let back: PiecewiseCorrespondence = serde_json::from_str(&json).unwrap();
        assert_eq!(back, t);
    }
}
