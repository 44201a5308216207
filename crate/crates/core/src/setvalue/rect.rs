//! Axis-aligned boxes in `R^m` whose faces are individually open or closed,
//! and exact coverage tests for finite unions of them.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::Interval;

/// Product of one [`Interval`] per axis.
#[derive(Clone, Debug, PartialEq)]
pub struct Rect {
    sides: Vec<Interval>,
}

impl Rect {
    pub fn new(sides: Vec<Interval>) -> Self {
        Rect { sides }
    }

    /// Closed box `[lo_0, hi_0] x ... x [lo_m, hi_m]`.
    pub fn closed(bounds: &[(f64, f64)]) -> Self {
        Rect::new(bounds.iter().map(|&(lo, hi)| Interval::closed(lo, hi)).collect())
    }

    pub fn interval(iv: Interval) -> Self {
        Rect::new(vec![iv])
    }

    pub fn dim(&self) -> usize {
        self.sides.len()
    }

    pub fn sides(&self) -> &[Interval] {
        &self.sides
    }

    pub fn side(&self, axis: usize) -> &Interval {
        &self.sides[axis]
    }

    pub fn is_empty(&self) -> bool {
        self.sides.iter().any(Interval::is_empty)
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.sides.len() && self.sides.iter().zip(x).all(|(s, &c)| s.contains(c))
    }

    pub fn intersect(&self, other: &Rect) -> Rect {
        Rect::new(
            self.sides
                .iter()
                .zip(&other.sides)
                .map(|(a, b)| a.intersect(b))
                .collect(),
        )
    }

    pub fn is_subset(&self, other: &Rect) -> bool {
        self.is_empty()
            || (self.dim() == other.dim()
                && self.sides.iter().zip(&other.sides).all(|(a, b)| a.is_subset(b)))
    }

    pub fn closure(&self) -> Rect {
        Rect::new(self.sides.iter().map(Interval::closure).collect())
    }

    /// Euclidean distance from `x` to the closure.
    pub fn distance(&self, x: &[f64]) -> f64 {
        self.sides
            .iter()
            .zip(x)
            .map(|(s, &c)| s.distance(c).powi(2))
            .sum::<f64>()
            .sqrt()
    }

    /// Nearest point of the closure.
    pub fn clamp(&self, x: &[f64]) -> Vec<f64> {
        self.sides
            .iter()
            .zip(x)
            .map(|(s, &c)| c.clamp(s.lo, s.hi))
            .collect()
    }

    /// Corners of the closure (`2^m` points, lexicographic order).
    pub fn corners(&self) -> Vec<Vec<f64>> {
        let mut out = vec![Vec::new()];
        for s in &self.sides {
            let vals: &[f64] = if s.lo == s.hi { &[s.lo][..] } else { &[s.lo, s.hi][..] };
            out = out
                .into_iter()
                .flat_map(|p| {
                    vals.iter().map(move |&v| {
                        let mut q = p.clone();
                        q.push(v);
                        q
                    })
                })
                .collect();
        }
        out
    }

    /// Longest side length.
    pub fn diameter_sup(&self) -> f64 {
        self.sides.iter().map(Interval::width).fold(0.0, f64::max)
    }
}

impl fmt::Display for Rect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, s) in self.sides.iter().enumerate() {
            if i > 0 {
                write!(f, " × ")?;
            }
            write!(f, "{s}")?;
        }
        Ok(())
    }
}

impl Serialize for Rect {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.sides.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Rect {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(Rect::new(Vec::<Interval>::deserialize(deserializer)?))
    }
}

/// Elementary pieces of a box relative to a set of breakpoints: on each axis
/// the breakpoints themselves and the open gaps between them. Every box whose
/// side endpoints are among the breakpoints is a union of atoms, so set
/// relations between such boxes reduce to checks on one representative per
/// atom.
pub(crate) struct AtomGrid {
    per_axis: Vec<Vec<f64>>,
}

impl AtomGrid {
    pub(crate) fn new<'a>(dim: usize, rects: impl IntoIterator<Item = &'a Rect>) -> Self {
        let mut per_axis = vec![Vec::new(); dim];
        for r in rects {
            for (axis, s) in r.sides().iter().enumerate() {
                per_axis[axis].push(s.lo);
                per_axis[axis].push(s.hi);
            }
        }
        for pts in per_axis.iter_mut() {
            pts.retain(|v| v.is_finite());
            pts.sort_by(f64::total_cmp);
            pts.dedup();
        }
        AtomGrid { per_axis }
    }

    fn representatives(&self, axis: usize) -> Vec<f64> {
        let pts = &self.per_axis[axis];
        let mut out = Vec::with_capacity(2 * pts.len());
        for (i, &p) in pts.iter().enumerate() {
            out.push(p);
            if let Some(&q) = pts.get(i + 1) {
                out.push(p + 0.5 * (q - p));
            }
        }
        out
    }

    pub(crate) fn atom_count(&self) -> u128 {
        self.per_axis
            .iter()
            .map(|p| (2 * p.len()).saturating_sub(1).max(1) as u128)
            .product()
    }

    /// Calls `visit` with one representative per atom, in lexicographic
    /// order, stopping early when it returns `false`.
    pub(crate) fn for_each(&self, mut visit: impl FnMut(&[f64]) -> bool) {
        let reps: Vec<Vec<f64>> = (0..self.per_axis.len())
            .map(|a| self.representatives(a))
            .collect();
        if reps.iter().any(Vec::is_empty) {
            return;
        }
        let mut idx = vec![0usize; reps.len()];
        let mut point: Vec<f64> = reps.iter().map(|r| r[0]).collect();
        loop {
            if !visit(&point) {
                return;
            }
            let mut axis = reps.len();
            loop {
                if axis == 0 {
                    return;
                }
                axis -= 1;
                idx[axis] += 1;
                if idx[axis] < reps[axis].len() {
                    point[axis] = reps[axis][idx[axis]];
                    break;
                }
                idx[axis] = 0;
                point[axis] = reps[axis][0];
            }
        }
    }
}

/// True when the union of `cells` equals `target` exactly (with openness).
pub fn union_equals(target: &Rect, cells: &[Rect]) -> bool {
    if cells.iter().any(|c| !c.is_subset(target)) {
        return false;
    }
    let grid = AtomGrid::new(target.dim(), std::iter::once(target).chain(cells));
    let mut ok = true;
    grid.for_each(|p| {
        let inside = target.contains(p);
        let covered = cells.iter().any(|c| c.contains(p));
        ok = inside == covered;
        ok
    });
    ok
}

/// Smallest box (with openness) containing every cell, if any cell is nonempty.
pub fn bounding_rect(cells: &[Rect]) -> Option<Rect> {
    let mut it = cells.iter().filter(|c| !c.is_empty());
    let first = it.next()?.clone();
    Some(it.fold(first, |acc, c| {
        Rect::new(
            acc.sides()
                .iter()
                .zip(c.sides())
                .map(|(a, b)| {
                    let (lo, lo_open) = if b.lo < a.lo || (b.lo == a.lo && !b.lo_open) {
                        (b.lo, b.lo_open)
                    } else {
                        (a.lo, a.lo_open)
                    };
                    let (hi, hi_open) = if b.hi > a.hi || (b.hi == a.hi && !b.hi_open) {
                        (b.hi, b.hi_open)
                    } else {
                        (a.hi, a.hi_open)
                    };
                    Interval::new(lo, lo_open, hi, hi_open)
                })
                .collect(),
        )
    }))
}
