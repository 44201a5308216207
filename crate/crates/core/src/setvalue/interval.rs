//! One-dimensional intervals with per-endpoint openness, and finite unions of
//! them kept in a canonical sorted, disjoint form.
//!
//! Membership is exact: an open endpoint is excluded by strict float
//! comparison, never by a tolerance.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::SetValueError;

/// An interval `lo..hi` whose endpoints are individually open or closed.
///
/// Text form is the usual bracket notation, e.g. `"[0, 2)"`, `"(0,2]"`,
/// `"[2,2]"`. Infinite endpoints are written `inf` / `-inf`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub lo_open: bool,
    pub hi: f64,
    pub hi_open: bool,
}

impl Interval {
    pub const fn new(lo: f64, lo_open: bool, hi: f64, hi_open: bool) -> Self {
        Interval {
            lo,
            lo_open,
            hi,
            hi_open,
        }
    }

    pub const fn closed(lo: f64, hi: f64) -> Self {
        Interval::new(lo, false, hi, false)
    }

    pub const fn open(lo: f64, hi: f64) -> Self {
        Interval::new(lo, true, hi, true)
    }

    pub const fn point(x: f64) -> Self {
        Interval::closed(x, x)
    }

    pub fn is_empty(&self) -> bool {
        if self.lo.is_nan() || self.hi.is_nan() {
            return true;
        }
        match self.lo.partial_cmp(&self.hi) {
            Some(Ordering::Less) => false,
            Some(Ordering::Equal) => self.lo_open || self.hi_open,
            _ => true,
        }
    }

    pub fn is_closed(&self) -> bool {
        !self.lo_open && !self.hi_open
    }

    pub fn contains(&self, y: f64) -> bool {
        let above = if self.lo_open { y > self.lo } else { y >= self.lo };
        let below = if self.hi_open { y < self.hi } else { y <= self.hi };
        above && below
    }

    pub fn closure(&self) -> Interval {
        Interval::closed(self.lo, self.hi)
    }

    /// Intersection; at a shared endpoint the stricter (open) flag wins.
    pub fn intersect(&self, other: &Interval) -> Interval {
        let (lo, lo_open) = match self.lo.total_cmp(&other.lo) {
            Ordering::Greater => (self.lo, self.lo_open),
            Ordering::Less => (other.lo, other.lo_open),
            Ordering::Equal => (self.lo, self.lo_open || other.lo_open),
        };
        let (hi, hi_open) = match self.hi.total_cmp(&other.hi) {
            Ordering::Less => (self.hi, self.hi_open),
            Ordering::Greater => (other.hi, other.hi_open),
            Ordering::Equal => (self.hi, self.hi_open || other.hi_open),
        };
        Interval::new(lo, lo_open, hi, hi_open)
    }

    /// `self ⊆ other`, honoring endpoint flags. The empty interval is a
    /// subset of everything.
    pub fn is_subset(&self, other: &Interval) -> bool {
        if self.is_empty() {
            return true;
        }
        if other.is_empty() {
            return false;
        }
        let lo_ok = other.lo < self.lo || (other.lo == self.lo && (!other.lo_open || self.lo_open));
        let hi_ok = self.hi < other.hi || (other.hi == self.hi && (!other.hi_open || self.hi_open));
        lo_ok && hi_ok
    }

    /// Euclidean distance from `y` to the closure.
    pub fn distance(&self, y: f64) -> f64 {
        if y < self.lo {
            self.lo - y
        } else if y > self.hi {
            y - self.hi
        } else {
            0.0
        }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        self.lo + 0.5 * (self.hi - self.lo)
    }

    /// Closed interval `[lo - eps, hi + eps]`.
    pub fn inflate_closed(&self, eps: f64) -> Interval {
        Interval::closed(self.lo - eps, self.hi + eps)
    }

    /// Open interval `(lo - eps, hi + eps)`.
    pub fn inflate_open(&self, eps: f64) -> Interval {
        Interval::open(self.lo - eps, self.hi + eps)
    }

    fn cmp_lower(&self, other: &Interval) -> Ordering {
        self.lo
            .total_cmp(&other.lo)
            .then(self.lo_open.cmp(&other.lo_open))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lo_open { '(' } else { '[' },
            self.lo,
            self.hi,
            if self.hi_open { ')' } else { ']' }
        )
    }
}

impl FromStr for Interval {
    type Err = SetValueError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || SetValueError::IntervalSyntax(s.to_string());
        let t = s.trim();
        let mut chars = t.chars();
        let lo_open = match chars.next() {
            Some('[') => false,
            Some('(') => true,
            _ => return Err(bad()),
        };
        let hi_open = match chars.next_back() {
            Some(']') => false,
            Some(')') => true,
            _ => return Err(bad()),
        };
        let body = chars.as_str();
        let (a, b) = body.split_once(',').ok_or_else(bad)?;
        let lo: f64 = a.trim().parse().map_err(|_| bad())?;
        let hi: f64 = b.trim().parse().map_err(|_| bad())?;
        if lo.is_nan() || hi.is_nan() {
            return Err(bad());
        }
        Ok(Interval::new(lo, lo_open, hi, hi_open))
    }
}

impl Serialize for Interval {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Interval {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A finite union of intervals, possibly empty.
///
/// Invariants after construction: components are nonempty, sorted, pairwise
/// disjoint, and no two components touch at a point that either of them
/// contains (such pairs are merged). Components are therefore exactly the
/// connected components of the set.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct IntervalUnion {
    parts: Vec<Interval>,
}

impl IntervalUnion {
    pub fn empty() -> Self {
        IntervalUnion { parts: Vec::new() }
    }

    pub fn from_interval(iv: Interval) -> Self {
        Self::from_intervals(vec![iv])
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Self::from_interval(Interval::closed(lo, hi))
    }

    pub fn point(y: f64) -> Self {
        Self::from_interval(Interval::point(y))
    }

    pub fn from_intervals(parts: Vec<Interval>) -> Self {
        IntervalUnion { parts }.normalized()
    }

    fn normalized(mut self) -> Self {
        self.parts.retain(|p| !p.is_empty());
        self.parts.sort_by(Interval::cmp_lower);
        let mut merged: Vec<Interval> = Vec::with_capacity(self.parts.len());
        for p in self.parts {
            if let Some(cur) = merged.last_mut() {
                let overlaps = p.lo < cur.hi || (p.lo == cur.hi && !(cur.hi_open && p.lo_open));
                if overlaps {
                    match p.hi.total_cmp(&cur.hi) {
                        Ordering::Greater => {
                            cur.hi = p.hi;
                            cur.hi_open = p.hi_open;
                        }
                        Ordering::Equal => cur.hi_open = cur.hi_open && p.hi_open,
                        Ordering::Less => {}
                    }
                    continue;
                }
            }
            merged.push(p);
        }
        IntervalUnion { parts: merged }
    }

    pub fn parts(&self) -> &[Interval] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn contains(&self, y: f64) -> bool {
        self.parts.iter().any(|p| p.contains(y))
    }

    /// True when the set is a single point `{y}`.
    pub fn as_singleton(&self) -> Option<f64> {
        match self.parts.as_slice() {
            [p] if p.lo == p.hi => Some(p.lo),
            _ => None,
        }
    }

    pub fn closure(&self) -> IntervalUnion {
        Self::from_intervals(self.parts.iter().map(Interval::closure).collect())
    }

    pub fn is_closed(&self) -> bool {
        self.parts.iter().all(Interval::is_closed)
    }

    /// Smallest interval containing the set; endpoint flags come from the
    /// extreme components.
    pub fn convex_hull(&self) -> IntervalUnion {
        match (self.parts.first(), self.parts.last()) {
            (Some(a), Some(b)) => {
                Self::from_interval(Interval::new(a.lo, a.lo_open, b.hi, b.hi_open))
            }
            _ => Self::empty(),
        }
    }

    pub fn union(&self, other: &IntervalUnion) -> IntervalUnion {
        let mut parts = self.parts.clone();
        parts.extend_from_slice(&other.parts);
        Self::from_intervals(parts)
    }

    pub fn intersect(&self, other: &IntervalUnion) -> IntervalUnion {
        let mut parts = Vec::new();
        for a in &self.parts {
            for b in &other.parts {
                let c = a.intersect(b);
                if !c.is_empty() {
                    parts.push(c);
                }
            }
        }
        Self::from_intervals(parts)
    }

    pub fn intersect_interval(&self, iv: &Interval) -> IntervalUnion {
        self.intersect(&IntervalUnion::from_interval(*iv))
    }

    pub fn is_subset(&self, other: &IntervalUnion) -> bool {
        self.parts
            .iter()
            .all(|p| other.parts.iter().any(|q| p.is_subset(q)))
    }

    pub fn is_subset_of_interval(&self, iv: &Interval) -> bool {
        self.parts.iter().all(|p| p.is_subset(iv))
    }

    /// `cl(S + (-eps, eps))`: every component widened by `eps` on both sides
    /// and closed. Gaps narrower than `2 eps` disappear.
    pub fn inflate_closed(&self, eps: f64) -> IntervalUnion {
        Self::from_intervals(self.parts.iter().map(|p| p.inflate_closed(eps)).collect())
    }

    /// `S + (-eps, eps)` as an open set (the closure of `S` widened by `eps`).
    pub fn inflate_open(&self, eps: f64) -> IntervalUnion {
        Self::from_intervals(self.parts.iter().map(|p| p.inflate_open(eps)).collect())
    }

    /// Distance from `y` to the closure; `+inf` for the empty set.
    pub fn distance(&self, y: f64) -> f64 {
        self.parts
            .iter()
            .map(|p| p.distance(y))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn inf(&self) -> Option<f64> {
        self.parts.first().map(|p| p.lo)
    }

    pub fn sup(&self) -> Option<f64> {
        self.parts.last().map(|p| p.hi)
    }

    /// Least element when it exists; otherwise the midpoint of the first
    /// component, so the result is always a member of a nonempty set.
    pub fn representative(&self) -> Option<f64> {
        let first = self.parts.first()?;
        Some(if first.lo_open {
            first.midpoint()
        } else {
            first.lo
        })
    }

    /// Candidate members for discretized searches: member endpoints first
    /// (ascending), then `resolution` evenly spaced points per component that
    /// are members and not already listed.
    pub fn sample_members(&self, resolution: usize) -> Vec<f64> {
        let mut out = Vec::new();
        let mut endpoints: Vec<f64> = self
            .parts
            .iter()
            .flat_map(|p| [(p.lo, !p.lo_open), (p.hi, !p.hi_open)])
            .filter(|&(v, member)| member && v.is_finite())
            .map(|(v, _)| v)
            .collect();
        endpoints.sort_by(f64::total_cmp);
        endpoints.dedup();
        out.extend(endpoints);
        let res = resolution.max(2);
        for p in &self.parts {
            if !(p.lo.is_finite() && p.hi.is_finite()) || p.lo == p.hi {
                continue;
            }
            for k in 0..res {
                let y = if k + 1 == res {
                    p.hi
                } else {
                    p.lo + (p.hi - p.lo) * (k as f64) / ((res - 1) as f64)
                };
                if p.contains(y) && !out.contains(&y) {
                    out.push(y);
                }
            }
        }
        out
    }
}

impl fmt::Display for IntervalUnion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return write!(f, "∅");
        }
        for (i, p) in self.parts.iter().enumerate() {
            if i > 0 {
                write!(f, " ∪ ")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

impl Serialize for IntervalUnion {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.parts.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for IntervalUnion {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let parts = Vec::<Interval>::deserialize(deserializer)?;
        Ok(IntervalUnion::from_intervals(parts))
    }
}

impl From<Interval> for IntervalUnion {
    fn from(iv: Interval) -> Self {
        IntervalUnion::from_interval(iv)
    }
}
