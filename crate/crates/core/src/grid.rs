//! Sampling grids shared by the falsifiers, selection validation and the
//! fixed-point scans. Every enumeration is in lexicographic order so that the
//! first reported violation does not depend on how work is split up.

use serde::{Deserialize, Serialize};

use crate::setvalue::{Correspondence, Interval, Rect};
use crate::simplex::{lattice_steps_within, simplex_lattice};

/// Resolution parameters for grid scans.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Points per axis of the domain grid, and subdivisions of the weight grid.
    pub resolution: usize,
    /// Probe radius; defaults to one domain grid step.
    pub delta: Option<f64>,
    /// Candidate values per value component.
    pub value_resolution: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            resolution: 1000,
            delta: None,
            value_resolution: 21,
        }
    }
}

/// Budget on weight-lattice points for three or more base points.
pub(crate) const LATTICE_BUDGET: u128 = 200_000;

impl GridSpec {
    pub fn with_resolution(resolution: usize) -> Self {
        GridSpec {
            resolution,
            ..GridSpec::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.resolution < 2 {
            return Err(format!("resolution must be at least 2, got {}", self.resolution));
        }
        if self.value_resolution < 2 {
            return Err(format!(
                "value resolution must be at least 2, got {}",
                self.value_resolution
            ));
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d.is_finite()) {
                return Err(format!("delta must be positive, got {d}"));
            }
        }
        Ok(())
    }

    /// Grid step on the narrowest nondegenerate axis of `domain`.
    pub fn step(&self, domain: &Rect) -> f64 {
        let step = domain
            .sides()
            .iter()
            .map(Interval::width)
            .filter(|w| *w > 0.0 && w.is_finite())
            .map(|w| w / (self.resolution - 1) as f64)
            .fold(f64::INFINITY, f64::min);
        if step.is_finite() {
            step
        } else {
            1e-3
        }
    }

    pub fn delta_for(&self, domain: &Rect) -> f64 {
        self.delta.unwrap_or_else(|| self.step(domain))
    }

    /// Same spec with every resolution doubled.
    pub fn doubled(&self) -> Self {
        GridSpec {
            resolution: 2 * self.resolution - 1,
            delta: self.delta.map(|d| d / 2.0),
            value_resolution: 2 * self.value_resolution - 1,
        }
    }
}

/// `resolution` evenly spaced points of the closed side plus `extra`,
/// restricted to members of the side, ascending and deduplicated.
pub(crate) fn axis_points(side: &Interval, resolution: usize, extra: &[f64]) -> Vec<f64> {
    let mut pts = Vec::with_capacity(resolution + extra.len());
    if side.lo == side.hi {
        pts.push(side.lo);
    } else {
        let r = resolution.max(2);
        for k in 0..r {
            pts.push(if k + 1 == r {
                side.hi
            } else {
                side.lo + (side.hi - side.lo) * (k as f64 / (r - 1) as f64)
            });
        }
    }
    pts.extend_from_slice(extra);
    pts.retain(|&p| side.contains(p));
    pts.sort_by(f64::total_cmp);
    pts.dedup();
    pts
}

/// Per-axis grid coordinates of `t`'s domain including its breakpoints.
pub(crate) fn domain_axes(t: &dyn Correspondence, resolution: usize) -> Vec<Vec<f64>> {
    t.domain()
        .sides()
        .iter()
        .enumerate()
        .map(|(axis, side)| axis_points(side, resolution, &t.breakpoints(axis)))
        .collect()
}

/// Visits every index tuple of a product of `lens`, last index fastest,
/// until `visit` returns `false`.
pub(crate) fn lex_product(lens: &[usize], mut visit: impl FnMut(&[usize]) -> bool) {
    if lens.contains(&0) {
        return;
    }
    let mut idx = vec![0usize; lens.len()];
    loop {
        if !visit(&idx) {
            return;
        }
        let mut axis = lens.len();
        loop {
            if axis == 0 {
                return;
            }
            axis -= 1;
            idx[axis] += 1;
            if idx[axis] < lens[axis] {
                break;
            }
            idx[axis] = 0;
        }
    }
}

/// Visits every point of the product grid `axes` in lexicographic order.
pub(crate) fn for_each_point(axes: &[Vec<f64>], mut visit: impl FnMut(&[f64]) -> bool) {
    let lens: Vec<usize> = axes.iter().map(Vec::len).collect();
    let mut point = vec![0.0; axes.len()];
    lex_product(&lens, |idx| {
        for (a, &i) in idx.iter().enumerate() {
            point[a] = axes[a][i];
        }
        visit(&point)
    });
}

pub(crate) fn product_size(axes: &[Vec<f64>]) -> u128 {
    axes.iter().map(|a| a.len() as u128).product()
}

/// Weights `t ∈ [0, 1]` at which the segment `t x_1 + (1 - t) x_2` meets a
/// breakpoint of `t`, together with their floating-point neighbours.
pub(crate) fn segment_crossings(t: &dyn Correspondence, x1: &[f64], x2: &[f64]) -> Vec<f64> {
    let mut out = Vec::new();
    for axis in 0..x1.len() {
        let (a, b) = (x1[axis], x2[axis]);
        if a == b {
            continue;
        }
        for bp in t.breakpoints(axis) {
            let s = (bp - b) / (a - b);
            if (0.0..=1.0).contains(&s) {
                out.push(s);
            }
        }
    }
    out
}

fn with_neighbours(ts: &[f64]) -> Vec<f64> {
    ts.iter()
        .flat_map(|&t| [t.next_down(), t, t.next_up()])
        .filter(|t| (0.0..=1.0).contains(t))
        .collect()
}

/// Weight vectors on `Δ_{n-1}` used to test combinations of `xs`.
///
/// For two points: the uniform grid `k / steps`, the breakpoint crossings of
/// the segment and the `extra` weights (each with its floating-point
/// neighbours), sorted by the first weight. For more points: the regular
/// lattice capped at [`LATTICE_BUDGET`] points.
pub(crate) fn weight_set(
    t: &dyn Correspondence,
    xs: &[Vec<f64>],
    steps: usize,
    extra: &[f64],
) -> Vec<Vec<f64>> {
    match xs.len() {
        0 => Vec::new(),
        1 => vec![vec![1.0]],
        2 => {
            let mut ts: Vec<f64> = (0..=steps).map(|k| k as f64 / steps as f64).collect();
            ts.extend(with_neighbours(&segment_crossings(t, &xs[0], &xs[1])));
            ts.extend(with_neighbours(extra));
            ts.sort_by(f64::total_cmp);
            ts.dedup();
            ts.into_iter().map(|s| vec![s, 1.0 - s]).collect()
        }
        n => simplex_lattice(n, lattice_steps_within(n, steps, LATTICE_BUDGET)),
    }
}

/// `Σ λ_i x_i`, pulled back onto the closed domain when round-off pushes it
/// outside by at most `1e-12`.
pub(crate) fn combine_points(domain: &Rect, xs: &[Vec<f64>], lambda: &[f64]) -> Vec<f64> {
    let dim = xs[0].len();
    let mut x = vec![0.0; dim];
    for (w, p) in lambda.iter().zip(xs) {
        for (c, v) in x.iter_mut().zip(p) {
            *c += w * v;
        }
    }
    if !domain.contains(&x) {
        let clamped = domain.clamp(&x);
        if domain.contains(&clamped) && crate::simplex::distance(&clamped, &x) <= 1e-12 {
            return clamped;
        }
    }
    x
}
