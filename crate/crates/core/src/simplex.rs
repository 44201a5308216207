//! Simplices embedded in Euclidean space: barycentric coordinates, point
//! reconstruction and iterated barycentric subdivision.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest least-squares residual accepted when solving for barycentric weights.
pub const TOL_AFFINE: f64 = 1e-9;
/// Slack on barycentric weights (membership and normalization).
pub const TOL_BARY: f64 = 1e-10;

/// Relative singular-value threshold below which the edge matrix is rank deficient.
const RANK_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimplexError {
    #[error("a simplex needs at least one vertex")]
    NoVertices,
    #[error("vertex {index} has {found} coordinates, expected {expected}")]
    DimensionMismatch {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("{vertices} vertices cannot be affinely independent in {ambient}-dimensional space")]
    TooManyVertices { vertices: usize, ambient: usize },
    #[error("vertices are not affinely independent")]
    DegenerateSimplex,
    #[error("point is not in the affine hull of the simplex (residual {residual:e})")]
    NotInAffineHull { residual: f64 },
    #[error("barycentric weights sum to {sum}, expected 1")]
    WeightsNotNormalized { sum: f64 },
    #[error("expected {expected} values, got {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("subdivision depth must be at least 1")]
    ZeroDepth,
}

/// An `(n-1)`-dimensional simplex given by `n` affinely independent vertices
/// in `d`-dimensional space (`n <= d + 1`).
///
/// Vertex order is significant: witness values and barycentric weights are
/// paired with vertices by index.
#[derive(Clone, Debug)]
pub struct Simplex {
    vertices: Vec<Vec<f64>>,
    /// `(E^T E)^{-1} E^T`, where the columns of `E` are `a_{j+1} - a_1`.
    pseudo_inverse: DMatrix<f64>,
    /// Operator norm of the affine map `x -> lambda(x)`.
    lipschitz: f64,
}

impl PartialEq for Simplex {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices
    }
}

/// Barycentric weights of a point relative to a [`Simplex`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Barycentric(Vec<f64>);

impl Barycentric {
    pub fn new(weights: Vec<f64>) -> Self {
        Barycentric(weights)
    }

    /// Unit vector `e_i` of length `n`.
    pub fn vertex(n: usize, i: usize) -> Self {
        let mut w = vec![0.0; n];
        w[i] = 1.0;
        Barycentric(w)
    }

    pub fn weights(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    /// True when every weight is nonnegative, i.e. the point lies in the simplex.
    pub fn is_inside(&self) -> bool {
        self.0.iter().all(|&w| w >= 0.0)
    }
}

impl Simplex {
    pub fn new(vertices: Vec<Vec<f64>>) -> Result<Self, SimplexError> {
        let first = vertices.first().ok_or(SimplexError::NoVertices)?;
        let d = first.len();
        for (index, v) in vertices.iter().enumerate() {
            if v.len() != d {
                return Err(SimplexError::DimensionMismatch {
                    index,
                    expected: d,
                    found: v.len(),
                });
            }
        }
        let n = vertices.len();
        if n > d + 1 {
            return Err(SimplexError::TooManyVertices {
                vertices: n,
                ambient: d,
            });
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(SimplexError::DegenerateSimplex);
        }

        let edges = DMatrix::from_fn(d, n - 1, |r, c| vertices[c + 1][r] - first[r]);
        let (pseudo_inverse, lipschitz) = if n == 1 {
            (DMatrix::zeros(0, d), 0.0)
        } else {
            let svd = edges.clone().svd(true, true);
            let max = svd.singular_values.max();
            let min = svd.singular_values.min();
            if !(max > 0.0) || min <= RANK_TOL * max {
                return Err(SimplexError::DegenerateSimplex);
            }
            let pinv = svd
                .pseudo_inverse(0.5 * min)
                .map_err(|_| SimplexError::DegenerateSimplex)?;
            // Full map: lambda_1 = 1 - sum(mu), lambda_{2..n} = mu = pinv (x - a_1).
            let mut full = DMatrix::zeros(n, d);
            for c in 0..d {
                let s: f64 = (0..n - 1).map(|r| pinv[(r, c)]).sum();
                full[(0, c)] = -s;
                for r in 0..n - 1 {
                    full[(r + 1, c)] = pinv[(r, c)];
                }
            }
            let lip = full.svd(false, false).singular_values.max();
            (pinv, lip)
        };

        Ok(Simplex {
            vertices,
            pseudo_inverse,
            lipschitz,
        })
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> &[f64] {
        &self.vertices[i]
    }

    /// Number of vertices `n`.
    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Simplex dimension `n - 1`.
    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    /// Dimension of the ambient space.
    pub fn ambient_dim(&self) -> usize {
        self.vertices[0].len()
    }

    /// Lipschitz constant of `x -> lambda(x)` in the Euclidean norm.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Barycentric coordinates of `x`.
    ///
    /// Weights in `[-TOL_BARY, 0)` are snapped to zero and the remainder
    /// rescaled, so points on shared faces classify consistently.
    pub fn barycentric(&self, x: &[f64]) -> Result<Barycentric, SimplexError> {
        let d = self.ambient_dim();
        if x.len() != d {
            return Err(SimplexError::ArityMismatch {
                expected: d,
                found: x.len(),
            });
        }
        let a1 = &self.vertices[0];
        let n = self.vertex_count();
        let offset = DVector::from_fn(d, |r, _| x[r] - a1[r]);
        if n == 1 {
            let residual = offset.norm();
            if residual > TOL_AFFINE {
                return Err(SimplexError::NotInAffineHull { residual });
            }
            return Ok(Barycentric(vec![1.0]));
        }

        let mu = &self.pseudo_inverse * &offset;
        let mut recon = DVector::zeros(d);
        for j in 0..n - 1 {
            for r in 0..d {
                recon[r] += mu[j] * (self.vertices[j + 1][r] - a1[r]);
            }
        }
        let residual = (recon - &offset).norm();
        if !(residual <= TOL_AFFINE) {
            return Err(SimplexError::NotInAffineHull { residual });
        }

        let mut weights = Vec::with_capacity(n);
        weights.push(1.0 - mu.iter().sum::<f64>());
        weights.extend(mu.iter().copied());

        if weights.iter().any(|&w| (-TOL_BARY..0.0).contains(&w)) {
            for w in weights.iter_mut() {
                if (-TOL_BARY..0.0).contains(w) {
                    *w = 0.0;
                }
            }
            let s: f64 = weights.iter().sum();
            for w in weights.iter_mut() {
                *w /= s;
            }
        }
        Ok(Barycentric(weights))
    }

    /// Point with barycentric coordinates `lambda`.
    pub fn from_barycentric(&self, lambda: &Barycentric) -> Result<Vec<f64>, SimplexError> {
        let n = self.vertex_count();
        if lambda.len() != n {
            return Err(SimplexError::ArityMismatch {
                expected: n,
                found: lambda.len(),
            });
        }
        let sum = lambda.sum();
        if !((sum - 1.0).abs() <= TOL_BARY) {
            return Err(SimplexError::WeightsNotNormalized { sum });
        }
        Ok(self.combine(lambda.weights()))
    }

    /// `sum_i w_i a_i` without normalization checks.
    pub fn combine(&self, weights: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.ambient_dim()];
        for (w, v) in weights.iter().zip(&self.vertices) {
            for (xc, vc) in x.iter_mut().zip(v) {
                *xc += w * vc;
            }
        }
        x
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        self.barycentric(x).map(|b| b.is_inside()).unwrap_or(false)
    }

    pub fn barycenter(&self) -> Vec<f64> {
        let n = self.vertex_count();
        self.combine(&vec![1.0 / n as f64; n])
    }

    /// Largest vertex-to-vertex distance.
    pub fn diameter(&self) -> f64 {
        let mut best = 0.0f64;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                best = best.max(distance(a, b));
            }
        }
        best
    }

    /// `(n-1)`-dimensional volume, `sqrt(det(E^T E)) / (n-1)!`.
    pub fn volume(&self) -> f64 {
        let n = self.vertex_count();
        if n == 1 {
            return 1.0;
        }
        let d = self.ambient_dim();
        let a1 = &self.vertices[0];
        let edges = DMatrix::from_fn(d, n - 1, |r, c| self.vertices[c + 1][r] - a1[r]);
        let det = (edges.transpose() * &edges).determinant().max(0.0);
        let fact: f64 = (1..n).map(|k| k as f64).product();
        det.sqrt() / fact
    }

    /// Per-axis `(min, max)` over the vertices.
    pub fn bounding_box(&self) -> Vec<(f64, f64)> {
        (0..self.ambient_dim())
            .map(|r| {
                self.vertices.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v[r]), hi.max(v[r]))
                })
            })
            .collect()
    }

    /// One level of barycentric subdivision: `n!` cells, one per vertex
    /// permutation. Cell `pi` has vertices `b_k = mean(a_pi(1), ..., a_pi(k))`.
    pub fn subdivide_once(&self) -> Vec<Simplex> {
        let n = self.vertex_count();
        let mut cells = Vec::new();
        for perm in permutations(n) {
            let mut acc = vec![0.0; self.ambient_dim()];
            let mut verts = Vec::with_capacity(n);
            for (k, &p) in perm.iter().enumerate() {
                for (a, c) in acc.iter_mut().zip(&self.vertices[p]) {
                    *a += c;
                }
                let count = (k + 1) as f64;
                verts.push(acc.iter().map(|a| a / count).collect());
            }
            cells.push(self.child(verts));
        }
        cells
    }

    /// Barycentric subdivision iterated `depth` times.
    pub fn subdivide(&self, depth: usize) -> Result<Vec<Simplex>, SimplexError> {
        if depth == 0 {
            return Err(SimplexError::ZeroDepth);
        }
        let mut cells = vec![self.clone()];
        for _ in 0..depth {
            cells = cells.iter().flat_map(Simplex::subdivide_once).collect();
        }
        Ok(cells)
    }

    /// Children of a nondegenerate simplex stay nondegenerate; rebuilding the
    /// pseudo-inverse only fails on severe round-off, where we fall back to
    /// the parent's geometry data.
    fn child(&self, vertices: Vec<Vec<f64>>) -> Simplex {
        Simplex::new(vertices.clone()).unwrap_or_else(|_| Simplex {
            vertices,
            pseudo_inverse: self.pseudo_inverse.clone(),
            lipschitz: self.lipschitz,
        })
    }
}

impl fmt::Display for Simplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "conv{{")?;
        for (i, v) in self.vertices.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "(")?;
            for (j, c) in v.iter().enumerate() {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{c}")?;
            }
            write!(f, ")")?;
        }
        write!(f, "}}")
    }
}

#[derive(Serialize, Deserialize)]
struct SimplexRepr {
    vertices: Vec<Vec<f64>>,
}

impl Serialize for Simplex {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        SimplexRepr {
            vertices: self.vertices.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Simplex {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = SimplexRepr::deserialize(deserializer)?;
        Simplex::new(repr.vertices).map_err(serde::de::Error::custom)
    }
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                rec(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(n), &mut vec![false; n], &mut out);
    out
}

/// Integer compositions of `steps` into `n` nonnegative parts, in
/// lexicographic order. Dividing by `steps` gives a regular lattice on the
/// standard simplex.
pub fn compositions(n: usize, steps: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() + 1 == n {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for k in 0..=left {
            prefix.push(k);
            rec(n, left - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if n == 0 {
        return out;
    }
    rec(n, steps, &mut Vec::with_capacity(n), &mut out);
    out
}

/// Number of lattice points produced by [`compositions`].
pub fn composition_count(n: usize, steps: usize) -> u128 {
    // C(steps + n - 1, n - 1)
    let k = n.saturating_sub(1) as u128;
    let top = steps as u128 + k;
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (top - i) / (i + 1);
    }
    c
}

/// Regular lattice on the standard simplex `Delta_{n-1}` with `steps`
/// subdivisions per edge.
pub fn simplex_lattice(n: usize, steps: usize) -> Vec<Vec<f64>> {
    let s = steps.max(1) as f64;
    compositions(n, steps.max(1))
        .into_iter()
        .map(|c| {
            let mut w: Vec<f64> = c.iter().map(|&k| k as f64 / s).collect();
            // The last weight absorbs rounding so every point sums to one.
            let head: f64 = w[..n - 1].iter().sum();
            w[n - 1] = 1.0 - head;
            w
        })
        .collect()
}

/// Largest subdivision count whose lattice on `Delta_{n-1}` has at most
/// `budget` points, capped at `max_steps`.
pub fn lattice_steps_within(n: usize, max_steps: usize, budget: u128) -> usize {
    if n <= 2 {
        return max_steps.max(1);
    }
    let mut lo = 1usize;
    let mut hi = max_steps.max(1);
    while lo < hi {
        let mid = (lo + hi).div_ceil(2);
        if composition_count(n, mid) <= budget {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    lo
}
