//! Witness data for weak concavity: chosen values at base points and a
//! reparameterization of the barycentric weights.

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WitnessError {
    #[error("component {component}: {reason}")]
    BadKnots { component: usize, reason: String },
    #[error("expected {expected} entries, got {found}")]
    ArityMismatch { expected: usize, found: usize },
    #[error("a witness needs at least one base point")]
    Empty,
    #[error("base point {index} has {found} coordinates, expected {expected}")]
    PointDimension {
        index: usize,
        expected: usize,
        found: usize,
    },
    #[error("knot must lie strictly inside (0, 1), got {0}")]
    KnotOutOfRange(f64),
}

/// Monotone piecewise-linear `g: [0, 1] -> [0, 1]` with `g(0) = 0` and
/// `g(1) = 1`, given by its knots.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseLinear {
    knots: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self, String> {
        let mut knots = knots;
        knots.dedup_by(|b, a| a.0 == b.0 && a.1 == b.1);
        if knots.len() < 2 {
            return Err("needs at least the knots (0, 0) and (1, 1)".into());
        }
        if knots[0] != (0.0, 0.0) {
            return Err(format!("first knot must be (0, 0), got {:?}", knots[0]));
        }
        if knots[knots.len() - 1] != (1.0, 1.0) {
            return Err(format!(
                "last knot must be (1, 1), got {:?}",
                knots[knots.len() - 1]
            ));
        }
        for w in knots.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            if !(x1 > x0) {
                return Err(format!("knot abscissae must increase ({x0} then {x1})"));
            }
            if !(y1 >= y0) {
                return Err(format!("g must be nondecreasing ({y0} then {y1})"));
            }
        }
        if knots.iter().any(|&(x, y)| !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y)) {
            return Err("knots must lie in [0, 1] x [0, 1]".into());
        }
        Ok(PiecewiseLinear { knots })
    }

    pub fn identity() -> Self {
        PiecewiseLinear {
            knots: vec![(0.0, 0.0), (1.0, 1.0)],
        }
    }

    pub fn knots(&self) -> &[(f64, f64)] {
        &self.knots
    }

    pub fn is_identity(&self) -> bool {
        self.knots.iter().all(|&(x, y)| x == y)
    }

    /// Abscissae of interior knots.
    pub fn breakpoints(&self) -> impl Iterator<Item = f64> + '_ {
        self.knots[1..self.knots.len() - 1].iter().map(|k| k.0)
    }

    /// Value at `t`, with `t` clamped to `[0, 1]`.
    pub fn eval(&self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        let i = self.knots.partition_point(|k| k.0 <= t);
        if i == 0 {
            return self.knots[0].1;
        }
        if i == self.knots.len() {
            return self.knots[i - 1].1;
        }
        let (x0, y0) = self.knots[i - 1];
        let (x1, y1) = self.knots[i];
        if t == x0 {
            return y0;
        }
        y0 + (y1 - y0) * ((t - x0) / (x1 - x0))
    }
}

/// Which coordinate of a two-point one-knot family saturates first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Orientation {
    /// `g_1(t) = min(t / k, 1)`, `g_2(t) = max((t - (1 - k)) / k, 0)`.
    First,
    /// The same with the roles of the two coordinates exchanged.
    Second,
}

/// `g = (g_1, ..., g_n)` applied coordinatewise to barycentric weights.
#[derive(Clone, Debug, PartialEq)]
pub struct Reparameterization {
    components: Vec<PiecewiseLinear>,
}

impl Reparameterization {
    pub fn new(components: Vec<PiecewiseLinear>) -> Self {
        Reparameterization { components }
    }

    pub fn identity(n: usize) -> Self {
        Reparameterization {
            components: vec![PiecewiseLinear::identity(); n],
        }
    }

    /// Two-coordinate family with a shared knot `k ∈ (0, 1)`.
    ///
    /// With `Orientation::First`, weights with `λ_1 ≥ k` put all mass on the
    /// first value; below `k` the mass moves linearly to the second value.
    /// `g_1(λ_1) + g_2(1 - λ_1) = 1` for every `λ_1`.
    pub fn one_knot(k: f64, orientation: Orientation) -> Result<Self, WitnessError> {
        if !(k > 0.0 && k < 1.0) {
            return Err(WitnessError::KnotOutOfRange(k));
        }
        let saturating = PiecewiseLinear {
            knots: vec![(0.0, 0.0), (k, 1.0), (1.0, 1.0)],
        };
        let delayed = PiecewiseLinear {
            knots: vec![(0.0, 0.0), (1.0 - k, 0.0), (1.0, 1.0)],
        };
        Ok(match orientation {
            Orientation::First => Reparameterization::new(vec![saturating, delayed]),
            Orientation::Second => Reparameterization::new(vec![delayed, saturating]),
        })
    }

    pub fn arity(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[PiecewiseLinear] {
        &self.components
    }

    pub fn is_identity(&self) -> bool {
        self.components.iter().all(PiecewiseLinear::is_identity)
    }

    /// `(g_1(λ_1), ..., g_n(λ_n))`.
    pub fn apply(&self, lambda: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .zip(lambda)
            .map(|(g, &l)| g.eval(l))
            .collect()
    }
}

impl Serialize for Reparameterization {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let knots: Vec<Vec<[f64; 2]>> = self
            .components
            .iter()
            .map(|g| g.knots.iter().map(|&(x, y)| [x, y]).collect())
            .collect();
        knots.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Reparameterization {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = Vec::<Vec<[f64; 2]>>::deserialize(deserializer)?;
        let components = raw
            .into_iter()
            .enumerate()
            .map(|(component, knots)| {
                PiecewiseLinear::new(knots.into_iter().map(|[x, y]| (x, y)).collect()).map_err(
                    |reason| serde::de::Error::custom(WitnessError::BadKnots { component, reason }),
                )
            })
            .collect::<Result<_, _>>()?;
        Ok(Reparameterization { components })
    }
}

/// Base points `x_i`, chosen values `y_i ∈ T(x_i)` and a reparameterization.
/// Membership of the values is checked by the verifiers, not here.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WnqWitness {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    g: Reparameterization,
}

impl WnqWitness {
    pub fn new(
        points: Vec<Vec<f64>>,
        values: Vec<f64>,
        g: Reparameterization,
    ) -> Result<Self, WitnessError> {
        let n = points.len();
        if n == 0 {
            return Err(WitnessError::Empty);
        }
        let dim = points[0].len();
        if let Some((index, p)) = points.iter().enumerate().find(|(_, p)| p.len() != dim) {
            return Err(WitnessError::PointDimension {
                index,
                expected: dim,
                found: p.len(),
            });
        }
        if values.len() != n {
            return Err(WitnessError::ArityMismatch {
                expected: n,
                found: values.len(),
            });
        }
        if g.arity() != n {
            return Err(WitnessError::ArityMismatch {
                expected: n,
                found: g.arity(),
            });
        }
        Ok(WnqWitness { points, values, g })
    }

    /// Witness with identity reparameterization, the form used for weakly
    /// convex graphs and for `*`-concave values.
    pub fn with_identity(points: Vec<Vec<f64>>, values: Vec<f64>) -> Result<Self, WitnessError> {
        let n = points.len();
        Self::new(points, values, Reparameterization::identity(n))
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn g(&self) -> &Reparameterization {
        &self.g
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `Σ g_i(λ_i) y_i`.
    pub fn combine(&self, lambda: &[f64]) -> f64 {
        convex_value(&self.g.apply(lambda), &self.values)
    }
}

/// `Σ w_i y_i` for weights in the simplex, evaluated as
/// `y_1 + Σ w_i (y_i - y_1)` and clamped to `[min y, max y]`. Equal values
/// come back exactly and round-off never leaves the convex hull of the
/// values.
pub fn convex_value(weights: &[f64], values: &[f64]) -> f64 {
    let Some(&first) = values.first() else {
        return 0.0;
    };
    let (lo, hi) = values
        .iter()
        .fold((first, first), |(lo, hi), &y| (lo.min(y), hi.max(y)));
    let y = first
        + weights
            .iter()
            .zip(values)
            .skip(1)
            .map(|(w, y)| w * (y - first))
            .sum::<f64>();
    y.clamp(lo, hi)
}

#[derive(Deserialize)]
struct WitnessRepr {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    #[serde(default)]
    g: Option<Reparameterization>,
}

impl<'de> Deserialize<'de> for WnqWitness {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let r = WitnessRepr::deserialize(deserializer)?;
        let n = r.points.len();
        WnqWitness::new(
            r.points,
            r.values,
            r.g.unwrap_or_else(|| Reparameterization::identity(n)),
        )
        .map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_knot_matches_closed_form() {
        let g = Reparameterization::one_knot(0.5, Orientation::First).unwrap();
        for k in 0..=1000 {
            let t = k as f64 / 1000.0;
            let w = g.apply(&[t, 1.0 - t]);
            assert_eq!(w[0], (2.0 * t).min(1.0));
            assert!((w[1] - (2.0 * (1.0 - t) - 1.0).max(0.0)).abs() < 1e-15);
            assert!((w[0] + w[1] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn one_knot_sums_to_one_for_any_knot() {
        for &k in &[0.1, 0.3, 0.77] {
            for o in [Orientation::First, Orientation::Second] {
                let g = Reparameterization::one_knot(k, o).unwrap();
                for j in 0..=200 {
                    let t = j as f64 / 200.0;
                    let s: f64 = g.apply(&[t, 1.0 - t]).iter().sum();
                    assert!((s - 1.0).abs() < 1e-12, "k={k} t={t} sum={s}");
                }
            }
        }
        assert!(Reparameterization::one_knot(1.0, Orientation::First).is_err());
    }

    #[test]
    fn convex_values_stay_in_the_hull() {
        for k in 0..=1000 {
            let t = k as f64 / 1000.0;
            assert_eq!(convex_value(&[t, 1.0 - t], &[0.45, 0.45]), 0.45);
            let y = convex_value(&[t, 1.0 - t], &[0.1, 0.7]);
            assert!((0.1..=0.7).contains(&y));
            assert!((y - (0.1 * t + 0.7 * (1.0 - t))).abs() < 1e-15);
        }
        assert_eq!(convex_value(&[0.2, 0.3, 0.5], &[1.0, 2.0, 3.0]), 2.3);
    }

    #[test]
    fn knot_validation() {
        assert!(PiecewiseLinear::new(vec![(0.0, 0.0), (0.5, 0.7), (1.0, 1.0)]).is_ok());
        assert!(PiecewiseLinear::new(vec![(0.0, 0.1), (1.0, 1.0)]).is_err());
        assert!(PiecewiseLinear::new(vec![(0.0, 0.0), (0.5, 0.8), (0.5, 0.9), (1.0, 1.0)]).is_err());
        assert!(PiecewiseLinear::new(vec![(0.0, 0.0), (0.5, 0.8), (0.7, 0.6), (1.0, 1.0)]).is_err());
    }

    #[test]
    fn witness_json() {
        let w: WnqWitness = serde_json::from_str(
            r#"{"points": [[1], [3]], "values": [0, 2],
                "g": [[[0, 0], [0.5, 1], [1, 1]], [[0, 0], [0.5, 0], [1, 1]]]}"#,
        )
        .unwrap();
        assert_eq!(
            w.g(),
            &Reparameterization::one_knot(0.5, Orientation::First).unwrap()
        );
        assert_eq!(w.combine(&[0.25, 0.75]), 1.0);
        let back: WnqWitness = serde_json::from_str(&serde_json::to_string(&w).unwrap()).unwrap();
        assert_eq!(back, w);

        let plain: WnqWitness =
            serde_json::from_str(r#"{"points": [[0], [4]], "values": [0.5, 0.5]}"#).unwrap();
        assert!(plain.g().is_identity());
        let bad = serde_json::from_str::<WnqWitness>(r#"{"points": [[0], [4]], "values": [0.5]}"#);
        assert!(bad.is_err());
    }
}
