mod common;

use corrkit::fixedpoint::{
    approx_fixed_point_setvalued, brouwer_fixed_point, composed_fixed_point, segment,
    BrouwerOptions, ComposeWitness, FixedPointResult, SetValuedOptions, TransferMap,
};
use corrkit::grid::GridSpec;
use corrkit::setvalue::{Correspondence, Interval};
use corrkit::simplex::{distance, Simplex};
use corrkit::witness::{Orientation, Reparameterization, WnqWitness};
use proptest::prelude::*;
use rand::Rng;

/// A simplex of dimension `dim` with random vertex offsets and a random
/// affine self-map `λ -> (1-t) P λ + t μ` (P a cyclic shift), whose unique
/// fixed point is known in closed form.
struct Case {
    k: Simplex,
    shift: usize,
    t: f64,
    mu: Vec<f64>,
}

impl Case {
    fn new(dim: usize, seed: u64) -> Self {
        let mut r = common::rng(seed);
        let mut verts = vec![vec![0.0; dim]];
        for i in 0..dim {
            let mut v: Vec<f64> = (0..dim).map(|_| r.random_range(-0.2..0.2)).collect();
            v[i] += 1.0;
            verts.push(v);
        }
        let raw: Vec<f64> = (0..=dim).map(|_| r.random_range(0.05..1.0)).collect();
        let s: f64 = raw.iter().sum();
        Case {
            k: Simplex::new(verts).unwrap(),
            shift: r.random_range(0..=dim),
            t: r.random_range(0.2..0.9),
            mu: raw.into_iter().map(|v| v / s).collect(),
        }
    }

    fn map_weights(&self, l: &[f64]) -> Vec<f64> {
        let n = l.len();
        (0..n)
            .map(|i| (1.0 - self.t) * l[(i + self.shift) % n] + self.t * self.mu[i])
            .collect()
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let l = self.k.barycentric(x).unwrap();
        self.k.combine(&self.map_weights(l.weights()))
    }

    /// Fixed point by iterating the weight map, an independent contraction.
    fn oracle(&self) -> Vec<f64> {
        let n = self.mu.len();
        let mut l = vec![1.0 / n as f64; n];
        for _ in 0..2000 {
            l = self.map_weights(&l);
        }
        self.k.combine(&l)
    }

    fn solve(&self) -> FixedPointResult {
        let opts = BrouwerOptions {
            tol: 1e-8,
            ..BrouwerOptions::default()
        };
        brouwer_fixed_point(&self.k, &|x: &[f64]| self.apply(x), &opts).unwrap()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn contractions_have_odd_parity_and_known_fixed_point(dim in 1usize..=3, seed in any::<u64>()) {
        let c = Case::new(dim, seed);
        let r = c.solve();
        prop_assert!(!r.parity.is_empty());
        for p in &r.parity {
            prop_assert!(p.is_odd(), "depth {}: {} completely labelled", p.depth, p.completely_labelled);
        }
        prop_assert!(distance(&c.apply(&r.point), &r.point) <= 1e-8);
        // the map contracts by (1 - t) in weights, so the error is at most tol / t up to conditioning
        prop_assert!(distance(&r.point, &c.oracle()) <= 1e-6, "{:?} vs {:?}", r.point, c.oracle());
    }

    #[test]
    fn residual_trace_is_monotone(dim in 1usize..=3, seed in any::<u64>()) {
        let r = Case::new(dim, seed).solve();
        for w in r.trace.windows(2) {
            prop_assert!(w[1].residual <= w[0].residual);
            prop_assert!(w[1].iteration >= w[0].iteration);
        }
        prop_assert_eq!(r.trace.last().map(|e| e.residual), Some(r.residual));
    }

    #[test]
    fn solver_is_deterministic(dim in 1usize..=3, seed in any::<u64>()) {
        let c = Case::new(dim, seed);
        prop_assert_eq!(c.solve(), c.solve());
    }

    #[test]
    fn composed_points_are_post_verified(a in -1.0f64..1.0, b in 0.0f64..4.0, tol_exp in 6i32..=10) {
        // s(y) = a y + b must send f([0,4]) ⊂ [0,2] into [0,4]
        prop_assume!((0.0..=4.0).contains(&(2.0 * a + b)));
        let t = corrkit::fixtures::ex1();
        let k = segment(0.0, 4.0).unwrap();
        let w = WnqWitness::new(
            vec![vec![0.0], vec![4.0]],
            vec![0.0, 2.0],
            Reparameterization::one_knot(0.5, Orientation::First).unwrap(),
        )
        .unwrap();
        let tol = 10f64.powi(-tol_exp);
        let opts = BrouwerOptions { tol, ..BrouwerOptions::default() };
        let s = TransferMap::affine_1d(a, b);
        let out = composed_fixed_point(&k, &t, &ComposeWitness::Wnq(w), &s, &GridSpec::default(), &opts).unwrap();
        let x = out.result.point[0];
        prop_assert!((a * out.selection_value + b - x).abs() <= tol);
        // independent check: distance from x to s(cl T(x)) computed here
        let image: Vec<Interval> = t
            .value_at(&[x])
            .unwrap()
            .closure()
            .parts()
            .iter()
            .map(|p| {
                let (u, v) = (a * p.lo + b, a * p.hi + b);
                Interval::closed(u.min(v), u.max(v))
            })
            .collect();
        let d = image.iter().map(|iv| iv.distance(x)).fold(f64::INFINITY, f64::min);
        prop_assert!(d <= 2.0 * tol, "distance {}", d);
        prop_assert!(out.post_distance <= 2.0 * tol);
    }
}

#[test]
fn nonlinear_maps_have_odd_parity() {
    let tri = Simplex::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
    let h = |x: &[f64]| {
        let (u, v) = (x[0], x[1]);
        let a = 0.5 * (u * u + 0.3);
        let b = 0.4 * (v + u * v).min(1.0);
        let s = (a + b).max(1.0);
        vec![a / s, b / s]
    };
    let r = brouwer_fixed_point(&tri, &h, &BrouwerOptions::default()).unwrap();
    assert!(r.parity.iter().all(|p| p.is_odd()));
    assert!(distance(&h(&r.point), &r.point) <= 1e-9);
}

#[test]
fn setvalued_search_is_deterministic_and_monotone() {
    let econ = corrkit::fixtures::econ1();
    let b = &econ.agents()[0].b;
    let opts = SetValuedOptions::default();
    let first = approx_fixed_point_setvalued(&[b as &dyn Correspondence], &opts).unwrap();
    let again = approx_fixed_point_setvalued(&[b as &dyn Correspondence], &opts).unwrap();
    assert_eq!(first, again);
    for w in first.trace.windows(2) {
        assert!(w[1].residual <= w[0].residual);
    }
}
