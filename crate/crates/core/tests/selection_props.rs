mod common;

use corrkit::grid::GridSpec;
use corrkit::properties::verify_wnq_witness;
use corrkit::selection::{
    build_selection, build_selection_star, unchecked_selection_star, validate_selection,
    wnq_witness_from_constant_core, wnq_witness_from_convex_graph, Selection, SelectionError,
};
use corrkit::setvalue::{Correspondence, PiecewiseCorrespondence};
use corrkit::simplex::Simplex;
use corrkit::witness::{Orientation, Reparameterization, WnqWitness};
use proptest::prelude::*;

const ACCEPTANCE: usize = 1000;

fn segment(a: f64, b: f64) -> Simplex {
    Simplex::new(vec![vec![a], vec![b]]).unwrap()
}

fn ex1_selection() -> (PiecewiseCorrespondence, Selection) {
    let t = corrkit::fixtures::ex1();
    let w = WnqWitness::new(
        vec![vec![0.0], vec![4.0]],
        vec![0.0, 2.0],
        Reparameterization::one_knot(0.5, Orientation::First).unwrap(),
    )
    .unwrap();
    let f = build_selection(&segment(0.0, 4.0), &t, &w, &GridSpec::default()).unwrap();
    (t, f)
}

/// Accepted selections on the random class: constant-core and convex-graph
/// witnesses on a sub-segment, when they exist.
fn random_selections(seed: u64) -> Vec<(PiecewiseCorrespondence, Selection)> {
    let t = common::random_piecewise(seed, 0.0);
    let k = segment(0.3, 0.55);
    let grid = GridSpec::with_resolution(ACCEPTANCE);
    let mut out = Vec::new();
    if let Ok(w) = wnq_witness_from_constant_core(&t, &k) {
        out.push(build_selection(&k, &t, &w, &grid).expect("core witness verifies"));
    }
    if let Ok(w) = wnq_witness_from_convex_graph(&t, &k, &grid) {
        out.push(build_selection(&k, &t, &w, &grid).expect("convex-graph witness verifies"));
    }
    out.into_iter().map(|f| (t.clone(), f)).collect()
}

fn check_selection(t: &PiecewiseCorrespondence, f: &Selection) -> Result<(), TestCaseError> {
    let r = validate_selection(f, t, 10 * ACCEPTANCE, 1.0).unwrap();
    prop_assert_eq!(r.violation_count, 0, "{:?}", r.violations.first());
    for (v, y) in f.simplex().vertices().iter().zip(f.values()) {
        prop_assert!((f.eval(v).unwrap() - y).abs() <= 1e-12);
    }
    let coarse = validate_selection(f, t, ACCEPTANCE, 1.0).unwrap();
    let fine = validate_selection(f, t, 2 * ACCEPTANCE - 1, 1.0).unwrap();
    prop_assert!((coarse.spacing / fine.spacing - 2.0).abs() < 1e-9);
    if coarse.modulus > 1e-12 {
        let ratio = coarse.modulus / fine.modulus;
        prop_assert!((2.0 / 3.0..=6.0).contains(&ratio), "ratio {}", ratio);
    } else {
        prop_assert!(fine.modulus <= 1e-12);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn accepted_selections_are_valid(seed in any::<u64>()) {
        for (t, f) in random_selections(seed) {
            check_selection(&t, &f)?;
        }
    }

    #[test]
    fn constructed_witnesses_verify(seed in any::<u64>()) {
        let t = common::random_piecewise(seed, 0.0);
        let k = segment(0.1, 0.9);
        let grid = GridSpec::with_resolution(ACCEPTANCE);
        if let Ok(w) = wnq_witness_from_constant_core(&t, &k) {
            prop_assert!(verify_wnq_witness(&t, &w, &grid).unwrap().is_pass());
        }
        if let Ok(w) = wnq_witness_from_convex_graph(&t, &k, &grid) {
            prop_assert!(verify_wnq_witness(&t, &w, &grid).unwrap().is_pass());
        }
    }

    #[test]
    fn star_selections_are_affine(
        dim in 1usize..=3,
        seed in any::<u64>(),
        l in 0.0f64..=1.0,
    ) {
        use rand::Rng;
        let mut r = common::rng(seed);
        let mut verts = vec![vec![0.0; dim]];
        for i in 0..dim {
            let mut v = vec![0.0; dim];
            v[i] = r.random_range(0.5..2.0);
            verts.push(v);
        }
        let k = Simplex::new(verts).unwrap();
        let ys: Vec<f64> = (0..=dim).map(|_| r.random_range(-3.0..3.0)).collect();
        let f = unchecked_selection_star(&k, &ys).unwrap();
        let w = |r: &mut rand_chacha::ChaCha8Rng| {
            let raw: Vec<f64> = (0..=dim).map(|_| r.random_range(0.01..1.0)).collect();
            let s: f64 = raw.iter().sum();
            raw.into_iter().map(|v| v / s).collect::<Vec<_>>()
        };
        let x1 = k.combine(&w(&mut r));
        let x2 = k.combine(&w(&mut r));
        let mid: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| l * a + (1.0 - l) * b).collect();
        let lhs = f.eval(&mid).unwrap();
        let rhs = l * f.eval(&x1).unwrap() + (1.0 - l) * f.eval(&x2).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12, "{} vs {}", lhs, rhs);
    }
}

#[test]
fn ex1_selection_is_valid() {
    let (t, f) = ex1_selection();
    check_selection(&t, &f).unwrap();
    // oracle: the selection is max(x - 2, 0) on [0, 4]
    for k in 0..=4000 {
        let x = k as f64 / 1000.0;
        let want = (x - 2.0).max(0.0);
        assert!((f.eval(&[x]).unwrap() - want).abs() <= 1e-12, "x={x}");
        assert!(t.value_at(&[x]).unwrap().contains(f.eval(&[x]).unwrap()));
    }
}

#[test]
fn ex1_witness_constructors_fail() {
    let t = corrkit::fixtures::ex1();
    let k = segment(0.0, 4.0);
    assert_eq!(
        wnq_witness_from_constant_core(&t, &k),
        Err(SelectionError::EmptyCore)
    );
    assert!(matches!(
        wnq_witness_from_convex_graph(&t, &k, &GridSpec::default()),
        Err(SelectionError::NoWcgTuple(_))
    ));
}

#[test]
fn star_selection_rejected_on_ex1() {
    let t = corrkit::fixtures::ex1();
    let r = build_selection_star(&segment(0.0, 4.0), &t, &[0.0, 2.0], &GridSpec::default());
    assert!(matches!(r, Err(SelectionError::WitnessRejected(_))));
}

#[test]
fn random_selections_are_not_vacuous() {
    let n: usize = (0..32).map(|s| random_selections(s).len()).sum();
    assert!(n >= 8, "only {n} selections built");
}
