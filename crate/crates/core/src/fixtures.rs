//! Small built-in correspondences and economies used by the demo, the
//! documentation and the tests.

use crate::economy::{AbstractEconomy, Agent};
use crate::setvalue::{Interval, IntervalUnion, PiecewiseCorrespondence};
use crate::simplex::Simplex;

fn iv(lo: f64, lo_open: bool, hi: f64, hi_open: bool) -> Interval {
    Interval::new(lo, lo_open, hi, hi_open)
}

/// The three-case map on `[0, 4]`: `[0, 2]` on `[0, 2)`, `[-2, 0]` at `2`,
/// `(0, 2]` on `(2, 4]`. Neither usc nor lsc, without weakly convex graph,
/// yet weakly naturally quasi-concave.
pub fn ex1() -> PiecewiseCorrespondence {
    PiecewiseCorrespondence::on_line(
        Interval::closed(0.0, 4.0),
        Interval::closed(-2.0, 2.0),
        vec![
            (iv(0.0, false, 2.0, true), IntervalUnion::closed(0.0, 2.0)),
            (Interval::point(2.0), IntervalUnion::closed(-2.0, 0.0)),
            (iv(2.0, true, 4.0, false), iv(0.0, true, 2.0, false).into()),
        ],
    )
    .expect("ex1 cells partition [0, 4]")
}

/// `T(x) = [lo, hi]` on `[a, b]`.
pub fn constant(a: f64, b: f64, lo: f64, hi: f64) -> PiecewiseCorrespondence {
    PiecewiseCorrespondence::on_line(
        Interval::closed(a, b),
        Interval::closed(lo, hi),
        vec![(Interval::closed(a, b), IntervalUnion::closed(lo, hi))],
    )
    .expect("single closed cell")
}

fn econ1_agent(p: PiecewiseCorrespondence) -> Agent {
    Agent {
        name: "agent".into(),
        strategies: (0.0, 1.0),
        a: constant(0.0, 1.0, 0.0, 0.5),
        p,
        b: constant(0.0, 1.0, 0.0, 0.6),
        k: Some(Simplex::new(vec![vec![0.0], vec![0.4]]).expect("segment")),
        s: None,
        witness: None,
    }
}

/// One agent on `X = [0, 1]` with `A ≡ [0, 0.5]`, `B ≡ [0, 0.6]` and
/// `P = [0.45, 0.5]` on `[0, 0.4]`, empty on `(0.4, 1]`; `K = [0, 0.4]`.
/// `W = [0, 0.4]` and the patched map has fixed set `(0.4, 0.6]`.
pub fn econ1() -> AbstractEconomy {
    let p = PiecewiseCorrespondence::on_line(
        Interval::closed(0.0, 1.0),
        Interval::closed(0.0, 1.0),
        vec![
            (Interval::closed(0.0, 0.4), IntervalUnion::closed(0.45, 0.5)),
            (iv(0.4, true, 1.0, false), IntervalUnion::empty()),
        ],
    )
    .expect("two cells partition [0, 1]");
    AbstractEconomy::new(vec![econ1_agent(p)]).expect("valid economy")
}

/// `econ1` with `P ≡ [0.45, 0.5]`, so that `W = X`.
pub fn econ1_full() -> AbstractEconomy {
    AbstractEconomy::new(vec![econ1_agent(constant(0.0, 1.0, 0.45, 0.5))]).expect("valid economy")
}
