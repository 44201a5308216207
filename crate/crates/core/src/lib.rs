//! Piecewise set-valued maps with exact endpoint semantics, falsifiers for
//! continuity and generalized concavity, barycentric continuous selections,
//! simplicial fixed points and equilibrium search for small abstract
//! economies.

// `!(a < b)` style guards are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod fixtures;
pub mod setvalue;
pub mod simplex;
pub mod grid;
pub mod properties;
pub mod witness;
pub mod selection;
pub mod fixedpoint;
pub mod economy;
pub mod doc;
pub mod cli;
