//! Set-valued maps `T: X -> 2^Y` over box domains with one-dimensional,
//! interval-union values.

mod correspondence;
mod interval;
mod rect;

pub use correspondence::{
    Correspondence, FnCorrespondence, Piece, PiecewiseCorrespondence, Region,
    DEFAULT_DELTA_SCHEDULE,
};
pub use interval::{Interval, IntervalUnion};
pub use rect::{bounding_rect, union_equals, Rect};

pub(crate) use correspondence::check_point;
pub(crate) use rect::AtomGrid;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SetValueError {
    #[error("cannot parse interval {0:?}; expected bracket notation like \"[0, 2)\"")]
    IntervalSyntax(String),
    #[error("point {point:?} is outside the domain {domain}")]
    OutsideDomain { point: Vec<f64>, domain: String },
    #[error("point has {found} coordinates, domain has {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("domains differ: {left} vs {right}")]
    DomainMismatch { left: String, right: String },
    #[error("the domain is empty")]
    EmptyDomain,
    #[error("cell {index} ({cell}) is not inside the domain")]
    CellOutsideDomain { index: usize, cell: String },
    #[error("value {value} of cell {index} is not inside the codomain {codomain}")]
    ValueOutsideCodomain {
        index: usize,
        value: String,
        codomain: String,
    },
    #[error("cells do not partition the domain: {count} cells contain {point:?}")]
    NotAPartition { point: Vec<f64>, count: usize },
    #[error("partition check needs {0} atoms, above the supported limit")]
    TooManyAtoms(u128),
    #[error("inflation radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("schedule must be a nonempty strictly decreasing list of positive reals")]
    InvalidSchedule,
}
