//! Dense reverse-mode differentiation: just the primitives the model's
//! forward pass needs, plus a central-difference gradient checker.

mod check;
mod graph;
mod matrix;

pub use check::{gradient_check, relative_error, GradCheckReport, GroupError, ParameterSet};
pub use graph::{sigmoid, Graph, Op, Var, LOG_CLAMP};
pub use matrix::Matrix;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutodiffError {
    #[error("{op}: incompatible shapes {}x{} and {}x{}", lhs.0, lhs.1, rhs.0, rhs.1)]
    Shape {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("{rows}x{cols} matrix needs {} entries, got {len}", rows * cols)]
    EntryCount {
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("{0}: empty vector")]
    EmptyVector(&'static str),
    #[error("{op}: expected a row or column vector, got {}x{}", shape.0, shape.1)]
    NotAVector {
        op: &'static str,
        shape: (usize, usize),
    },
    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("backward needs a 1x1 root, got {}x{}", shape.0, shape.1)]
    NonScalarRoot { shape: (usize, usize) },
    #[error("loss evaluated to a non-finite value ({0})")]
    NonFiniteLoss(f64),
    #[error("finite-difference step must be positive and finite, got {0}")]
    InvalidEpsilon(f64),
    #[error("analytic gradient count {analytic} does not match parameter group count {groups}")]
    GradientCount { analytic: usize, groups: usize },
}

impl AutodiffError {
    pub(crate) fn shape(op: &'static str, lhs: (usize, usize), rhs: (usize, usize)) -> Self {
        Self::Shape { op, lhs, rhs }
    }
}
