// Negated float comparisons are deliberate: they reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod coarse;
pub mod config;
pub mod error;
pub mod fctn;
pub mod io;
pub mod linalg;
pub mod mask;
pub mod metrics;
pub mod nonlocal;
pub mod pipeline;
pub mod synthetic;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{DenseTensor, Matrix};

/// Outcome of an iterative completion solver.
#[derive(Clone, Debug)]
pub struct Completion {
    pub tensor: DenseTensor,
    pub iterations: usize,
    /// `relative_change(X^{t+1}, X^t)` after every sweep.
    pub relative_changes: Vec<f64>,
}
