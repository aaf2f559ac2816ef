//! Finite-alphabet probability arithmetic.
//!
//! Everything the solvers evaluate is built from three containers:
//! [`Pmf`] (a distribution over one alphabet), [`CondPmf`] (a kernel from a
//! product of conditioning alphabets to an output alphabet) and [`JointPmf`]
//! (a dense table over an ordered product of alphabets). Information
//! quantities are in bits.

mod info;
mod joint;
mod pmf;

pub use info::{
    binary_convolve, binary_entropy, conditional_mutual_information, entropy, entropy_of_slice,
    mutual_information,
};
pub use joint::{assemble_joint, Factor, JointPmf};
pub use pmf::{Alphabet, CondPmf, Pmf};

/// Tolerance on the total mass of a distribution before it is renormalized.
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Probabilities at or below this value are treated as exact zeros in logs.
pub const ZERO_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProbError {
    #[error("alphabet must have at least one symbol")]
    EmptyAlphabet,
    #[error("alphabet has {size} symbols but {labels} labels")]
    LabelCount { size: usize, labels: usize },
    #[error("duplicate alphabet label `{0}`")]
    DuplicateLabel(String),
    #[error("probability at index {index} is {value}")]
    InvalidProbability { index: usize, value: f64 },
    #[error("probabilities sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },
    #[error("{name} = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("factor {factor} is conditioned on axis {parent}, which is not defined before it")]
    CyclicWiring { factor: usize, parent: usize },
    #[error("axis {axis} does not exist in a {dims}-axis joint")]
    AxisOutOfRange { axis: usize, dims: usize },
    #[error("axis sets overlap on axis {0}")]
    OverlappingAxes(usize),
    #[error("axis set must not be empty")]
    EmptyAxisSet,
}
