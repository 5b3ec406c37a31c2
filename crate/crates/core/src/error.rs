use thiserror::Error;

use crate::fspec::AssumptionReport;
use crate::solver::PartialSolution;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid quotient parameters: {0}")]
    InvalidParams(String),

    #[error("spectrum is outside the Garding cone (node {node:?}, margin {margin:e})")]
    ConeViolation { node: Option<usize>, margin: f64 },

    #[error("index {index} out of range for length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("sampling exhausted: {accepted} of {requested} samples after {draws} draws")]
    SamplingExhausted {
        requested: usize,
        accepted: usize,
        draws: usize,
    },

    #[error("degenerate jet: {0}")]
    DegenerateJet(String),

    #[error("prescribed value must be positive, got {0}")]
    NonpositiveF(f64),

    #[error("grid too coarse: {0}")]
    TooCoarse(String),

    #[error("field has {got} values, grid has {expected} nodes")]
    SizeMismatch { expected: usize, got: usize },

    #[error("parse error at offset {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("unknown identifier `{name}` at offset {pos}")]
    UnknownIdentifier { name: String, pos: usize },

    #[error("evaluation failed in `{expr}`: {msg}")]
    Eval { expr: String, msg: String },

    #[error("annulus ({r1}, {r2}) must satisfy 0 < r1 < 1 < r2")]
    BadAnnulus { r1: f64, r2: f64 },

    #[error("assumptions violated: {0}")]
    ValidationFailed(Box<AssumptionReport>),

    #[error("Newton did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("singular Jacobian at pivot {0}")]
    SingularJacobian(usize),

    #[error("continuation stalled at t = {}", .0.t)]
    ContinuationStalled(Box<PartialSolution>),

    #[error("a priori bound violated at t = {t}: {detail}")]
    BoundsViolation { t: f64, detail: String },
}
