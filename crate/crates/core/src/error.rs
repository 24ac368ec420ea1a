//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("matrix is not symmetric: max asymmetry {asymmetry:e} exceeds {tolerance:e}")]
    NotSymmetric { asymmetry: f64, tolerance: f64 },

    #[error("non-finite entry at ({row}, {col})")]
    NonFiniteEntry { row: usize, col: usize },

    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:e}")]
    NotPsd { min_eigenvalue: f64 },

    #[error("projector is not spectral for the matrix: commutation defect {defect:e}")]
    NotSpectral { defect: f64 },

    #[error("projector rank mismatch: {left} vs {right}")]
    RankMismatch { left: usize, right: usize },

    #[error("index {value} out of range [{min}, {max}]")]
    OutOfRange {
        value: usize,
        min: usize,
        max: usize,
    },

    #[error("spectral gap at rank {d} is zero; bound undefined")]
    ZeroGap { d: usize },

    #[error("infeasible construction: {constraint}")]
    Infeasible { constraint: String },

    #[error("point outside working ball: |theta - theta*| = {norm:e} > radius {radius:e}")]
    Extrapolation { norm: f64, radius: f64 },

    #[error("integration fault: non-finite state after t = {last_valid_time:e}")]
    IntegrationFault { last_valid_time: f64 },

    #[error("first RK4 step error {estimate:e} exceeds {limit:e}; reduce the step size")]
    StepTooLarge { estimate: f64, limit: f64 },

    #[error("insufficient data: need {needed}, got {got} ({context})")]
    InsufficientData {
        needed: usize,
        got: usize,
        context: &'static str,
    },

    #[error("series contains non-positive values; log-log fit undefined")]
    NonPositiveSeries,

    #[error("skill distribution invalid: {reason}")]
    InvalidDistribution { reason: String },

    #[error(
        "zero-probability outcome {outcome} in context {context}; log-optimal policy undefined"
    )]
    UnsupportedOutcome { context: usize, outcome: usize },

    #[error("projection seed mismatch: update sketched with seed {got}, matrix built with seed {expected}")]
    SeedMismatch { expected: u64, got: u64 },

    #[error("subspace rank unknown: supply r or use a synthesized sample set")]
    UnknownRank,

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
