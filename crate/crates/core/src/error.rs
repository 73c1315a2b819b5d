use thiserror::Error;

/// Errors produced by the simulator and the chain analysis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("invalid mutation operator: {0}")]
    InvalidMutation(String),

    #[error("invalid GA configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid chain specification: {0}")]
    InvalidChain(String),

    #[error("transition probability p[{from},{to}] = {value} is invalid")]
    InvalidTransition { from: usize, to: usize, value: f64 },

    #[error("row {row} of the transition table sums to {sum}")]
    RowSum { row: usize, sum: f64 },

    #[error("zero pivot at row {row} during tridiagonal elimination")]
    ZeroPivot { row: usize },

    #[error("division by zero in the xi recursion at row {row}")]
    DegenerateRecursion { row: usize },

    #[error("leading constant undefined: p1 and p2 are both zero")]
    ZeroDenominator,

    #[error("level j = {j} must be below n = {n}")]
    LevelOutOfRange { j: usize, n: usize },

    #[error("invalid experiment configuration: {0}")]
    InvalidExperiment(String),

    #[error("chain did not absorb within {steps} steps")]
    NonTermination { steps: u64 },
}

pub type Result<T> = std::result::Result<T, Error>;
