use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unknown environment `{0}`")]
    UnknownEnvironment(String),

    #[error("parameter `{name}` out of range: {value} ({expected})")]
    OutOfRange {
        name: &'static str,
        value: f64,
        expected: &'static str,
    },

    #[error("cannot step from a terminal state")]
    TerminalState,

    #[error("action {action} out of range for {n_actions} actions")]
    InvalidAction { action: usize, n_actions: usize },

    #[error("option {option} out of range for {n_options} options")]
    InvalidOption { option: usize, n_options: usize },

    #[error("transfer mutation already applied")]
    TransferAlreadyApplied,

    #[error("operation requires a finite (tabular) environment")]
    NotTabular,

    #[error("non-finite value encountered in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("importance-sampling denominator {0:e} below 1e-12")]
    DegenerateRatio(f64),

    #[error("assumption violated: {0}")]
    AssumptionViolated(String),

    #[error("augmented chain is reducible ({reachable} of {total} pairs mutually reachable)")]
    ReducibleChain { reachable: usize, total: usize },

    #[error("power iteration did not converge within {iterations} iterations (residual {residual:e})")]
    NotConverged { iterations: usize, residual: f64 },

    #[error("feature matrix is rank deficient (rank {rank} < {cols})")]
    RankDeficient { rank: usize, cols: usize },

    #[error("collected {collected} states, fewer than the {requested} requested")]
    InsufficientSamples { collected: usize, requested: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("serialization: {0}")]
    Serialization(String),
}
