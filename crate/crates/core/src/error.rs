//! Error type shared by all modules in this crate.

use alloc::string::String;

/// Crate-wide result alias.
pub type Result<T> = core::result::Result<T, Error>;

/// Errors produced by dataset validation, graph construction, training and
/// evaluation. Variants carry enough context to name the offending column,
/// row, node or parameter in user-facing messages.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A table is missing a required column.
    #[error("schema error: missing column `{column}`")]
    Schema { column: String },

    /// A cell could not be parsed; `row` is the 1-based data row index.
    #[error("parse error at row {row}: {message}")]
    Parse { row: usize, message: String },

    /// Cross-field or cross-record validation failed.
    #[error("validation error: {0}")]
    Validation(String),

    /// An infeasible or out-of-range configuration value.
    #[error("config error: {0}")]
    Config(String),

    /// Tensor/matrix dimensions do not line up.
    #[error("shape error: {0}")]
    Shape(String),

    /// SMOTE preconditions violated (e.g. no same-class neighbor exists).
    #[error("sampling error: {0}")]
    Sampling(String),

    /// Metric computation over a degenerate input (empty or single-class).
    #[error("evaluation error: {0}")]
    Evaluation(String),

    /// Diagnostic analysis over a degenerate input.
    #[error("analysis error: {0}")]
    Analysis(String),

    /// Training could not proceed or diverged.
    #[error("training error: {0}")]
    Training(String),

    /// A non-finite activation appeared during message passing.
    #[error("numeric error at hop {hop}: {message}")]
    Numeric { hop: usize, message: String },

    /// The optimizer saw a non-finite gradient for the named parameter.
    #[error("optimizer error: non-finite gradient for parameter `{param}`")]
    Optimizer { param: String },

    /// Gradient checking could not complete.
    #[error("gradient check error: {0}")]
    Check(String),
}
