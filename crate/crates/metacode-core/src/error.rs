//! Error types shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong while loading data, querying the oracle,
/// training the embedder, or running the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// The exploration budget has been spent; no further queries are allowed.
    #[error("query budget of {budget} exhausted")]
    BudgetExhausted {
        /// The total budget the oracle was constructed with.
        budget: usize,
    },

    /// A node was queried a second time. Queries are idempotent in
    /// information terms, so a repeat is always a caller bug.
    #[error("node {0} was already queried")]
    DuplicateQuery(usize),

    /// A node id outside `0..n_nodes`.
    #[error("unknown node id {id} (graph has {n_nodes} nodes)")]
    UnknownNode {
        /// The offending id.
        id: usize,
        /// Number of nodes in the graph it was used against.
        n_nodes: usize,
    },

    /// A malformed line in a dataset file.
    #[error("{}:{line}: {msg}", file.display())]
    Parse {
        /// File the error occurred in.
        file: PathBuf,
        /// 1-based line number.
        line: usize,
        /// Human-readable description of the problem.
        msg: String,
    },

    /// Feature rows of differing width within one file, or between files
    /// that must agree.
    #[error("{}:{line}: expected {expected} feature entries, found {found}", file.display())]
    InconsistentDims {
        /// File the error occurred in.
        file: PathBuf,
        /// 1-based line number.
        line: usize,
        /// Width established earlier.
        expected: usize,
        /// Width actually found.
        found: usize,
    },

    /// A required dataset file does not exist.
    #[error("missing file: {}", .0.display())]
    MissingFile(PathBuf),

    /// Input too small or empty for the requested operation.
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// Matrix dimensions do not line up.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// A selection rule was invoked with every node already queried.
    #[error("no unqueried candidates remain")]
    NoCandidates,

    /// Training produced a NaN or infinite loss; the run is aborted rather
    /// than silently continued with poisoned parameters.
    #[error("training loss became non-finite at epoch {epoch}")]
    NonFiniteLoss {
        /// 0-based epoch at which the loss left the finite range.
        epoch: usize,
    },

    /// A configuration value outside its documented range.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Underlying I/O failure.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// JSON (de)serialization failure.
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
