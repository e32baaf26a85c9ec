use std::path::PathBuf;

use thiserror::Error;

/// Errors shared across the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid mismatch: one field retains |k| <= {left}, the other |k| <= {right}")]
    GridMismatch { left: usize, right: usize },

    #[error(
        "input has nonzero mean {mean:.6e}; the scheme is defined for mean-free data — \
         split the mean off with `galilean_split` and restore it with `galilean_restore`"
    )]
    NonzeroMean { mean: f64 },

    #[error("solution diverged at step {step}: non-finite coefficient encountered")]
    Diverged { step: usize },

    #[error(
        "cost guard: bandwidth K={k} exceeds limit {limit} for {what}; \
         use the `_unguarded` variant to override"
    )]
    CostGuard { k: usize, limit: usize, what: &'static str },

    #[error("order fit needs at least 3 rows above the saturation floor; {survivors} survived")]
    InsufficientRows { survivors: usize },

    #[error("i/o failure on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed snapshot {path}: {reason}")]
    MalformedSnapshot { path: PathBuf, reason: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
