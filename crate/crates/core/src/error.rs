use std::path::PathBuf;

/// Errors raised across the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A caller-supplied argument violates a precondition.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// A numerical invariant was violated inside a computation.
    #[error("internal numerical error: {0}")]
    Internal(String),

    /// The problem exceeds the dense-memory bounds of this implementation.
    #[error("resource limit: {0}")]
    Resource(String),

    /// The steady state (or another null space) is not unique.
    #[error("degenerate zero mode: smallest singular value of the bordered system is {sigma:.3e}")]
    Degenerate { sigma: f64 },

    /// Duplicate points make nearest-neighbour ratios undefined.
    #[error("degenerate data: {} point(s) have a zero nearest-neighbour distance (first: {:?})", .indices.len(), &.indices[..(.indices.len().min(8))])]
    DegenerateData { indices: Vec<usize> },

    /// An iterative method did not reach its tolerance.
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    Convergence { iterations: usize, residual: f64 },

    /// A Jacobian or normal matrix is too badly conditioned to invert.
    #[error("ill-posed system: condition number {condition:.3e}")]
    IllPosed { condition: f64 },

    /// Training produced a non-finite loss.
    #[error("training diverged at step {step} (loss {loss})")]
    Diverged { step: usize, loss: f64 },

    /// Too few rows survived the per-row reconstruction.
    #[error("reconstruction failed: {0}")]
    Reconstruction(String),

    /// Malformed input file.
    #[error("{}:{line}{}: {message}", .path.display(), .column.map(|c| format!(":{c}")).unwrap_or_default())]
    Parse {
        path: PathBuf,
        line: usize,
        column: Option<usize>,
        message: String,
    },

    #[error("{}: {source}", .path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Linalg(#[from] ndarray_linalg::error::LinalgError),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures that stem from numerics rather than from usage.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Internal(_)
                | Error::Degenerate { .. }
                | Error::DegenerateData { .. }
                | Error::Convergence { .. }
                | Error::IllPosed { .. }
                | Error::Diverged { .. }
                | Error::Reconstruction(_)
                | Error::Linalg(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
