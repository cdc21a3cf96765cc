use std::path::PathBuf;

use thiserror::Error;

use crate::linsolve::SolveReport;

/// Errors raised anywhere in the solver pipeline.
#[derive(Debug, Error)]
pub enum Error {
    /// Invalid user input: geometry extents, spacings, config values.
    #[error("configuration error: {0}")]
    Config(String),

    /// Surface file could not be read or is not a valid closed surface.
    #[error("surface error: {0}")]
    Surface(String),

    /// A Lagrangian point whose kernel support is not fully covered by active nodes.
    #[error("Lagrangian point {point} has kernel support outside the active region ({reason})")]
    IncompleteSupport { point: usize, reason: String },

    /// Dense or sparse system that is singular to working precision.
    #[error("singular system: {0}")]
    Singular(String),

    /// Iterative solver failed to reach its tolerance.
    #[error("{solver} did not converge: {report}")]
    NotConverged { solver: &'static str, report: SolveReport },

    /// Krylov breakdown (e.g. indefinite matrix handed to CG).
    #[error("{solver} breakdown: {detail}")]
    Breakdown { solver: &'static str, detail: String },

    /// Length or shape mismatch between operands.
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error in {path}: {detail}")]
    Parse { path: PathBuf, detail: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 1 for configuration problems, 2 for numerical failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Surface(_) | Error::Io { .. } | Error::Parse { .. } => 1,
            Error::IncompleteSupport { .. } => 1,
            Error::Singular(_) | Error::NotConverged { .. } | Error::Breakdown { .. } | Error::Shape(_) => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
