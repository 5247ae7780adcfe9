//! Error type shared across the solver.

use num_complex::Complex64;

/// Errors produced by the solver library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A species has nonpositive number density in some cell, so moments
    /// (and everything downstream of them) are undefined there.
    #[error("degenerate moments: species {species} has n = {n:e} in cell {cell}")]
    DegenerateMoments {
        species: usize,
        cell: usize,
        n: f64,
    },

    /// An internal guarantee was violated; indicates a bug, not bad input.
    #[error("internal error: {0}")]
    Internal(String),

    /// The time integration produced a non-finite value.
    #[error("solution blew up at t = {t:e} during outer step {step}: {context}")]
    Blowup {
        t: f64,
        step: usize,
        context: String,
    },

    /// Jacobian estimation refused to build a matrix this large.
    #[error("state dimension {dim} exceeds the dense-Jacobian cap {cap}; shrink the grids")]
    DimensionCap { dim: usize, cap: usize },

    #[error("eigenvalue computation failed: {0}")]
    EigenFailure(String),

    /// The Riemann states do not produce the rarefaction-left/shock-right
    /// pattern this solver supports.
    #[error("unsupported wave pattern: {0}")]
    UnsupportedWavePattern(String),

    /// No stable ladder exists within the search bounds.
    #[error("no feasible ladder with K <= {k_max}; blocking eigenvalues (scaled by dt0): {blocking:?}")]
    InfeasibleLadder {
        k_max: u32,
        blocking: Vec<Complex64>,
    },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
