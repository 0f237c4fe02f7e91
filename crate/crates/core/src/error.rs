use thiserror::Error;

use crate::exact::ExactSolution;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error(
        "dimension mismatch: source atoms have dimension {source_dim}, target atoms {target_dim}"
    )]
    DimensionMismatch {
        source_dim: usize,
        target_dim: usize,
    },

    #[error("shape mismatch: expected {expected:?}, got {found:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },

    /// `KL(P | Q)` is infinite because `P` puts mass where `Q` has none.
    #[error("absolute continuity violated at ({row}, {col}): plan has mass {mass:e} where reference is zero")]
    AbsoluteContinuity { row: usize, col: usize, mass: f64 },

    /// A kernel row or column underflowed to zero (epsilon too small for the scaling domain).
    #[error("infeasible kernel: {0}")]
    InfeasibleKernel(String),

    /// Scaling vectors overflowed or produced NaN.
    #[error("numeric breakdown after {iteration} iterations: {detail}; use the log domain")]
    NumericBreakdown { iteration: usize, detail: String },

    #[error("exact solver hit its pivot cap ({pivots}) before reaching optimality")]
    ExactNotConverged {
        pivots: usize,
        best: Box<ExactSolution>,
    },

    #[error("instance too large for brute force: {0}")]
    TooLarge(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("image error: {0}")]
    Image(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Reads a whole file, naming the path in any I/O error.
pub(crate) fn read_file(path: &std::path::Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|e| {
        Error::Io(std::io::Error::new(
            e.kind(),
            format!("{}: {e}", path.display()),
        ))
    })
}

pub(crate) fn read_text(path: &std::path::Path) -> Result<String> {
    String::from_utf8(read_file(path)?)
        .map_err(|_| Error::Parse(format!("{}: not valid UTF-8", path.display())))
}
