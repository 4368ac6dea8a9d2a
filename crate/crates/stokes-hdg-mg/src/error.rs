//! Error type shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported polynomial degree {0} (supported: 1..=4)")]
    UnsupportedDegree(usize),

    #[error("unsupported quadrature exactness {0} (supported: 0..=20)")]
    UnsupportedExactness(usize),

    #[error("mismatched mesh levels: coarse is {coarse}, fine is {fine}")]
    LevelMismatch { coarse: usize, fine: usize },

    #[error("singular local system on element {element}")]
    SingularLocalSystem { element: usize },

    #[error("coarse-level factorization failed (matrix not positive definite)")]
    CoarseFactorization,

    #[error("multigrid iteration cap {cap} exceeded, relative residual {residual:.3e}")]
    MgDiverged {
        cap: usize,
        residual: f64,
        /// Relative residual after each iteration.
        history: Vec<f64>,
    },

    #[error("outer iteration cap {cap} exceeded, last pressure increment {increment:.3e}")]
    OuterDiverged { cap: usize, increment: f64 },

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
