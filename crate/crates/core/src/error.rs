use thiserror::Error;

/// Errors produced while building spaces, operators, or running solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("no modes in window [{lo}, {hi}]")]
    EmptyModeWindow { lo: f64, hi: f64 },

    #[error("basis dimension {dim} exceeds configured maximum {max}")]
    DimensionOverflow { dim: usize, max: usize },

    #[error("radial grids are only defined in dimension 3 (got {0})")]
    RadialGridDim(usize),

    #[error("infinite upper cutoff requires the tail substitution r = lo/u")]
    MissingTailSubstitution,

    #[error("mode grid is not aligned with the particle lattice")]
    GridNotBoxAligned,

    #[error("operator dimension mismatch: {0} vs {1}")]
    DimMismatch(usize, usize),

    #[error("operator '{0}' failed exact hermiticity check at entry ({1}, {2})")]
    NotHermitian(String, usize, usize),

    #[error("operator '{0}' is not flagged hermitian")]
    HermitianRequired(String),

    #[error("matrix exponential tolerance not met: residual {residual:e} > {tol:e}")]
    ExpTolerance { residual: f64, tol: f64 },

    #[error("dense oracle dimension cap exceeded: {dim} > {cap}")]
    DenseCapExceeded { dim: usize, cap: usize },

    #[error("quadrature failed to converge: estimated error {error:e}")]
    QuadratureNonConverged { error: f64 },

    #[error("invalid physical parameters: {0}")]
    InvalidParams(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("basis mismatch between states")]
    BasisMismatch,

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
