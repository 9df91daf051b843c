use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(
        "stencil is not symmetric: offset {offset:?} has coefficient {value}, mirror has {mirror}"
    )]
    SymmetryViolation {
        offset: [i32; 3],
        value: f64,
        mirror: f64,
    },

    #[error("invalid stencil: {0}")]
    InvalidStencil(String),

    #[error("unsupported dimension {0} (expected 2 or 3)")]
    UnsupportedDimension(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("grid shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid grid size: {0}")]
    InvalidGridSize(String),

    #[error("unknown smoother `{0}`")]
    UnknownSmoother(String),

    #[error("inadmissible smoother: product symbol {value:.6e} <= 0 at theta = {theta:?}")]
    InadmissibleSmoother { value: f64, theta: Vec<f64> },

    #[error("coarse-grid symbol vanishes at theta = {theta:?}")]
    SingularCoarseSymbol { theta: Vec<f64> },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid multigrid configuration: {0}")]
    InvalidConfig(String),

    #[error("unknown example problem {0} (expected 1, 2 or 3)")]
    UnknownExample(usize),

    #[error("problem has no exact solution")]
    MissingExactSolution,

    #[error("{what} is not finite ({value}) at {point:?}")]
    NonFinite {
        what: &'static str,
        value: f64,
        point: Vec<f64>,
    },

    #[error("coarsest-level matrix is singular")]
    SingularCoarseMatrix,
}
