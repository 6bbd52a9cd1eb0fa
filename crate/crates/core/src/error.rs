use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("empty space: no active cells")]
    EmptySpace,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("point {point:?} lies outside cell {cell:?}")]
    PointOutsideCell { cell: [usize; 3], point: Vec<f64> },
    #[error("cell {0:?} is not active in this space")]
    InactiveCell([usize; 3]),
    #[error("derivative order {requested} exceeds spline degree {degree}")]
    OrderTooHigh { requested: usize, degree: usize },
    #[error("coefficient length {got} does not match dof count {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("self-intersecting torus: major radius {major} must exceed minor radius {minor}")]
    SelfIntersectingTorus { major: f64, minor: f64 },
    #[error("ambiguous projection of {0:?} onto the torus")]
    AmbiguousProjection([f64; 3]),
    #[error("point {point:?} is off the surface by {distance:e}")]
    OffSurface { point: [f64; 3], distance: f64 },
    #[error("empty boundary samples")]
    EmptySamples,
    #[error("disc leaves square: shift {0} exceeds the clearance")]
    DiscLeavesSquare(f64),
    #[error("refine mesh: trim curve has several branches in cell {0:?}")]
    RefineMesh([usize; 3]),
    #[error("grid too small: sample {0:?} lies outside the background grid")]
    GridTooSmall([f64; 3]),
    #[error("hybrid mesh does not cover interface at {0:?}")]
    HybridNotCovering([f64; 3]),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("solver residual {residual:e} above tolerance {tolerance:e}")]
    Residual { residual: f64, tolerance: f64 },
    #[error("nonpositive error value {0} in convergence series")]
    NonPositiveError(f64),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Exit code used by the command line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::InvalidParameter(_) | Error::DiscLeavesSquare(_) => 1,
            _ => 2,
        }
    }
}
