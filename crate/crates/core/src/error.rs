use alloc::string::String;

/// Errors raised by the dynamics kernels.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("Jacobian factor |a_{factor}(λ)| = {value:e} is below the 1e-12 floor")]
    ZeroJacobian { factor: usize, value: f64 },
    #[error("family is degenerate: {0}")]
    DegenerateFamily(String),
    #[error("base dynamics `{0}` cannot be run backwards")]
    NotInvertible(&'static str),
    #[error("the shift acts on parameter sequences, not on single base points")]
    ShiftNeedsSequence,
    #[error("invalid base: {0}")]
    InvalidBase(String),
    #[error("Hölder estimate needs a surjective base map")]
    SurjectivityRequired,
    #[error("{count} cells of the Green field are undecided")]
    UndecidedCells { count: usize },
    #[error("operation is not supported for base dynamics `{0}`")]
    UnsupportedBase(&'static str),
    #[error("no bounded-certified candidate points were found")]
    EmptyCandidateSet,
    #[error("the zero vector has no Green value")]
    ZeroVector,
    #[error("homogeneous lift is degenerate: min |F| on the unit sphere is {0:e}")]
    Degenerate(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = core::result::Result<T, Error>;
