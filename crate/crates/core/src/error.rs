use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RieszError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite coordinate at point {index}")]
    NonFinite { index: usize },

    #[error("coincident points {i} and {j}: Riesz energy is singular")]
    Singular { i: usize, j: usize },

    #[error("point {index} lies outside the domain")]
    OutsideDomain { index: usize },

    #[error("index {index} out of range for {len} points")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("hypersingular requires s>d (got s={s}, d={d})")]
    NotHypersingular { s: f64, d: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("lattice point hit: x lies on the lattice, Hurwitz zeta is singular")]
    OnLatticePoint,

    #[error("points {i} and {j} are congruent modulo the lattice")]
    Congruent { i: usize, j: usize },

    #[error("could not find a feasible start after {attempts} attempts")]
    InfeasibleStart { attempts: usize },

    #[error("bisection bracket failure: {0}")]
    Bracket(String),

    #[error("density is not normalized (mass {mass})")]
    Unnormalized { mass: f64 },

    #[error("format error: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for RieszError {
    fn from(e: std::io::Error) -> Self {
        RieszError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, RieszError>;
