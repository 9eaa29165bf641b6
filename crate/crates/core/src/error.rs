use thiserror::Error;

/// Errors raised while building or transforming games and running checks.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("operator is not Hermitian: max |X - X†| entry {max_deviation:e} exceeds HERM_TOL {tolerance:e}")]
    NotHermitian { max_deviation: f64, tolerance: f64 },

    #[error("state is not normalized: squared norm {norm_sq} differs from 1 by more than NORM_TOL {tolerance:e}")]
    NotNormalized { norm_sq: f64, tolerance: f64 },

    #[error("zero vector cannot be normalized")]
    ZeroVector,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("map is not an isometry: max |U†U - I| entry {max_deviation:e}")]
    NotIsometry { max_deviation: f64 },

    #[error("function undefined at eigenvalue {eigenvalue}")]
    DomainError { eigenvalue: f64 },

    #[error("payoff undefined at eigenvalue {eigenvalue}")]
    PayoffUndefined { eigenvalue: f64 },

    #[error("game has no payoff with nonzero weight")]
    DegenerateGame,

    #[error("function is not injective on the spectrum: {first} and {second} both map to {image}")]
    NonInjective { first: f64, second: f64, image: f64 },

    #[error("intertwining relation U X = X' U violated: max entry deviation {max_deviation:e}")]
    IntertwinerViolation { max_deviation: f64 },

    #[error("payoffs disagree at eigenvalue {eigenvalue}: {left} vs {right}")]
    PayoffMismatch { eigenvalue: f64, left: f64, right: f64 },

    #[error("spectrum is not invariant under reflection: image {image} of eigenvalue {eigenvalue} is not an eigenvalue")]
    SpectrumNotInvariant { eigenvalue: f64, image: f64 },

    #[error("basis index {index} out of range for dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },

    #[error("duplicate basis index {0}")]
    DuplicateIndex(usize),

    #[error("branch set is empty")]
    EmptyBranchSet,

    #[error("invalid measurement procedure: {0}")]
    InvalidProcedure(String),

    #[error("unknown axiom `{0}`")]
    UnknownAxiom(String),

    #[error("audit corpus is empty")]
    EmptyCorpus,

    #[error("projectors span a space of rank {rank}, need {needed}")]
    InsufficientSpan { rank: usize, needed: usize },

    #[error("dimension {0} too small, need at least 3")]
    DimTooSmall(usize),

    #[error("{what} = {value} out of range")]
    OutOfRange { what: &'static str, value: f64 },

    #[error("unknown stage `{0}`")]
    UnknownStage(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("stage construction failed: {0}")]
    StageConstruction(String),
}

pub type Result<T> = std::result::Result<T, Error>;
