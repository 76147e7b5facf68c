use thiserror::Error;

/// Errors surfaced by game construction, evaluation, and decomposition.
#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown builtin game `{0}`")]
    UnknownBuiltin(String),
    #[error("invalid parameter for builtin game: {0}")]
    InvalidBuiltinParams(String),
    #[error("invalid game: {0}")]
    InvalidGame(String),
    #[error("invalid strategy: {0}")]
    InvalidStrategy(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("profile is missing a distribution for infoset `{0}`")]
    MissingInfoset(String),
    #[error("{0} requires perfect recall")]
    NotPerfectRecall(&'static str),
    #[error("{0} requires a perfect-information game (singleton infosets)")]
    NotPerfectInformation(&'static str),
    #[error("{what}: size {actual} exceeds guard {limit}")]
    GuardExceeded {
        what: &'static str,
        limit: usize,
        actual: usize,
    },
    #[error("polymatrix game has no edge ({0}, {1})")]
    MissingEdge(usize, usize),
    #[error("not constant-sum: {0}")]
    NotConstantSum(String),
    #[error("malformed linear program: {0}")]
    MalformedLp(String),
    #[error("linear program solver failed: {0}")]
    LpFailure(String),
    #[error("empty opponent set for player {0}")]
    EmptyOpponentSet(usize),
    #[error("neighborhood is empty")]
    EmptyNeighborhood,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
