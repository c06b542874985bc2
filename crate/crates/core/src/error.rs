use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown node `{0}`")]
    UnknownNode(String),

    #[error("node `{0}` already exists")]
    DuplicateNode(String),

    #[error("node name must be non-empty")]
    EmptyName,

    #[error("edge {0} -> {1} would create a cycle")]
    Cycle(String, String),

    #[error("invalid edge {0} -> {1}: {2}")]
    InvalidEdge(String, String, String),

    #[error("node sets overlap on `{0}`")]
    OverlappingSets(String),

    #[error("invalid variable `{0}`: {1}")]
    InvalidVariable(String, String),

    #[error("invalid table for `{0}`: {1}")]
    InvalidCpt(String, String),

    #[error("invalid assignment: {0}")]
    InvalidAssignment(String),

    #[error("invalid regime for `{0}`: {1}")]
    InvalidRegime(String, String),

    #[error("positivity violated: p({0}) = {1:e} is below the positivity threshold")]
    PositivityViolation(String, f64),

    #[error("not identified: {0}")]
    NotIdentified(String),

    #[error("not defined: {0}")]
    NotDefined(String),

    #[error("invalid W: {0}")]
    InvalidW(String),

    #[error("invalid query: {0}")]
    InvalidQuery(String),

    #[error("table is not normalized (sum = {0})")]
    NotNormalized(f64),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("latent node `{0}` cannot be estimated from data")]
    LatentNode(String),

    #[error("malformed input: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
