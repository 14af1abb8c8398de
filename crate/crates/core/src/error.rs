use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown vertex id {0}")]
    UnknownVertex(usize),
    #[error("edge index {index} out of range (instance has {len} edges)")]
    EdgeOutOfRange { index: usize, len: usize },
    #[error("({0}, {1}) is not an edge of the topology")]
    NotAnEdge(usize, usize),
    #[error("dimension mismatch: expected {expected} spins, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid loop: {0}")]
    InvalidLoop(String),
    #[error("instance too large for exhaustive search: {active} active spins (limit {limit})")]
    TooLarge { active: usize, limit: usize },
    #[error("elimination width {width} exceeds limit {limit}")]
    WidthExceeded { width: usize, limit: usize },
    #[error("block subgraph contains a cycle")]
    CyclicSubgraph,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("work budget of {cap} units exceeded after {work} units")]
    BudgetExceeded {
        cap: u64,
        work: u64,
        partial: Option<Box<crate::tts::TtsEstimate>>,
    },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Analysis(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
