use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("vertex {vertex} is outside the lattice of {count} vertices")]
    VertexOutOfRange { vertex: u32, count: usize },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("vertex {vertex} is already occupied by polymer {polymer}")]
    Overlap { vertex: u32, polymer: usize },

    #[error("no polymer in slot {0}")]
    NoSuchPolymer(usize),

    #[error("invalid polymer: {0}")]
    InvalidPolymer(String),

    #[error("growth precondition violated: root {0} is occupied")]
    RootOccupied(u32),

    #[error("polymer is not compatible with the underlying graph")]
    Incompatible,

    #[error("instance too large for exhaustive enumeration: {0}")]
    TooLarge(String),

    #[error("unknown state in histogram: {0}")]
    UnknownState(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
