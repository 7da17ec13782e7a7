use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    /// Layer list violates the topology rules.
    #[error("invalid structure: {0}")]
    Structure(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("training diverged at epoch {epoch}: loss is {loss} (learning rate too high?)")]
    Diverged { epoch: usize, loss: f64 },

    #[error("container format error: {0}")]
    Format(String),

    /// The topology section is assumed to arrive intact; a CRC mismatch there is fatal.
    #[error("topology section corrupted (crc {expected:#010x} != {found:#010x})")]
    TopologyCorrupt { expected: u32, found: u32 },

    #[error("plans not nested: {0}")]
    NotNested(String),

    #[error("delta base mismatch: container expects {expected}, session holds {found}")]
    BaseMismatch { expected: String, found: String },

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("accuracy profile is empty")]
    EmptyProfile,

    #[error("protocol error: {0}")]
    Protocol(String),

    #[error("event rejected: {0}")]
    Rejected(String),

    #[error("unknown id: {0}")]
    UnknownId(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
