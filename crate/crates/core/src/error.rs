use thiserror::Error;

/// Errors produced by graph I/O, generation, simulation and localization.
#[derive(Debug, Error)]
pub enum Error {
    /// Malformed text input; `line` is 1-based.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// A parameter is outside its valid range.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An argument violates a mathematical precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// No path exists between the two nodes.
    #[error("graph is disconnected: node {0} cannot reach node {1}")]
    Disconnected(usize, usize),

    /// The observations are mutually inconsistent: no node can be the source.
    /// Cannot happen on traces produced by the bundled simulator with
    /// tolerance scale 1; it signals a corrupted trace or a scale < 1.
    #[error("observations rule out every candidate source at step {step}")]
    DegenerateEvidence { step: usize },

    #[error("invalid experiment config: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
