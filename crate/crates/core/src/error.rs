use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("level {k} out of range 1..={depth}")]
    LevelOutOfRange { k: usize, depth: usize },
    #[error("empty selection")]
    EmptySelection,
    #[error("selected nodes are not siblings")]
    NotSiblings,
    #[error("unknown AOI node id {0}")]
    UnknownNode(u32),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed run-length code: {0}")]
    RleFormat(String),
    #[error("unknown participant {0:?}")]
    UnknownParticipant(String),
    #[error("participants must differ")]
    SameParticipant,
    #[error("at least 2 participants required, got {0}")]
    TooFewParticipants(usize),
    #[error("character {0:?} does not resolve to a visible AOI")]
    Unresolvable(char),
    #[error("unknown pattern {0:?}")]
    UnknownPattern(String),
    #[error("gaze csv line {line}: {message}")]
    Csv { line: u64, message: String },
    #[error("image: {0}")]
    Image(String),
    #[error("json: {0}")]
    Json(String),
    #[error("invalid AOI tree: {0}")]
    InvalidTree(String),
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}

impl From<image::ImageError> for Error {
    fn from(e: image::ImageError) -> Self {
        Error::Image(e.to_string())
    }
}
