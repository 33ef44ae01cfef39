use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// A rejected configuration or document, with the path of the offending field
/// (`rules[0].metric`, `goals[1].static_threshold`, ...).
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{field}: {message}")]
pub struct ValidationError {
    pub field: String,
    pub message: String,
}

impl ValidationError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Prefix the field path, e.g. `metric` -> `rules[2].metric`.
    pub fn within(mut self, prefix: impl AsRef<str>) -> Self {
        let prefix = prefix.as_ref();
        self.field = if self.field.is_empty() {
            prefix.to_string()
        } else if self.field.starts_with('[') {
            format!("{prefix}{}", self.field)
        } else {
            format!("{prefix}.{}", self.field)
        };
        self
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Validation(#[from] ValidationError),

    #[error("telemetry sequencing error: expected seq {expected}, got {got}")]
    Sequencing { expected: u64, got: u64 },

    #[error("record {seq} cannot be back-filled: {reason}")]
    Backfill { seq: u64, reason: &'static str },

    #[error("unknown model `{0}`")]
    UnknownModel(String),

    #[error("unknown policy `{0}`")]
    UnknownPolicy(String),

    #[error("unknown version {0}")]
    UnknownVersion(u64),

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("dataset line {line}: {message}")]
    Dataset { line: usize, message: String },

    #[error("no model deployed")]
    NoDeployedModel,

    #[error("R² is undefined when all actual values are identical")]
    UndefinedR2,

    #[error("run `{policy}` failed: {source}")]
    PolicyRun {
        policy: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
