use thiserror::Error;

pub type Result<T, E = LabError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum LabError {
    #[error("config line {line}: {msg}")]
    ConfigSyntax { line: usize, msg: String },

    #[error("missing config key `{0}`")]
    MissingKey(String),

    #[error("config key `{key}`: {msg}")]
    ConfigValue { key: String, msg: String },

    #[error("invalid problem spec: {0}")]
    InvalidSpec(String),

    #[error("invalid lattice: {0}")]
    InvalidGrid(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("time must be positive, got {0}")]
    NonPositiveTime(f64),

    #[error("lemma parameters violate beta*(theta1-theta2-1) < 2 < beta*(3*theta1-theta2-1): theta1={theta1}, theta2={theta2}, beta={beta}")]
    Lemma1Condition { theta1: f64, theta2: f64, beta: f64 },

    #[error("need at least {needed} gaps, got {got}")]
    TooFewGaps { needed: usize, got: usize },

    #[error("blow-up at step {step} (sup |u| = {sup:e}); last stable slice {last_stable}")]
    BlowUp { step: usize, last_stable: usize, sup: f64 },

    #[error("non-positive psi {value:e} at step {step}, cell {cell}: lattice too coarse for the noise amplitude")]
    NonPositivePsi { step: usize, cell: usize, value: f64 },

    #[error("ensemble too small: need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("lag {lag} below lattice resolution (minimum {min})")]
    LagBelowResolution { lag: usize, min: usize },

    #[error("shape mismatch: {0}")]
    Mismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("bad binary slab: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl LabError {
    /// Process exit code used by the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            LabError::BlowUp { .. } | LabError::NonPositivePsi { .. } => 3,
            _ => 2,
        }
    }

    pub(crate) fn value(key: &str, msg: impl Into<String>) -> Self {
        LabError::ConfigValue {
            key: key.to_string(),
            msg: msg.into(),
        }
    }
}
