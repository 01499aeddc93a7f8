use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("duplicate subsystem label `{0}`")]
    DuplicateLabel(String),

    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),

    #[error("subsystem `{name}` has dimension {left} on one side and {right} on the other")]
    LabelDimMismatch { name: String, left: usize, right: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("label order is not a permutation of the operator's labels")]
    NotPermutation,

    #[error("operator is not Hermitian (residual {residual:.3e})")]
    NotHermitian { residual: f64 },

    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),

    #[error("channel is not CPTP (psd: {psd}, trace-preservation residual {tp_residual:.3e})")]
    NotCptp { psd: bool, tp_residual: f64 },

    #[error("not a density operator: {0}")]
    InvalidState(String),

    #[error("invalid POVM: {0}")]
    InvalidPovm(String),

    #[error("not a stochastic matrix: {0}")]
    NotStochastic(String),

    #[error("wrong label set: {0}")]
    LabelSet(String),

    #[error("reconstruction residual {0:.3e} exceeds tolerance")]
    Reconstruction(f64),

    #[error("total dimension {total} exceeds cap {cap}")]
    DimensionCap { total: usize, cap: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
