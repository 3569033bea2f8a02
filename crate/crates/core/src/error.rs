use thiserror::Error;

/// Errors raised by the numerical kernels, the groupoid validators and the
/// rectification loop.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum RectifyError {
    #[error("invalid algebra vector: {0}")]
    InvalidAlgebraVector(String),

    #[error("element at distance {distance} from identity is outside the log injectivity region (margin {margin})")]
    LogDomainError { distance: f64, margin: f64 },

    #[error("norm normalization failed: {0}")]
    NormalizationFailure(String),

    #[error("group mismatch: expected {expected}, found {found}")]
    GroupMismatch { expected: String, found: String },

    #[error("unsupported operation for group {group}: {what}")]
    Unsupported { group: String, what: String },

    #[error("action axiom violated: {0}")]
    ActionError(String),

    #[error("core axiom '{axiom}' violated: {witness}")]
    CoreAxiomError { axiom: String, witness: String },

    #[error("Haar density is not right invariant: {witness}")]
    InvarianceError { witness: String },

    #[error("arrows {k} and {p} are not composable")]
    NotComposable { k: usize, p: usize },

    #[error("defect overflow: {0}")]
    DefectOverflow(String),

    #[error("defect {delta} exceeds admissible bound {bound}")]
    DefectTooLarge { delta: f64, bound: f64 },

    #[error("arrow {arrow} left the ambient compact set (distance {distance} > {radius})")]
    RangeEscape {
        arrow: usize,
        distance: f64,
        radius: f64,
    },

    #[error("grid error: {0}")]
    GridError(String),

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, RectifyError>;
