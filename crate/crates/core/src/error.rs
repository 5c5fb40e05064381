use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("point {point} out of range for a design on {v} points")]
    PointOutOfRange { point: usize, v: usize },

    #[error("block index {index} out of range for a design with {blocks} blocks")]
    BlockOutOfRange { index: usize, blocks: usize },

    #[error("malformed block {block:?}: {reason}")]
    MalformedBlock {
        block: Vec<usize>,
        reason: &'static str,
    },

    #[error("order {v} is not admissible: v mod 6 = {}, expected 1 or 3", v % 6)]
    InadmissibleOrder { v: u64 },

    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    #[error("not a Steiner triple system: {0}")]
    InvalidDesign(String),

    /// The randomized construction ran out of moves. Retrying with another
    /// seed or a larger budget may succeed.
    #[error("effort budget exhausted after {moves} moves")]
    BudgetExhausted { moves: u64 },

    #[error(
        "certificate is bound to design {expected}, but the supplied design hashes to {actual}"
    )]
    DigestMismatch { expected: String, actual: String },

    #[error("certificate is for order {certificate}, design has order {design}")]
    OrderMismatch { certificate: usize, design: usize },

    #[error("unsupported digest algorithm {0:?}")]
    UnsupportedDigest(String),

    #[error("exhaustive oracle refuses v = {v} (limit {limit})")]
    TooLarge { v: usize, limit: usize },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn is_retryable(&self) -> bool {
        matches!(self, Error::BudgetExhausted { .. })
    }
}
