use thiserror::Error;

/// Errors surfaced by the workbench.
///
/// `ResourceCap` is deliberately distinct from every mathematical failure
/// mode: hitting a size limit means "refused to try", never "no solution".
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("bundle mismatch: {0}")]
    BundleMismatch(String),

    #[error("invalid bundle: {0}")]
    InvalidBundle(String),

    #[error("operation requires a differential-form bundle, got {0}")]
    NotAFormBundle(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("signature mismatch: {0}")]
    SignatureMismatch(String),

    #[error("resource cap exceeded: {what} = {found} > cap {cap}")]
    ResourceCap {
        what: &'static str,
        found: usize,
        cap: usize,
    },

    #[error("smoothness budget exhausted: need C^{needed}, section only guarantees C^{available}")]
    SmoothnessExhausted { needed: usize, available: usize },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
