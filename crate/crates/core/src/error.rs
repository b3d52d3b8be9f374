use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Channel dimensions violate a standing constraint; the payload names it.
    #[error("invalid channel dimensions: {0}")]
    Dimension(String),

    #[error("argument out of domain: {0}")]
    Domain(String),

    /// Two values that must be distinct are closer than the confluence tolerance.
    #[error("confluent arguments: {0}")]
    Confluence(String),

    #[error("arguments not strictly ordered: {0}")]
    Ordering(String),

    /// The closed form is only available for T <= N.
    #[error("unsupported regime: {0}")]
    Regime(String),

    #[error("degenerate factorization: {0}")]
    DegenerateFactorization(String),

    #[error("high-SNR approximation out of range: {0}")]
    ApproximationOutOfRange(String),

    #[error("empty sample: {0}")]
    EmptySample(String),
}
