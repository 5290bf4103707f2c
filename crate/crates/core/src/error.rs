use thiserror::Error;

#[derive(Debug, Error)]
pub enum DvaError {
    /// Parameter outside the domain an operation declared.
    #[error("domain error: {0}")]
    Domain(String),

    /// Evaluation requested at or too close to a pole.
    #[error("pole at {location}: {context}")]
    Pole { location: String, context: String },

    /// Series evaluation requested outside its annulus of validity.
    #[error("outside annulus of validity: {0}")]
    Region(String),

    /// Closed form requested for a pair the appendix table does not list.
    #[error("unsupported pair for closed form: {0}")]
    UnsupportedPair(String),

    /// Windows with incompatible non-integer exponent offsets.
    #[error("offset mismatch: {0}")]
    OffsetMismatch(String),

    /// Numerical refinement failed to reach the requested target.
    #[error("refinement exhausted: {0}")]
    Refinement(String),

    /// Point sampling could not avoid the pole lattice.
    #[error("sampling failed: {0}")]
    Sampling(String),

    /// Invalid run configuration.
    #[error("config error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, DvaError>;
