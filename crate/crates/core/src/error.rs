use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A truncated series hit its term cap before meeting the tolerance.
    #[error("series did not converge within {terms} terms (partial sum {partial:e}, next-term bound {bound:e})")]
    Numerical {
        terms: usize,
        partial: f64,
        bound: f64,
    },

    #[error("malformed file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }
}
