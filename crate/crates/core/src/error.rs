use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A quadrature or Monte Carlo estimate did not reach its tolerance.
    #[error("numerical failure in {what}: achieved error {achieved:.3e}")]
    Numerical { what: String, achieved: f64 },

    #[error("quantity diverges: {0}")]
    Divergent(String),

    #[error("SINR undefined: zero signal power over zero interference and noise")]
    UndefinedSinr,

    #[error("degenerate series: {0}")]
    DegenerateSeries(String),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn numerical(what: impl Into<String>, achieved: f64) -> Self {
        Error::Numerical {
            what: what.into(),
            achieved,
        }
    }
}
