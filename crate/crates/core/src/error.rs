use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A configuration value violates a documented bound.
    #[error("configuration error in `{field}`: {message}")]
    Config { field: String, message: String },

    /// Two states that must share mass, dimension and grid do not.
    #[error("incompatible states: {0}")]
    Incompatible(String),

    /// Mixture weights or components are invalid.
    #[error("invalid mixture: {0}")]
    Mixture(String),

    /// A massless state does not vanish at p = 0, so the 1/E weights blow up.
    #[error(
        "singular weight: massless state has |psi(0)|/max|psi| = {ratio:.3e}, \
         must be below {limit:.0e}"
    )]
    SingularWeight { ratio: f64, limit: f64 },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("region error: {0}")]
    Region(String),

    /// Spatial integration could not reach its tolerance.
    #[error("integration did not converge: {0}")]
    NotConverged(String),

    /// The density never dropped below the tail threshold within the
    /// largest admissible spatial domain.
    #[error("domain extension failed: {0}")]
    DomainExtension(String),

    /// Tail fit hit a nonpositive sample; the quadrature noise floor was reached.
    #[error(
        "nonpositive density {value:.3e} at r = {r} inside the fit window; \
         shrink the window or raise the momentum resolution"
    )]
    NonpositiveDensity { r: f64, value: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn config(field: &str, message: impl Into<String>) -> Error {
    Error::Config { field: field.to_string(), message: message.into() }
}
