use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// A probe and a nucleus share a position, so the dipole field diverges.
    #[error("coincident spin sites at {position:?}")]
    Singularity { position: [f64; 3] },

    #[error("quadrature did not converge: estimate {estimate:e} with error {error:e}")]
    Accuracy { estimate: f64, error: f64 },

    #[error("no interior minimum in [{lo}, {hi}]")]
    Bracket { lo: f64, hi: f64 },

    #[error("optimization failed: {0}")]
    Optimization(String),

    #[error("Hilbert-space dimension {dimension} exceeds the cap {cap}")]
    Resource { dimension: usize, cap: usize },

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The protocol carries no signal at this pulse interval.
    #[error("divergent detection time: {0}")]
    Divergence(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
