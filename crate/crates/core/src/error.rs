use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A discretization is too coarse for the requested object.
    #[error("resolution guard: {0}")]
    Resolution(String),

    #[error("{op} is not available in dimension {d}")]
    UnsupportedDimension { op: &'static str, d: usize },

    #[error("memory guard: {0}")]
    MemoryGuard(String),

    #[error("{what} did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// Carries the best iterate of a failed self-consistent loop.
    #[error("self-consistent loop stopped after {} iterations (residual {:e})", .0.iterations, .0.residual)]
    ScfNotConverged(Box<crate::orbitals::ScfOutcome>),

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("N = {n}: {source}")]
    AtParticleNumber { n: usize, source: Box<Error> },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn arg(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn at_n(self, n: usize) -> Self {
        Error::AtParticleNumber {
            n,
            source: Box::new(self),
        }
    }
}
