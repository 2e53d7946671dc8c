use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Input outside the mathematical domain of the requested quantity.
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed input data (potential samples, tables, grids).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The ODE integrator produced a non-finite state.
    #[error("integrator failure at lambda = {lambda}: {reason}")]
    Integrator { lambda: f64, reason: String },

    /// A root could not be bracketed or did not converge.
    #[error("root finding failed: {0}")]
    RootFinding(String),

    /// The requested energies touch the Dirichlet spectrum of the edge.
    #[error("Dirichlet eigenvalue {energy} lies inside the requested energy range [{lo}, {hi}]")]
    DirichletOverlap { energy: f64, lo: f64, hi: f64 },

    /// An eigenvalue iteration did not converge.
    #[error("eigenvalue iteration did not converge: {0}")]
    NoConvergence(String),

    /// The matrix handed to a Hermitian solver is not Hermitian.
    #[error("matrix is not Hermitian (defect {defect:e})")]
    NotHermitian { defect: f64 },

    /// A problem size exceeds the configured memory budget.
    #[error("resource limit: {0}")]
    Resource(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// True for errors caused by the caller's numbers rather than by a
    /// malformed request.
    pub fn is_numeric_domain(&self) -> bool {
        !matches!(self, Error::InvalidInput(_) | Error::Resource(_))
    }
}
