use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Arguments that do not fit together (mismatched spaces, bad indices, ...).
    #[error("usage error: {0}")]
    Usage(String),

    /// An input object violates its declared invariants.
    #[error("validation error: {0}")]
    Validation(String),

    /// A decoherence functional failed one of its axioms beyond tolerance.
    #[error("axiom violation: {0}")]
    AxiomViolation(String),

    #[error("invalid onto-witness: {0}")]
    InvalidWitness(String),

    /// Quadrature or extrapolation did not reach the requested accuracy.
    #[error("numerical non-convergence in {context}: residual {residual:.3e} exceeds {tolerance:.3e}")]
    NonConvergence {
        context: String,
        residual: f64,
        tolerance: f64,
    },

    /// The propagator time step is close to, but not exactly on, a caustic.
    #[error("near-caustic time step {delta_t}: |sin(ω·Δt)| = {sin_abs:.3e}")]
    NearCaustic { delta_t: f64, sin_abs: f64 },

    /// The operation does not apply to the given configuration.
    #[error("inapplicable: {0}")]
    Inapplicable(String),

    /// The nonvanishing-propagator hypothesis could not be met numerically.
    #[error("hypothesis failure at final point {point:?}: {reason}")]
    HypothesisFailure { point: Vec<f64>, reason: String },
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub(crate) fn validation(msg: impl Into<String>) -> Self {
        Error::Validation(msg.into())
    }
}
