use thiserror::Error;

/// Errors shared by the numerical core.
#[derive(Debug, Error)]
pub enum Error {
    /// Evaluation requested outside the domain of validity (e.g. |w| < 1,
    /// or a singular-background point inside the origin cutoff).
    #[error("domain error: {0}")]
    Domain(String),

    /// The point lies strictly inside the droplet where the exterior map
    /// (and everything built on it) is undefined.
    #[error("interior point: {0}")]
    InteriorPoint(String),

    /// An iterative solve (Newton, bisection) did not converge.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    /// The conformal map lost univalence: z'(w) vanishes on |w| = 1 or the
    /// boundary curve self-intersects.
    #[error("cusp: univalence lost (min |z'| = {min_abs_dz:.3e})")]
    Cusp { min_abs_dz: f64 },

    /// Inputs violate a structural precondition (mismatched truncations,
    /// empty ensembles, unsupported background, ...).
    #[error("validation error: {0}")]
    Validation(String),

    /// A quadrature failed to converge across grid refinements.
    #[error("accuracy error: {0}")]
    Accuracy(String),

    /// Coincident points make the log-gas density -inf.
    #[error("coincident points at index {0}")]
    CoincidentPoints(usize),

    /// Importance-sampling diagnostics flagged the estimate as unusable.
    #[error("unreliable estimate: effective sample size {ess:.1} of {n} draws")]
    UnreliableEstimate { ess: f64, n: usize },
}

pub type Result<T> = std::result::Result<T, Error>;
