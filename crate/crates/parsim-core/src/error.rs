//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An iterative solver ran out of iterations.
    #[error("solver did not converge after {iters} iterations (residual {residual:.3e})")]
    NoConvergence { iters: usize, residual: f64 },

    /// A matrix that must be strictly stable is not.
    #[error("{what} must be strictly stable, spectral radius = {radius:.6}")]
    Unstable { what: &'static str, radius: f64 },

    /// A matrix inversion or factorization failed.
    #[error("singular matrix encountered in {0}")]
    Singular(&'static str),

    /// Mismatched matrix/vector dimensions.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A scalar or matrix argument is outside its admissible domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// The solved policy does not have the two-threshold shape.
    #[error("policy is not two-threshold; action pattern over the grid: {pattern}")]
    NotTwoThreshold { pattern: String },

    /// Lagrange grid search found no point satisfying the constraints.
    #[error("no feasible (lambda_e, lambda_f) point; best infeasible candidates: {candidates}")]
    Infeasible { candidates: String },

    /// A Monte-Carlo estimate could not be formed.
    #[error("Monte-Carlo estimation failed: {0}")]
    McEstimation(String),

    /// The detector was stepped after it raised an alarm.
    #[error("detector stepped after termination")]
    Terminated,

    /// Config or cache file problem.
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
