use num_complex::Complex64;
use thiserror::Error;

pub type Result<T> = std::result::Result<T, LameError>;

/// Failure modes shared by every numerical routine in the crate.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum LameError {
    #[error("invalid input: {0}")]
    Domain(String),

    #[error("series did not reach working precision (achieved bound {achieved:.3e})")]
    Precision { achieved: f64 },

    #[error("pole of the Weierstrass function at lattice point {point}")]
    Pole { point: Complex64 },

    #[error("iteration did not converge: {what} (best residual {residual:.3e})")]
    NoConvergence { what: String, residual: f64 },

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("integration path runs into a branch point near {at}")]
    BranchCollision { at: Complex64 },

    #[error("degenerate configuration: {0}")]
    Degenerate(String),

    #[error("integration path passes too close to a pole near {at}")]
    PathTooClose { at: Complex64 },

    #[error("grid does not resolve the function (spectral tail {tail:.3e})")]
    Resolution { tail: f64 },

    #[error("eigenvalue labelling failed: {0}")]
    Labeling(String),
}

impl LameError {
    /// Errors caused by the caller's input rather than by a numerical breakdown.
    pub fn is_domain(&self) -> bool {
        matches!(self, LameError::Domain(_))
    }

    pub fn kind(&self) -> &'static str {
        match self {
            LameError::Domain(_) => "domain",
            LameError::Precision { .. } => "precision",
            LameError::Pole { .. } => "pole",
            LameError::NoConvergence { .. } => "no-convergence",
            LameError::Consistency(_) => "consistency",
            LameError::BranchCollision { .. } => "branch-collision",
            LameError::Degenerate(_) => "degenerate",
            LameError::PathTooClose { .. } => "path-too-close",
            LameError::Resolution { .. } => "resolution",
            LameError::Labeling(_) => "labeling",
        }
    }
}
