//! Error type shared by the crate.

use crate::design::SubgroupLevel;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Design dimensions violate the balanced-design preconditions.
    #[error("invalid design: {0}")]
    InvalidDesign(String),

    /// An ICC profile is outside the admissible region or maps to a negative
    /// variance component.
    #[error("invalid ICC profile: {0}")]
    InvalidIcc(String),

    /// Variance components fail their nonnegativity constraints.
    #[error("invalid variance components: {0}")]
    InvalidComponents(String),

    /// Components are parameterized for one subgroup level but used with a
    /// design of the other.
    #[error("subgroup level mismatch: components are {components:?}, design is {design:?}")]
    LevelMismatch {
        components: SubgroupLevel,
        design: SubgroupLevel,
    },

    /// Data vector length or cell counts do not match the declared design.
    #[error("unbalanced data: {0}")]
    UnbalancedData(String),

    /// The plug-in variance of delta_hat is zero, so the test statistic is
    /// undefined (not a failure to reject).
    #[error("degenerate variance: plug-in Var(delta_hat) is zero; the test is undefined")]
    DegenerateVariance,

    /// Argument outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    DomainError(String),

    /// No finite sample size achieves the requested power.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Oracle instance exceeds the dense-matrix size cap.
    #[error("dense oracle instance too large: dim {dim} exceeds cap {cap}")]
    TooLarge { dim: usize, cap: usize },

    /// A lambda aggregate is zero, so the closed-form inverse does not exist.
    #[error("singular components: lambda aggregate {index} is zero")]
    SingularComponents { index: usize },

    /// The dense covariance matrix is not positive definite.
    #[error("singular covariance: {0}")]
    SingularCovariance(String),

    /// The GLS normal equations are singular.
    #[error("singular system: {0}")]
    SingularSystem(String),

    /// The numeric likelihood maximizer did not converge.
    #[error("numeric ML did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
}
