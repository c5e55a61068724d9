use thiserror::Error;

use crate::chain::ParameterTag;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid quadrature configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid separation: {0}")]
    InvalidSeparation(String),

    #[error(
        "quadrature did not converge after {subdivisions} subdivisions \
         (estimate {estimate:e}, error estimate {error_estimate:e})"
    )]
    NonConvergence {
        estimate: f64,
        error_estimate: f64,
        subdivisions: usize,
    },

    #[error("{quantity} = {value} is outside its physical range")]
    Unphysical { quantity: &'static str, value: f64 },

    #[error("Fisher information requires J != 0")]
    ZeroCoupling,

    #[error("single-spin state is (nearly) pure: 1 - m^2 = {one_minus_m2:e}")]
    PureStateDegeneracy { one_minus_m2: f64 },

    #[error("degenerate denominator in {term}: {value:e}")]
    DegenerateDenominator { term: &'static str, value: f64 },

    #[error("outcome {outcome} has vanishing probability {probability:e}")]
    DegenerateOutcome { outcome: &'static str, probability: f64 },

    #[error("two-spin state is not positive semidefinite: {0}")]
    PositivityViolation(String),

    #[error("SLD block {block} is rank deficient (determinant {value:e})")]
    DegenerateBlock { block: &'static str, value: f64 },

    #[error("degenerate decay fit: |G_{r}| = {value:e} is not resolved")]
    DegenerateFit { r: i32, value: f64 },

    #[error("quantum Fisher information for {tag} vanishes")]
    ZeroQfi { tag: ParameterTag },

    #[error("Fisher information {fi} exceeds quantum Fisher information {qfi}")]
    BoundViolation { fi: f64, qfi: f64 },

    #[error("Fisher matrix has vanishing trace")]
    ZeroTrace,

    #[error("oracle: {0}")]
    Oracle(String),
}
