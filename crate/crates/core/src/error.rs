use thiserror::Error;

/// Every failure the library can report.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the function.
    #[error("domain error in {func}: {detail}")]
    Domain { func: &'static str, detail: String },

    /// Law parameters violate the law's constraints.
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),

    /// The integrand returned a non-finite value.
    #[error("non-finite integrand value at abscissa {abscissa}")]
    Evaluation { abscissa: f64 },

    #[error("insufficient data: need at least {needed} values, got {got}")]
    InsufficientData { needed: usize, got: usize },

    /// The sample cannot support the estimator; the message names the violated condition.
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    /// Fisher estimators require a sample mean above 1.
    #[error("infeasible moments: {0}")]
    InfeasibleMoment(String),

    /// A theoretical moment needed by the computation does not exist for these parameters.
    #[error("moment unavailable: {what} requires {requirement}")]
    MomentUnavailable {
        what: &'static str,
        requirement: String,
    },

    #[error("degenerate variance: {0}")]
    DegenerateVariance(String),

    #[error("singular covariance: det {det:e} is not above the floor {floor:e}")]
    SingularCovariance { det: f64, floor: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    /// Every Monte-Carlo replication violated the estimator preconditions.
    #[error("all {replications} replications were infeasible")]
    AllInfeasible { replications: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(func: &'static str, detail: impl Into<String>) -> Error {
    Error::Domain {
        func,
        detail: detail.into(),
    }
}
