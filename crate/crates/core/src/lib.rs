//! Method-of-moments estimation for two-parameter laws, with marginal and
//! chi-square omnibus tests built on the delta-method covariance of the
//! estimators.
//!
//! ```
//! use momentchi::asymptotics::{covariance_exact_moments, influence_pair, CoefficientMode};
//! use momentchi::distributions::LawSpec;
//! use momentchi::estimation::{empirical_moments, estimate};
//! use momentchi::testing::omnibus_test;
//!
//! let law = LawSpec::gamma(2.0, 3.0)?;
//! let sample = law.sample(2_000, 1);
//! let est = estimate(law.kind(), &empirical_moments(&sample)?)?;
//! let (h, l) = influence_pair(&law, CoefficientMode::Canonical)?;
//! let sigma = covariance_exact_moments(&law, &h, &l)?;
//! let t = omnibus_test(est.a_hat, est.b_hat, 2.0, 3.0, sample.len(), &sigma)?;
//! println!("Q = {:.3}, p = {:.3}", t.statistic, t.p_value);
//! # Ok::<(), momentchi::Error>(())
//! ```
//!
//! The guide in `book/` covers each module in turn.

pub mod asymptotics;
pub mod distributions;
pub mod error;
pub mod estimation;
pub mod montecarlo;
pub mod report;
pub mod rng;
pub mod special;
pub mod testing;

pub use error::{Error, Result};

// Runs the guide's code blocks as doctests, one module per chapter.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/special-functions.md")]
    mod special_functions {}
    #[doc = include_str!("../../../book/src/laws.md")]
    mod laws {}
    #[doc = include_str!("../../../book/src/estimators.md")]
    mod estimators {}
    #[doc = include_str!("../../../book/src/covariance.md")]
    mod covariance {}
    #[doc = include_str!("../../../book/src/tests.md")]
    mod tests {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../book/src/published-coefficients.md")]
    mod published_coefficients {}
}
