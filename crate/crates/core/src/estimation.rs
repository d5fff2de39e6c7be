//! Empirical moments and the closed-form moment estimators.
//!
//! | law | `a_hat` | `b_hat` |
//! |---|---|---|
//! | Gamma | `mean^2 / S^2` | `mean / S^2` |
//! | Beta | `mean (mean - mean_sq) / (mean_sq - mean^2)` | `(1 - mean)(mean - mean_sq) / (mean_sq - mean^2)` |
//! | Uniform | `mean - sqrt(3) S` | `mean + sqrt(3) S` |
//! | Fisher | `2 mean^2 / (S^2 (2 - mean) - mean^2 (mean - 1))` | `2 mean / (mean - 1)` |
//!
//! `S^2` is the unbiased variance. The Beta denominator is the biased
//! variance `mean_sq - mean^2`.

use serde::{Deserialize, Serialize};

use crate::distributions::LawKind;
use crate::error::{Error, Result};

/// `sqrt(12) / 2 = sqrt(3)`, the half-width of a unit-variance uniform.
pub fn uniform_lambda() -> f64 {
    3f64.sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMoments {
    pub n: usize,
    pub mean: f64,
    pub mean_sq: f64,
    /// Divisor `n - 1`.
    pub var_unbiased: f64,
    /// Divisor `n`.
    pub var_biased: f64,
}

impl EmpiricalMoments {
    /// Moments of a sample, computed in two passes.
    pub fn from_sample(sample: &[f64]) -> Result<Self> {
        let n = sample.len();
        if n < 2 {
            return Err(Error::InsufficientData { needed: 2, got: n });
        }
        let nf = n as f64;
        let mean = sample.iter().sum::<f64>() / nf;
        let mut ss = 0.0;
        let mut corr = 0.0;
        let mut sq = 0.0;
        for &x in sample {
            let d = x - mean;
            ss += d * d;
            corr += d;
            sq += x * x;
        }
        let var_biased = ((ss - corr * corr / nf) / nf).max(0.0);
        Ok(Self {
            n,
            mean,
            mean_sq: sq / nf,
            var_unbiased: var_biased * nf / (nf - 1.0),
            var_biased,
        })
    }

    /// Builds the summary from known moments, as if from a sample of size `n`.
    pub fn from_moments(n: usize, mean: f64, var_unbiased: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InsufficientData { needed: 2, got: n });
        }
        let nf = n as f64;
        let var_biased = var_unbiased * (nf - 1.0) / nf;
        Ok(Self {
            n,
            mean,
            mean_sq: var_biased + mean * mean,
            var_unbiased,
            var_biased,
        })
    }
}

/// Shorthand for [`EmpiricalMoments::from_sample`].
pub fn empirical_moments(sample: &[f64]) -> Result<EmpiricalMoments> {
    EmpiricalMoments::from_sample(sample)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamEstimate {
    pub law_kind: LawKind,
    pub a_hat: f64,
    pub b_hat: f64,
    pub n: usize,
}

/// Estimator map from `(mean, variance, mean_sq)` to `(a_hat, b_hat)`.
///
/// Gamma, Uniform and Fisher read `variance`; Beta reads `mean_sq` and the
/// biased variance `mean_sq - mean^2`, which the caller passes as
/// `beta_denominator`.
fn estimator_map(
    kind: LawKind,
    mean: f64,
    variance: f64,
    mean_sq: f64,
    beta_denominator: f64,
) -> Result<(f64, f64)> {
    match kind {
        LawKind::Gamma => {
            if !(variance > 0.0) {
                return Err(Error::DegenerateSample(format!(
                    "S\u{b2}={variance} must be positive"
                )));
            }
            Ok((mean * mean / variance, mean / variance))
        }
        LawKind::Beta => {
            if !(beta_denominator > 0.0) {
                return Err(Error::DegenerateSample(format!(
                    "mean_sq - mean\u{b2} = {beta_denominator} must be positive"
                )));
            }
            let num = mean - mean_sq;
            if !(num > 0.0) || !(mean < 1.0) {
                return Err(Error::DegenerateSample(format!(
                    "mean - mean_sq = {num} and 1 - mean = {} must be positive",
                    1.0 - mean
                )));
            }
            Ok((
                mean * num / beta_denominator,
                (1.0 - mean) * num / beta_denominator,
            ))
        }
        LawKind::Uniform => {
            if !(variance >= 0.0) {
                return Err(Error::DegenerateSample(format!(
                    "S\u{b2}={variance} must be nonnegative"
                )));
            }
            let half = uniform_lambda() * variance.sqrt();
            Ok((mean - half, mean + half))
        }
        LawKind::Fisher => {
            if !(mean > 1.0) {
                return Err(Error::InfeasibleMoment(format!(
                    "Fisher estimation needs a sample mean above 1, got {mean}"
                )));
            }
            let den = variance * (2.0 - mean) - mean * mean * (mean - 1.0);
            if !(den > 0.0) {
                return Err(Error::DegenerateSample(format!(
                    "S\u{b2}(2 - mean) - mean\u{b2}(mean - 1) = {den} must be positive"
                )));
            }
            Ok((2.0 * mean * mean / den, 2.0 * mean / (mean - 1.0)))
        }
    }
}

/// Moment estimates of `(a, b)` for `kind`.
pub fn estimate(kind: LawKind, em: &EmpiricalMoments) -> Result<ParamEstimate> {
    let (a_hat, b_hat) = estimator_map(kind, em.mean, em.var_unbiased, em.mean_sq, em.var_biased)?;
    Ok(ParamEstimate {
        law_kind: kind,
        a_hat,
        b_hat,
        n: em.n,
    })
}

/// The estimator map evaluated at population moments `(m1, m2)`, where
/// every variance is `m2 - m1^2`. This is the function whose gradient gives
/// the influence coefficients.
pub fn estimator_at_moments(kind: LawKind, m1: f64, m2: f64) -> Result<(f64, f64)> {
    let v = m2 - m1 * m1;
    estimator_map(kind, m1, v, m2, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::LawSpec;

    #[test]
    fn empirical_examples() {
        let em = empirical_moments(&[1.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(em.mean, 1.0);
        assert_eq!(em.var_unbiased, 0.0);
        let em = empirical_moments(&[0.0, 2.0]).unwrap();
        assert_eq!((em.mean, em.mean_sq, em.var_unbiased, em.var_biased), (1.0, 2.0, 2.0, 1.0));
        assert_eq!(
            empirical_moments(&[3.0]).unwrap_err(),
            Error::InsufficientData { needed: 2, got: 1 }
        );
    }

    #[test]
    fn empirical_variance_of_uniform_draws() {
        let xs = LawSpec::uniform(0.0, 1.0).unwrap().sample(1_000_000, 11);
        let em = empirical_moments(&xs).unwrap();
        assert!((em.var_unbiased * 12.0 - 1.0).abs() < 0.01);
    }

    #[test]
    fn estimator_examples() {
        let em = EmpiricalMoments::from_moments(100, 2.0, 1.0).unwrap();
        let e = estimate(LawKind::Gamma, &em).unwrap();
        assert!((e.a_hat - 4.0).abs() < 1e-14 && (e.b_hat - 2.0).abs() < 1e-14);

        let (a, b) = estimator_at_moments(LawKind::Beta, 0.4, 0.2).unwrap();
        assert!((a - 2.0).abs() < 1e-12 && (b - 3.0).abs() < 1e-12);

        let em = EmpiricalMoments::from_moments(100, 1.25, 65.0 / 48.0).unwrap();
        let e = estimate(LawKind::Fisher, &em).unwrap();
        assert!((e.a_hat - 5.0).abs() < 1e-12 && (e.b_hat - 10.0).abs() < 1e-12);

        let em = EmpiricalMoments::from_moments(100, 0.5, 1.0 / 12.0).unwrap();
        let e = estimate(LawKind::Uniform, &em).unwrap();
        assert!(e.a_hat.abs() < 1e-15 && (e.b_hat - 1.0).abs() < 1e-15);
    }

    #[test]
    fn degenerate_samples_are_rejected() {
        let em = empirical_moments(&[1.0; 4]).unwrap();
        let err = estimate(LawKind::Gamma, &em).unwrap_err();
        assert!(err.to_string().contains("S\u{b2}=0"), "{err}");
        assert!(matches!(
            estimate(LawKind::Beta, &em),
            Err(Error::DegenerateSample(_))
        ));
        let em = empirical_moments(&[0.5, 0.9, 1.0]).unwrap();
        assert!(matches!(
            estimate(LawKind::Fisher, &em),
            Err(Error::InfeasibleMoment(_))
        ));
        // mean above 2 makes the Fisher a_hat denominator negative
        let em = empirical_moments(&[2.0, 3.0, 4.0]).unwrap();
        assert!(matches!(
            estimate(LawKind::Fisher, &em),
            Err(Error::DegenerateSample(_))
        ));
        // a uniform sample of equal values is a point interval
        let em = empirical_moments(&[2.0; 3]).unwrap();
        let e = estimate(LawKind::Uniform, &em).unwrap();
        assert_eq!((e.a_hat, e.b_hat), (2.0, 2.0));
    }

    #[test]
    fn uniform_two_point_sample() {
        let em = empirical_moments(&[0.0, 2.0]).unwrap();
        let e = estimate(LawKind::Uniform, &em).unwrap();
        let half = 3f64.sqrt() * 2f64.sqrt();
        assert!((e.a_hat - (1.0 - half)).abs() < 1e-15);
        assert!((e.b_hat - (1.0 + half)).abs() < 1e-15);
    }
}
