//! Marginal Gaussian tests and the omnibus chi-square test.
//!
//! With `Sigma` the asymptotic covariance of `sqrt(n) (a_hat - a, b_hat - b)`,
//!
//! ```text
//! Q_n = n / det(Sigma) * (s22 (a_hat - a)^2 + s11 (b_hat - b)^2 - 2 s12 (a_hat - a)(b_hat - b))
//! ```
//!
//! is asymptotically chi-square with 2 degrees of freedom.

use serde::{Deserialize, Serialize};

use crate::asymptotics::{Covariance2, SigmaMethod};
use crate::error::{Error, Result};
use crate::special::{chisq_sf, normal_quantile, normal_sf};

/// Nominal level of every decision.
pub const LEVEL: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: f64,
    /// 2 for the omnibus test, 0 for a marginal test (normal reference).
    pub df: u32,
    pub p_value: f64,
    pub reject_at_5pct: bool,
    pub sigma_method: Option<SigmaMethod>,
}

/// Two-sided critical value `normal_quantile(0.975)`.
pub fn marginal_critical_value() -> f64 {
    normal_quantile(1.0 - LEVEL / 2.0).expect("level inside (0, 1)")
}

/// Relative singularity guard `1e-12 * max(1, s11 * s22)`.
pub fn det_floor(sigma: &Covariance2) -> f64 {
    1e-12 * (sigma.s11 * sigma.s22).max(1.0)
}

fn check_n(n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    Ok(n as f64)
}

/// `z = sqrt(n / var_entry) (theta_hat - theta0)`, rejecting when
/// `|z| > normal_quantile(0.975)`.
pub fn marginal_test(theta_hat: f64, theta0: f64, var_entry: f64, n: usize) -> Result<TestReport> {
    let nf = check_n(n)?;
    if !(var_entry > 0.0) || !var_entry.is_finite() {
        return Err(Error::DegenerateVariance(format!(
            "variance entry {var_entry} must be positive"
        )));
    }
    let z = (nf / var_entry).sqrt() * (theta_hat - theta0);
    let p_value = (2.0 * normal_sf(z.abs())).min(1.0);
    Ok(TestReport {
        statistic: z,
        df: 0,
        p_value,
        reject_at_5pct: z.abs() > marginal_critical_value(),
        sigma_method: None,
    })
}

/// The quadratic form `Q_n` without the singularity check.
fn quadratic_form(da: f64, db: f64, nf: f64, sigma: &Covariance2) -> f64 {
    nf / sigma.det * (sigma.s22 * da * da + sigma.s11 * db * db - 2.0 * sigma.s12 * da * db)
}

pub fn omnibus_test(
    a_hat: f64,
    b_hat: f64,
    a0: f64,
    b0: f64,
    n: usize,
    sigma: &Covariance2,
) -> Result<TestReport> {
    let nf = check_n(n)?;
    let floor = det_floor(sigma);
    if !(sigma.det > floor) {
        return Err(Error::SingularCovariance {
            det: sigma.det,
            floor,
        });
    }
    let q = quadratic_form(a_hat - a0, b_hat - b0, nf, sigma);
    let p_value = chisq_sf(q.max(0.0), 2)?;
    Ok(TestReport {
        statistic: q,
        df: 2,
        p_value,
        reject_at_5pct: p_value < LEVEL,
        sigma_method: Some(sigma.method),
    })
}
