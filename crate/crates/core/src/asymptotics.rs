//! Influence functions and the asymptotic covariance of `(a_hat, b_hat)`.
//!
//! Both estimators are smooth functions `g(m1, m2)` of the first two
//! empirical moments, so
//!
//! ```text
//! sqrt(n) (g(mean, mean_sq) - g(m1, m2)) = G_n(dg/dm1 * h1 + dg/dm2 * h2) + o_P(1)
//! ```
//!
//! with `h1(x) = x`, `h2(x) = x^2` and `G_n` the functional empirical
//! process. The influence of `a_hat` is called `H`, that of `b_hat` is `L`,
//! and `Sigma = [[Var H, Cov(H, L)], [Cov(H, L), Var L]]`.
//!
//! [`CoefficientMode::Canonical`] takes the coefficients from the gradient of
//! the estimator map. [`CoefficientMode::Verbatim`] reproduces the literal
//! published coefficient formulas, typographical slips included, so that
//! historical tables can be regenerated; see the book's errata chapter.

use serde::{Deserialize, Serialize};

use crate::distributions::{LawKind, LawSpec};
use crate::error::{Error, Result};
use crate::estimation::{estimator_at_moments, uniform_lambda};
use crate::special::{integrate_unit, QuadratureConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientMode {
    /// Gradient of the estimator map at the law's moments.
    Canonical,
    /// The literal published coefficient formulas.
    Verbatim,
}

impl std::str::FromStr for CoefficientMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "canonical" => Ok(CoefficientMode::Canonical),
            "paper" | "verbatim" => Ok(CoefficientMode::Verbatim),
            other => Err(Error::InvalidConfig(format!(
                "unknown coefficient mode '{other}'"
            ))),
        }
    }
}

/// `c1 * x + c2 * x^2 - center`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadraticInfluence {
    pub c1: f64,
    pub c2: f64,
    /// `E[c1 X + c2 X^2]` under the generating law.
    pub center: f64,
}

impl QuadraticInfluence {
    /// Coefficients centered at the raw moments `(m1, m2)`.
    pub fn centered(c1: f64, c2: f64, m1: f64, m2: f64) -> Self {
        Self {
            c1,
            c2,
            center: c1 * m1 + c2 * m2,
        }
    }

    /// The uncentered value `c1 x + c2 x^2`.
    #[inline]
    pub fn raw(&self, x: f64) -> f64 {
        x * (self.c1 + self.c2 * x)
    }

    #[inline]
    pub fn evaluate(&self, x: f64) -> f64 {
        self.raw(x) - self.center
    }
}

/// Partial derivatives of `(a_hat, b_hat)` with respect to `(m1, m2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaGradient {
    pub da_dm1: f64,
    pub da_dm2: f64,
    pub db_dm1: f64,
    pub db_dm2: f64,
}

/// Analytic gradient of the estimator map at population moments `(m1, m2)`.
pub fn delta_gradient(kind: LawKind, m1: f64, m2: f64) -> Result<DeltaGradient> {
    // feasibility is the estimator's own precondition
    estimator_at_moments(kind, m1, m2)?;
    let v = m2 - m1 * m1;
    let v2 = v * v;
    let g = match kind {
        LawKind::Gamma => DeltaGradient {
            da_dm1: 2.0 * m1 * m2 / v2,
            da_dm2: -m1 * m1 / v2,
            db_dm1: (m2 + m1 * m1) / v2,
            db_dm2: -m1 / v2,
        },
        LawKind::Beta => {
            let num = m1 - m2;
            DeltaGradient {
                da_dm1: ((num + m1) * v + 2.0 * m1 * m1 * num) / v2,
                da_dm2: -m1 * (v + num) / v2,
                db_dm1: ((1.0 - m1 - num) * v + 2.0 * m1 * (1.0 - m1) * num) / v2,
                db_dm2: -(1.0 - m1) * (v + num) / v2,
            }
        }
        LawKind::Uniform => {
            if !(v > 0.0) {
                return Err(Error::Domain {
                    func: "delta_gradient",
                    detail: "uniform gradient needs a positive variance".into(),
                });
            }
            let lambda = uniform_lambda();
            let sd = v.sqrt();
            DeltaGradient {
                da_dm1: 1.0 + lambda * m1 / sd,
                da_dm2: -lambda / (2.0 * sd),
                db_dm1: 1.0 - lambda * m1 / sd,
                db_dm2: lambda / (2.0 * sd),
            }
        }
        LawKind::Fisher => {
            let den = v * (2.0 - m1) - m1 * m1 * (m1 - 1.0);
            let den2 = den * den;
            DeltaGradient {
                da_dm1: 4.0 * m1 / den + 2.0 * m1 * m1 * (2.0 * m1 + m2) / den2,
                da_dm2: -2.0 * m1 * m1 * (2.0 - m1) / den2,
                db_dm1: -2.0 / ((m1 - 1.0) * (m1 - 1.0)),
                db_dm2: 0.0,
            }
        }
    };
    Ok(g)
}

fn verbatim_coefficients(kind: LawKind, mu: f64, m2: f64, var: f64) -> ((f64, f64), (f64, f64)) {
    let var2 = var * var;
    match kind {
        LawKind::Gamma => (
            (2.0 * mu * (var + 1.0) / var2, -mu * mu / var2),
            ((var + 2.0 * mu) / var2, -mu / var2),
        ),
        LawKind::Beta => (
            (
                (var * (2.0 * mu - m2) + 2.0 * mu * mu * (mu - m2)) / var2,
                -(var * mu + mu * (mu - m2)) / var2,
            ),
            (
                (var * (m2 - 2.0 * mu + 1.0) + 2.0 * mu * (1.0 - mu) * (mu - m2)) / var2,
                (mu - 1.0) * (var + mu - m2) / var2,
            ),
        ),
        LawKind::Uniform => {
            let lambda = uniform_lambda();
            let sd = var.sqrt();
            (
                (1.0 + lambda * mu / sd, -lambda / (2.0 * sd)),
                (1.0 - lambda * mu / sd, lambda / (2.0 * sd)),
            )
        }
        LawKind::Fisher => {
            let beta = var + 2.0 * mu * (2.0 - mu) - mu * (3.0 * mu - 2.0);
            (
                (
                    2.0 * mu * (2.0 - mu) / beta,
                    -2.0 * mu * mu * (2.0 - mu) / (beta * beta),
                ),
                (-2.0 / ((mu - 1.0) * (mu - 1.0)), 0.0),
            )
        }
    }
}

/// Influence functions `(H, L)` of `(a_hat, b_hat)` under `law`.
pub fn influence_pair(
    law: &LawSpec,
    mode: CoefficientMode,
) -> Result<(QuadraticInfluence, QuadraticInfluence)> {
    let moments = law.require_moments(2)?;
    let (m1, m2) = (moments.m1.unwrap_or_default(), moments.m2.unwrap_or_default());
    let ((h1, h2), (l1, l2)) = match mode {
        CoefficientMode::Canonical => {
            let g = delta_gradient(law.kind(), m1, m2)?;
            ((g.da_dm1, g.da_dm2), (g.db_dm1, g.db_dm2))
        }
        CoefficientMode::Verbatim => {
            let var = moments.variance.unwrap_or(m2 - m1 * m1);
            verbatim_coefficients(law.kind(), m1, m2, var)
        }
    };
    Ok((
        QuadraticInfluence::centered(h1, h2, m1, m2),
        QuadraticInfluence::centered(l1, l2, m1, m2),
    ))
}

/// How a covariance matrix was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SigmaMethod {
    /// Quadrature of the influence functions over the law's quantile function.
    ExactQuadrature,
    /// Closed form in the first four raw moments.
    ExactMoments,
    /// Sample covariance of `(H(X_i), L(X_i))` on one sample ("EMP").
    PluginSample,
    /// Sample covariance of replicated `sqrt(n)` deviations ("SAMP").
    Replication,
}

impl SigmaMethod {
    pub const ALL: [SigmaMethod; 4] = [
        SigmaMethod::ExactQuadrature,
        SigmaMethod::ExactMoments,
        SigmaMethod::PluginSample,
        SigmaMethod::Replication,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SigmaMethod::ExactQuadrature => "exact_quadrature",
            SigmaMethod::ExactMoments => "exact_moments",
            SigmaMethod::PluginSample => "emp",
            SigmaMethod::Replication => "samp",
        }
    }

    pub fn is_exact(self) -> bool {
        matches!(self, SigmaMethod::ExactQuadrature | SigmaMethod::ExactMoments)
    }
}

impl std::str::FromStr for SigmaMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "exact_quadrature" | "quadrature" => Ok(SigmaMethod::ExactQuadrature),
            "exact_moments" | "exact" | "moments" => Ok(SigmaMethod::ExactMoments),
            "plugin_sample" | "plugin" | "emp" => Ok(SigmaMethod::PluginSample),
            "replication" | "samp" => Ok(SigmaMethod::Replication),
            other => Err(Error::InvalidConfig(format!("unknown sigma method '{other}'"))),
        }
    }
}

/// Symmetric 2x2 covariance `[[s11, s12], [s12, s22]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Covariance2 {
    pub s11: f64,
    pub s22: f64,
    pub s12: f64,
    pub det: f64,
    pub method: SigmaMethod,
}

impl Covariance2 {
    pub fn new(s11: f64, s22: f64, s12: f64, method: SigmaMethod) -> Self {
        Self {
            s11,
            s22,
            s12,
            det: s11 * s22 - s12 * s12,
            method,
        }
    }

    pub fn correlation(&self) -> f64 {
        self.s12 / (self.s11 * self.s22).sqrt()
    }

    /// The matrix with both coordinates exchanged.
    pub fn swapped(&self) -> Self {
        Self::new(self.s22, self.s11, self.s12, self.method)
    }
}

fn bilinear(h: &QuadraticInfluence, l: &QuadraticInfluence, m: [f64; 4]) -> f64 {
    let [m1, m2, m3, m4] = m;
    h.c1 * l.c1 * (m2 - m1 * m1)
        + (h.c1 * l.c2 + h.c2 * l.c1) * (m3 - m1 * m2)
        + h.c2 * l.c2 * (m4 - m2 * m2)
}

/// Closed-form `Sigma` from the raw moments up to order four:
/// `Cov(c1 X + c2 X^2, d1 X + d2 X^2) = c1 d1 Var X + (c1 d2 + c2 d1) Cov(X, X^2) + c2 d2 Var X^2`.
pub fn covariance_exact_moments(
    law: &LawSpec,
    h: &QuadraticInfluence,
    l: &QuadraticInfluence,
) -> Result<Covariance2> {
    let ms = law.require_moments(4)?;
    let m = [
        ms.m1.unwrap_or_default(),
        ms.m2.unwrap_or_default(),
        ms.m3.unwrap_or_default(),
        ms.m4.unwrap_or_default(),
    ];
    Ok(Covariance2::new(
        bilinear(h, h, m),
        bilinear(l, l, m),
        bilinear(h, l, m),
        SigmaMethod::ExactMoments,
    ))
}

/// `Sigma` by integrating the influence functions composed with the
/// quantile function over the unit interval.
pub fn covariance_exact_quadrature(
    law: &LawSpec,
    h: &QuadraticInfluence,
    l: &QuadraticInfluence,
    cfg: &QuadratureConfig,
) -> Result<Covariance2> {
    law.require_moments(4)?;
    let [eh, el, ehh, ell, ehl] = integrate_unit(
        |u| {
            let x = law.quantile_at(u);
            let hv = h.evaluate(x);
            let lv = l.evaluate(x);
            [hv, lv, hv * hv, lv * lv, hv * lv]
        },
        cfg,
    )?;
    Ok(Covariance2::new(
        ehh - eh * eh,
        ell - el * el,
        ehl - eh * el,
        SigmaMethod::ExactQuadrature,
    ))
}

fn sample_covariance(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (&x, &y) in xs.iter().zip(ys) {
        let dx = x - mx;
        let dy = y - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    let d = n - 1.0;
    (sxx / d, syy / d, sxy / d)
}

/// Plug-in `Sigma`: sample covariance (divisor `n - 1`) of `H(X_i)` and
/// `L(X_i)` with the fixed coefficients of the hypothesized law.
pub fn covariance_plugin(
    sample: &[f64],
    h: &QuadraticInfluence,
    l: &QuadraticInfluence,
) -> Result<Covariance2> {
    if sample.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: sample.len(),
        });
    }
    let hs: Vec<f64> = sample.iter().map(|&x| h.raw(x)).collect();
    let ls: Vec<f64> = sample.iter().map(|&x| l.raw(x)).collect();
    let (s11, s22, s12) = sample_covariance(&hs, &ls);
    Ok(Covariance2::new(s11, s22, s12, SigmaMethod::PluginSample))
}

/// Replication `Sigma`: sample covariance of paired deviations
/// `sqrt(n) (a_hat - a)` and `sqrt(n) (b_hat - b)`.
pub fn covariance_replication(dev_a: &[f64], dev_b: &[f64]) -> Result<Covariance2> {
    if dev_a.len() != dev_b.len() {
        return Err(Error::LengthMismatch {
            left: dev_a.len(),
            right: dev_b.len(),
        });
    }
    if dev_a.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: dev_a.len(),
        });
    }
    let (s11, s22, s12) = sample_covariance(dev_a, dev_b);
    Ok(Covariance2::new(s11, s22, s12, SigmaMethod::Replication))
}
