use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Offset used in place of a unit-interval endpoint whose integrand value is
/// not finite (quantile integrands diverge at 0 or 1 for unbounded laws).
pub const ENDPOINT_EPSILON: f64 = 1e-9;

/// Half-width of the tanh-sinh parameter range. At `s = 5` the distance to
/// the nearest endpoint is about `1e-101`.
const TANH_SINH_HALF_WIDTH: f64 = 5.0;

/// Grid on which the composite trapezoid is applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuadratureRule {
    /// Uniform grid on the integration interval. Non-finite endpoint values
    /// are replaced by evaluations at [`ENDPOINT_EPSILON`] from the endpoint.
    Trapezoid,
    /// Uniform grid in the variable `s` of the substitution
    /// `u = 1 / (1 + exp(-pi sinh s))`, which clusters nodes at both ends and
    /// turns endpoint singularities into rapidly decaying tails.
    TanhSinh,
}

/// Composite trapezoid settings: initial panel count, absolute tolerance on
/// successive estimates, and the maximum number of panel doublings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub panels: usize,
    pub tol: f64,
    pub max_doublings: u32,
    pub rule: QuadratureRule,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            panels: 100,
            tol: 1e-8,
            max_doublings: 12,
            rule: QuadratureRule::TanhSinh,
        }
    }
}

impl QuadratureConfig {
    pub fn new(panels: usize, tol: f64, max_doublings: u32, rule: QuadratureRule) -> Result<Self> {
        let cfg = Self {
            panels,
            tol,
            max_doublings,
            rule,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Uniform trapezoid with 100 starting panels and tolerance `1e-4`.
    pub fn script() -> Self {
        Self {
            panels: 100,
            tol: 1e-4,
            max_doublings: 10,
            rule: QuadratureRule::Trapezoid,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.panels < 2 {
            return Err(Error::InvalidConfig(format!(
                "quadrature needs at least 2 panels, got {}",
                self.panels
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "quadrature tolerance must be positive, got {}",
                self.tol
            )));
        }
        if self.max_doublings < 1 {
            return Err(Error::InvalidConfig(
                "quadrature needs at least one doubling".into(),
            ));
        }
        Ok(())
    }
}

/// A point of the open unit interval together with its complement, both
/// carried at full precision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitPoint {
    pub p: f64,
    pub q: f64,
}

impl UnitPoint {
    pub fn new(p: f64) -> Self {
        Self { p, q: 1.0 - p }
    }
}

fn eval_checked<const K: usize>(
    f: &mut impl FnMut(UnitPoint) -> [f64; K],
    at: UnitPoint,
) -> Result<[f64; K]> {
    let v = f(at);
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        Err(Error::Evaluation { abscissa: at.p })
    }
}

fn eval_endpoint<const K: usize>(
    f: &mut impl FnMut(UnitPoint) -> [f64; K],
    at: UnitPoint,
    shifted: UnitPoint,
) -> Result<[f64; K]> {
    let v = f(at);
    if v.iter().all(|x| x.is_finite()) {
        Ok(v)
    } else {
        eval_checked(f, shifted)
    }
}

fn tanh_sinh_node(s: f64) -> (UnitPoint, f64) {
    let t = std::f64::consts::PI * s.sinh();
    let p = 1.0 / (1.0 + (-t).exp());
    let q = 1.0 / (1.0 + t.exp());
    let w = std::f64::consts::PI * s.cosh() * p * q;
    (UnitPoint { p, q }, w)
}

/// Integrates a vector-valued function over the open unit interval.
///
/// All components share one grid; refinement stops once every component
/// changes by less than `cfg.tol` between successive doublings, or after
/// `cfg.max_doublings`, in which case the last estimate is returned.
/// Summation runs left to right over the grid.
pub fn integrate_unit<const K: usize>(
    mut f: impl FnMut(UnitPoint) -> [f64; K],
    cfg: &QuadratureConfig,
) -> Result<[f64; K]> {
    cfg.validate()?;
    let n0 = cfg.panels;
    let (mut estimate, node): (_, Box<dyn Fn(usize, usize) -> (UnitPoint, f64)>) = match cfg.rule
    {
        QuadratureRule::Trapezoid => {
            let node = |i: usize, n: usize| {
                let p = i as f64 / n as f64;
                let q = (n - i) as f64 / n as f64;
                (UnitPoint { p, q }, 1.0)
            };
            let lo = eval_endpoint(
                &mut f,
                UnitPoint { p: 0.0, q: 1.0 },
                UnitPoint::new(ENDPOINT_EPSILON),
            )?;
            let hi = eval_endpoint(
                &mut f,
                UnitPoint { p: 1.0, q: 0.0 },
                UnitPoint {
                    p: 1.0 - ENDPOINT_EPSILON,
                    q: ENDPOINT_EPSILON,
                },
            )?;
            let mut sum = [0.0; K];
            for k in 0..K {
                sum[k] = 0.5 * lo[k];
            }
            for i in 1..n0 {
                let (at, _) = node(i, n0);
                let v = eval_checked(&mut f, at)?;
                for k in 0..K {
                    sum[k] += v[k];
                }
            }
            for k in 0..K {
                sum[k] = (sum[k] + 0.5 * hi[k]) / n0 as f64;
            }
            (sum, Box::new(node))
        }
        QuadratureRule::TanhSinh => {
            let half = TANH_SINH_HALF_WIDTH;
            let node = move |i: usize, n: usize| {
                let s = -half + 2.0 * half * i as f64 / n as f64;
                tanh_sinh_node(s)
            };
            let h = 2.0 * half / n0 as f64;
            let mut sum = [0.0; K];
            for i in 0..=n0 {
                let (at, w) = node(i, n0);
                let v = eval_checked(&mut f, at)?;
                let w = if i == 0 || i == n0 { 0.5 * w } else { w };
                for k in 0..K {
                    sum[k] += w * v[k];
                }
            }
            for s in sum.iter_mut() {
                *s *= h;
            }
            (sum, Box::new(node))
        }
    };
    let width = match cfg.rule {
        QuadratureRule::Trapezoid => 1.0,
        QuadratureRule::TanhSinh => 2.0 * TANH_SINH_HALF_WIDTH,
    };

    let mut n = n0;
    for _ in 0..cfg.max_doublings {
        let n2 = 2 * n;
        let h2 = width / n2 as f64;
        let mut fresh = [0.0; K];
        for j in 0..n {
            let (at, w) = node(2 * j + 1, n2);
            let v = eval_checked(&mut f, at)?;
            for k in 0..K {
                fresh[k] += w * v[k];
            }
        }
        let mut next = [0.0; K];
        let mut change = 0.0f64;
        for k in 0..K {
            next[k] = 0.5 * estimate[k] + h2 * fresh[k];
            change = change.max((next[k] - estimate[k]).abs());
        }
        estimate = next;
        n = n2;
        if change < cfg.tol {
            break;
        }
    }
    Ok(estimate)
}

/// Integrates `f` over `(lo, hi)`.
pub fn trapezoid_integrate(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    cfg: &QuadratureConfig,
) -> Result<f64> {
    if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
        return Err(crate::error::domain(
            "trapezoid_integrate",
            format!("need finite lo < hi, got ({lo}, {hi})"),
        ));
    }
    let width = hi - lo;
    let [v] = integrate_unit(
        |u| {
            let x = if u.p <= 0.5 {
                lo + width * u.p
            } else {
                hi - width * u.q
            };
            [f(x)]
        },
        cfg,
    )
    .map_err(|e| match e {
        Error::Evaluation { abscissa } => Error::Evaluation {
            abscissa: lo + width * abscissa,
        },
        other => other,
    })?;
    Ok(width * v)
}
