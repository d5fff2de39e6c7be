//! The four parametric laws.
//!
//! | law | parameters | support | mean | variance |
//! |---|---|---|---|---|
//! | Gamma | shape `a`, rate `b` | `[0, inf)` | `a/b` | `a/b^2` |
//! | Beta | `a`, `b` | `[0, 1]` | `a/(a+b)` | `ab/((a+b)^2 (a+b+1))` |
//! | Uniform | `a < b` | `[a, b]` | `(a+b)/2` | `(b-a)^2/12` |
//! | Fisher | d.o.f. `a`, `b` | `[0, inf)` | `b/(b-2)` | `2b^2(a+b-2)/(a(b-2)^2(b-4))` |
//!
//! The Fisher density is the canonical F-density
//! `(a x)^(a/2) b^(b/2) / ((a x + b)^((a+b)/2) x B(a/2, b/2))`.
//! Fisher moments of order `k` exist only for `b > 2k`; [`MomentSet`] marks
//! the missing ones as `None`.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::rng::SplitMix64;
use crate::special::{
    beta_inc_pair, gamma_inc_pair, inv_beta_inc_pair, inv_gamma_inc, ln_beta_unchecked,
    ln_gamma, xlogy, UnitPoint,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LawKind {
    Gamma,
    Beta,
    Uniform,
    Fisher,
}

impl LawKind {
    pub const ALL: [LawKind; 4] = [
        LawKind::Gamma,
        LawKind::Beta,
        LawKind::Uniform,
        LawKind::Fisher,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LawKind::Gamma => "gamma",
            LawKind::Beta => "beta",
            LawKind::Uniform => "uniform",
            LawKind::Fisher => "fisher",
        }
    }
}

impl std::fmt::Display for LawKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for LawKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "gamma" => Ok(LawKind::Gamma),
            "beta" => Ok(LawKind::Beta),
            "uniform" => Ok(LawKind::Uniform),
            "fisher" | "f" => Ok(LawKind::Fisher),
            other => Err(Error::InvalidParameters(format!("unknown law '{other}'"))),
        }
    }
}

/// A law together with its parameter pair `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLaw", into = "RawLaw")]
pub struct LawSpec {
    kind: LawKind,
    a: f64,
    b: f64,
}

#[derive(Serialize, Deserialize)]
struct RawLaw {
    kind: LawKind,
    a: f64,
    b: f64,
}

impl TryFrom<RawLaw> for LawSpec {
    type Error = Error;
    fn try_from(r: RawLaw) -> Result<Self> {
        LawSpec::new(r.kind, r.a, r.b)
    }
}

impl From<LawSpec> for RawLaw {
    fn from(l: LawSpec) -> Self {
        RawLaw {
            kind: l.kind,
            a: l.a,
            b: l.b,
        }
    }
}

/// Raw moments `E X^k` for `k = 1..4` and the variance, each `None` when it
/// does not exist for the parameters at hand.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub m1: Option<f64>,
    pub m2: Option<f64>,
    pub m3: Option<f64>,
    pub m4: Option<f64>,
    pub variance: Option<f64>,
}

impl MomentSet {
    pub fn raw(&self, order: u8) -> Option<f64> {
        match order {
            1 => self.m1,
            2 => self.m2,
            3 => self.m3,
            4 => self.m4,
            _ => None,
        }
    }
}

fn ordinal(order: u8) -> &'static str {
    match order {
        1 => "first moment",
        2 => "second moment",
        3 => "third moment",
        _ => "fourth moment",
    }
}

impl LawSpec {
    pub fn new(kind: LawKind, a: f64, b: f64) -> Result<Self> {
        if !a.is_finite() || !b.is_finite() {
            return Err(Error::InvalidParameters(format!(
                "{kind} parameters must be finite, got a={a}, b={b}"
            )));
        }
        let ok = match kind {
            LawKind::Uniform => b > a,
            _ => a > 0.0 && b > 0.0,
        };
        if !ok {
            let need = match kind {
                LawKind::Uniform => "b > a",
                _ => "a > 0 and b > 0",
            };
            return Err(Error::InvalidParameters(format!(
                "{kind} requires {need}, got a={a}, b={b}"
            )));
        }
        Ok(Self { kind, a, b })
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        Self::new(LawKind::Gamma, shape, rate)
    }

    pub fn beta(a: f64, b: f64) -> Result<Self> {
        Self::new(LawKind::Beta, a, b)
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        Self::new(LawKind::Uniform, lo, hi)
    }

    pub fn fisher(d1: f64, d2: f64) -> Result<Self> {
        Self::new(LawKind::Fisher, d1, d2)
    }

    pub fn kind(&self) -> LawKind {
        self.kind
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// Closed interval containing the support.
    pub fn support(&self) -> (f64, f64) {
        match self.kind {
            LawKind::Gamma | LawKind::Fisher => (0.0, f64::INFINITY),
            LawKind::Beta => (0.0, 1.0),
            LawKind::Uniform => (self.a, self.b),
        }
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if !(x >= lo && x <= hi) || x.is_infinite() {
            return f64::NEG_INFINITY;
        }
        let (a, b) = (self.a, self.b);
        match self.kind {
            LawKind::Gamma => {
                a * b.ln() - ln_gamma(a).unwrap_or(f64::NAN) + xlogy(a - 1.0, x) - b * x
            }
            LawKind::Beta => {
                xlogy(a - 1.0, x) + xlogy(b - 1.0, 1.0 - x) - ln_beta_unchecked(a, b)
            }
            LawKind::Uniform => -(b - a).ln(),
            LawKind::Fisher => {
                if x == 0.0 {
                    return xlogy(0.5 * a - 1.0, 0.0) + 0.5 * a * (a / b).ln()
                        - ln_beta_unchecked(0.5 * a, 0.5 * b);
                }
                0.5 * a * (a * x).ln() + 0.5 * b * b.ln()
                    - 0.5 * (a + b) * (a * x + b).ln()
                    - x.ln()
                    - ln_beta_unchecked(0.5 * a, 0.5 * b)
            }
        }
    }

    /// Density; zero outside the support.
    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    /// `(F(x), 1 - F(x))`, each with full relative precision.
    pub fn cdf_pair(&self, x: f64) -> (f64, f64) {
        let (lo, hi) = self.support();
        if x <= lo {
            return (0.0, 1.0);
        }
        if x >= hi {
            return (1.0, 0.0);
        }
        let (a, b) = (self.a, self.b);
        match self.kind {
            LawKind::Gamma => gamma_inc_pair(a, b * x),
            LawKind::Beta => beta_inc_pair(a, b, x, 1.0 - x),
            LawKind::Uniform => {
                let w = b - a;
                ((x - a) / w, (b - x) / w)
            }
            LawKind::Fisher => {
                let den = a * x + b;
                beta_inc_pair(0.5 * a, 0.5 * b, a * x / den, b / den)
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        self.cdf_pair(x).0
    }

    pub fn sf(&self, x: f64) -> f64 {
        self.cdf_pair(x).1
    }

    /// Quantile at `(p, q = 1 - p)`; the smaller of the two drives the
    /// inversion.
    pub fn quantile_at(&self, u: UnitPoint) -> f64 {
        let (a, b) = (self.a, self.b);
        match self.kind {
            LawKind::Gamma => inv_gamma_inc(a, u.p, u.q) / b,
            LawKind::Beta => inv_beta_inc_pair(a, b, u.p, u.q).0,
            LawKind::Uniform => {
                if u.p <= u.q {
                    a + (b - a) * u.p
                } else {
                    b - (b - a) * u.q
                }
            }
            LawKind::Fisher => {
                let (y, w) = inv_beta_inc_pair(0.5 * a, 0.5 * b, u.p, u.q);
                (b / a) * (y / w)
            }
        }
    }

    /// Generalized inverse of [`LawSpec::cdf`] on the open unit interval.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(domain(
                "quantile",
                format!("probability must lie in (0,1), got {u}"),
            ));
        }
        Ok(self.quantile_at(UnitPoint::new(u)))
    }

    /// One draw from the law.
    #[inline]
    pub fn draw(&self, rng: &mut SplitMix64) -> f64 {
        let (a, b) = (self.a, self.b);
        match self.kind {
            LawKind::Gamma => rng.next_gamma(a) / b,
            LawKind::Beta => {
                let g1 = rng.next_gamma(a);
                let g2 = rng.next_gamma(b);
                g1 / (g1 + g2)
            }
            LawKind::Uniform => a + (b - a) * rng.next_f64(),
            LawKind::Fisher => {
                // (chi2_a / a) / (chi2_b / b) with chi2_k = 2 G(k/2)
                let c1 = 2.0 * rng.next_gamma(0.5 * a);
                let c2 = 2.0 * rng.next_gamma(0.5 * b);
                (c1 / a) / (c2 / b)
            }
        }
    }

    /// Fills `out` with i.i.d. draws from `rng`.
    pub fn sample_into(&self, rng: &mut SplitMix64, out: &mut [f64]) {
        for x in out.iter_mut() {
            *x = self.draw(rng);
        }
    }

    /// `n` i.i.d. draws, deterministic in `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Vec<f64> {
        let mut rng = SplitMix64::new(seed);
        let mut out = vec![0.0; n];
        self.sample_into(&mut rng, &mut out);
        out
    }

    /// Raw moment `E X^k` if it exists.
    pub fn raw_moment(&self, k: u8) -> Option<f64> {
        let (a, b) = (self.a, self.b);
        let k_f = k as f64;
        match self.kind {
            LawKind::Gamma => Some((0..k).map(|j| (a + j as f64) / b).product()),
            LawKind::Beta => Some(
                (0..k)
                    .map(|j| (a + j as f64) / (a + b + j as f64))
                    .product(),
            ),
            LawKind::Uniform => {
                let kp = k_f + 1.0;
                Some((b.powf(kp) - a.powf(kp)) / (kp * (b - a)))
            }
            LawKind::Fisher => {
                if b <= 2.0 * k_f {
                    return None;
                }
                // E X^k = (b/a)^k prod_{j<k} (a/2 + j) / (b/2 - 1 - j)
                Some(
                    (0..k)
                        .map(|j| {
                            let j = j as f64;
                            (b / a) * (0.5 * a + j) / (0.5 * b - 1.0 - j)
                        })
                        .product(),
                )
            }
        }
    }

    pub fn theoretical_moments(&self) -> MomentSet {
        let m1 = self.raw_moment(1);
        let m2 = self.raw_moment(2);
        let (a, b) = (self.a, self.b);
        let variance = match self.kind {
            LawKind::Gamma => Some(a / (b * b)),
            LawKind::Beta => Some(a * b / ((a + b) * (a + b) * (a + b + 1.0))),
            LawKind::Uniform => Some((b - a) * (b - a) / 12.0),
            LawKind::Fisher => (b > 4.0).then(|| {
                2.0 * b * b * (a + b - 2.0) / (a * (b - 2.0) * (b - 2.0) * (b - 4.0))
            }),
        };
        MomentSet {
            m1,
            m2,
            m3: self.raw_moment(3),
            m4: self.raw_moment(4),
            variance,
        }
    }

    /// Raw moments up to `order`, or a typed error naming the missing one.
    pub fn require_moments(&self, order: u8) -> Result<MomentSet> {
        let set = self.theoretical_moments();
        for k in (1..=order).rev() {
            if set.raw(k).is_none() {
                return Err(Error::MomentUnavailable {
                    what: ordinal(k),
                    requirement: format!("b>{}", 2 * k),
                });
            }
        }
        Ok(set)
    }
}

impl std::fmt::Display for LawSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}({}, {})", self.kind, self.a, self.b)
    }
}
