//! Replicated estimation under a known law.
//!
//! Replication `j` (1-based) draws `n` values from a generator seeded with
//! [`derive_seed`]`(master_seed, j)`, estimates `(a, b)` and records
//!
//! * `achap`, `bchap`: the estimates,
//! * `DA = sqrt(n) (achap - a)`, `DB = sqrt(n) (bchap - b)`,
//! * `VH`, `VL`: sample standard deviations of `H(X_i)` and `L(X_i)`,
//! * `VHL`: sample covariance of `H(X_i)` and `L(X_i)`.
//!
//! Replications whose estimator preconditions fail are counted in
//! `infeasible_count` and dropped. Replications may run on any number of
//! threads; results are gathered in index order, so reports do not depend on
//! the worker count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    covariance_exact_moments, covariance_exact_quadrature, covariance_plugin,
    covariance_replication, influence_pair, CoefficientMode, Covariance2, QuadraticInfluence,
    SigmaMethod,
};
use crate::distributions::LawSpec;
use crate::error::{Error, Result};
use crate::estimation::{empirical_moments, estimate};
use crate::rng::{derive_seed, SplitMix64};
use crate::special::{normal_pdf, normal_quantile, QuadratureConfig};
use crate::testing::{marginal_test, omnibus_test};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub law: LawSpec,
    pub n: usize,
    pub replications: usize,
    pub master_seed: u64,
    pub coefficient_mode: CoefficientMode,
    pub sigma_methods: Vec<SigmaMethod>,
    pub quadrature: QuadratureConfig,
    /// Thread count; `None` uses the global default. Never affects results.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl SimulationConfig {
    /// Canonical coefficients and every `Sigma` method the law supports.
    pub fn new(law: LawSpec, n: usize, replications: usize, master_seed: u64) -> Self {
        Self {
            law,
            n,
            replications,
            master_seed,
            coefficient_mode: CoefficientMode::Canonical,
            sigma_methods: default_sigma_methods(&law),
            quadrature: QuadratureConfig::default(),
            workers: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidConfig(format!("n must be at least 2, got {}", self.n)));
        }
        if self.replications < 2 {
            return Err(Error::InvalidConfig(format!(
                "replication count must be at least 2, got {}",
                self.replications
            )));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidConfig("workers must be positive".into()));
        }
        if self.sigma_methods.iter().any(|m| m.is_exact()) {
            self.law.require_moments(4)?;
        }
        self.quadrature.validate()
    }
}

/// `exact_moments`, `emp` and `samp`, dropping the exact method when the
/// fourth moment does not exist.
pub fn default_sigma_methods(law: &LawSpec) -> Vec<SigmaMethod> {
    let mut methods = Vec::with_capacity(3);
    if law.require_moments(4).is_ok() {
        methods.push(SigmaMethod::ExactMoments);
    }
    methods.push(SigmaMethod::PluginSample);
    methods.push(SigmaMethod::Replication);
    methods
}

/// `ME`, `MAE`, `RMSE` and the standard deviation (divisor `B - 1`) of one
/// parameter's estimates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub me: f64,
    pub mae: f64,
    pub rmse: f64,
    pub sd: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorTable {
    pub a: ErrorStats,
    pub b: ErrorStats,
}

fn error_stats(est: &[f64], truth: f64) -> ErrorStats {
    let k = est.len() as f64;
    let (mut s, mut sa, mut s2) = (0.0, 0.0, 0.0);
    for &e in est {
        let d = e - truth;
        s += d;
        sa += d.abs();
        s2 += d * d;
    }
    let me = s / k;
    let sd = (est.len() >= 2).then(|| {
        let ss: f64 = est.iter().map(|&e| (e - truth - me).powi(2)).sum();
        (ss / (k - 1.0)).sqrt()
    });
    ErrorStats {
        me,
        mae: sa / k,
        rmse: (s2 / k).sqrt(),
        sd,
    }
}

pub fn error_table(achap: &[f64], bchap: &[f64], a: f64, b: f64) -> Result<ErrorTable> {
    if achap.is_empty() || bchap.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    if achap.len() != bchap.len() {
        return Err(Error::LengthMismatch {
            left: achap.len(),
            right: bchap.len(),
        });
    }
    Ok(ErrorTable {
        a: error_stats(achap, a),
        b: error_stats(bchap, b),
    })
}

/// One row of the over/under-estimation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioRow {
    pub name: String,
    /// Estimated entry over exact entry.
    pub variance_ratio: f64,
    /// Square root of `variance_ratio` for diagonal rows; equal to it for
    /// the covariance rows.
    pub sd_ratio: f64,
}

/// Six ratios of estimated to exact `Sigma` entries, in the order
/// `1emp, 2emp, 12emp, 1samp, 2samp, 12samp`.
pub fn ratio_table(
    plugin: &Covariance2,
    replication: &Covariance2,
    exact: &Covariance2,
) -> Result<Vec<RatioRow>> {
    for (name, v) in [("s11", exact.s11), ("s22", exact.s22), ("s12", exact.s12)] {
        if v == 0.0 || !v.is_finite() {
            return Err(Error::DegenerateVariance(format!(
                "exact {name} = {v} cannot be a ratio denominator"
            )));
        }
    }
    let mut rows = Vec::with_capacity(6);
    for (tag, est) in [("emp", plugin), ("samp", replication)] {
        for (slot, num, den, diagonal) in [
            ("1", est.s11, exact.s11, true),
            ("2", est.s22, exact.s22, true),
            ("12", est.s12, exact.s12, false),
        ] {
            let r = num / den;
            rows.push(RatioRow {
                name: format!("Qsig-{slot}{tag}"),
                variance_ratio: r,
                sd_ratio: if diagonal { r.sqrt() } else { r },
            });
        }
    }
    Ok(rows)
}

/// Marginal rejection frequencies for one `Sigma` method. `None` marks a
/// nonpositive variance entry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalRow {
    pub method: SigmaMethod,
    pub reject_a: Option<f64>,
    pub reject_b: Option<f64>,
}

/// Omnibus rejection frequency for one `Sigma` method. `None` marks a
/// singular `Sigma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OmnibusRow {
    pub method: SigmaMethod,
    pub reject: Option<f64>,
    pub det: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub config: SimulationConfig,
    pub influence_h: QuadraticInfluence,
    pub influence_l: QuadraticInfluence,
    pub infeasible_count: usize,
    /// 1-based indices of the kept replications.
    pub indices: Vec<u64>,
    pub achap: Vec<f64>,
    pub bchap: Vec<f64>,
    pub da: Vec<f64>,
    pub db: Vec<f64>,
    pub vh: Vec<f64>,
    pub vl: Vec<f64>,
    pub vhl: Vec<f64>,
    pub sigmas: Vec<Covariance2>,
    pub error_table: ErrorTable,
    pub ratio_table: Option<Vec<RatioRow>>,
    pub pvalue_table: Vec<MarginalRow>,
    pub omnibus: Vec<OmnibusRow>,
}

impl SimulationReport {
    pub fn sigma(&self, method: SigmaMethod) -> Option<&Covariance2> {
        self.sigmas.iter().find(|s| s.method == method)
    }

    /// The exact `Sigma`, preferring the moment formula over quadrature.
    pub fn exact_sigma(&self) -> Option<&Covariance2> {
        self.sigma(SigmaMethod::ExactMoments)
            .or_else(|| self.sigma(SigmaMethod::ExactQuadrature))
    }

    /// Omnibus p-values of every kept replication under `sigma`.
    pub fn omnibus_p_values(&self, sigma: &Covariance2) -> Result<Vec<f64>> {
        let (a, b, n) = (self.config.law.a(), self.config.law.b(), self.config.n);
        self.achap
            .iter()
            .zip(&self.bchap)
            .map(|(&ah, &bh)| omnibus_test(ah, bh, a, b, n, sigma).map(|r| r.p_value))
            .collect()
    }

    /// `DA / sqrt(s11)` and `DB / sqrt(s22)` under `sigma`.
    pub fn standardized(&self, sigma: &Covariance2) -> (Vec<f64>, Vec<f64>) {
        let (sa, sb) = (sigma.s11.sqrt(), sigma.s22.sqrt());
        (
            self.da.iter().map(|d| d / sa).collect(),
            self.db.iter().map(|d| d / sb).collect(),
        )
    }
}

struct Replication {
    index: u64,
    achap: f64,
    bchap: f64,
    vh: f64,
    vl: f64,
    vhl: f64,
}

fn replicate(
    law: &LawSpec,
    index: u64,
    master_seed: u64,
    h: &QuadraticInfluence,
    l: &QuadraticInfluence,
    buf: &mut [f64],
) -> Option<Replication> {
    let mut rng = SplitMix64::new(derive_seed(master_seed, index));
    law.sample_into(&mut rng, buf);
    let em = empirical_moments(buf).ok()?;
    let est = estimate(law.kind(), &em).ok()?;
    if !est.a_hat.is_finite() || !est.b_hat.is_finite() {
        return None;
    }
    let plug = covariance_plugin(buf, h, l).ok()?;
    Some(Replication {
        index,
        achap: est.a_hat,
        bchap: est.b_hat,
        vh: plug.s11.sqrt(),
        vl: plug.s22.sqrt(),
        vhl: plug.s12,
    })
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Aggregated plug-in `Sigma`: mean of squared standard deviations in
/// canonical mode, square of the mean standard deviation in verbatim mode.
fn plugin_aggregate(vh: &[f64], vl: &[f64], vhl: &[f64], mode: CoefficientMode) -> Covariance2 {
    let (s11, s22) = match mode {
        CoefficientMode::Canonical => (
            vh.iter().map(|v| v * v).sum::<f64>() / vh.len() as f64,
            vl.iter().map(|v| v * v).sum::<f64>() / vl.len() as f64,
        ),
        CoefficientMode::Verbatim => (mean(vh).powi(2), mean(vl).powi(2)),
    };
    Covariance2::new(s11, s22, mean(vhl), SigmaMethod::PluginSample)
}

fn frequency(hits: impl Iterator<Item = Result<bool>>) -> Option<f64> {
    let mut count = 0usize;
    let mut total = 0usize;
    for h in hits {
        total += 1;
        if h.ok()? {
            count += 1;
        }
    }
    (total > 0).then(|| count as f64 / total as f64)
}

pub fn run_simulation(cfg: &SimulationConfig) -> Result<SimulationReport> {
    cfg.validate()?;
    let law = cfg.law;
    let (h, l) = influence_pair(&law, cfg.coefficient_mode)?;
    let n = cfg.n;
    let seed = cfg.master_seed;

    let work = || -> Vec<Option<Replication>> {
        (1..=cfg.replications as u64)
            .into_par_iter()
            .map_init(
                || vec![0.0; n],
                |buf, j| replicate(&law, j, seed, &h, &l, buf),
            )
            .collect()
    };
    let results = match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };

    let kept: Vec<Replication> = results.into_iter().flatten().collect();
    let infeasible_count = cfg.replications - kept.len();
    if kept.is_empty() {
        return Err(Error::AllInfeasible {
            replications: cfg.replications,
        });
    }
    let root_n = (n as f64).sqrt();
    let (a, b) = (law.a(), law.b());
    let indices: Vec<u64> = kept.iter().map(|r| r.index).collect();
    let achap: Vec<f64> = kept.iter().map(|r| r.achap).collect();
    let bchap: Vec<f64> = kept.iter().map(|r| r.bchap).collect();
    let da: Vec<f64> = achap.iter().map(|x| root_n * (x - a)).collect();
    let db: Vec<f64> = bchap.iter().map(|x| root_n * (x - b)).collect();
    let vh: Vec<f64> = kept.iter().map(|r| r.vh).collect();
    let vl: Vec<f64> = kept.iter().map(|r| r.vl).collect();
    let vhl: Vec<f64> = kept.iter().map(|r| r.vhl).collect();

    let mut sigmas = Vec::with_capacity(cfg.sigma_methods.len());
    for &method in &cfg.sigma_methods {
        let s = match method {
            SigmaMethod::ExactMoments => covariance_exact_moments(&law, &h, &l)?,
            SigmaMethod::ExactQuadrature => {
                covariance_exact_quadrature(&law, &h, &l, &cfg.quadrature)?
            }
            SigmaMethod::PluginSample => plugin_aggregate(&vh, &vl, &vhl, cfg.coefficient_mode),
            SigmaMethod::Replication => match covariance_replication(&da, &db) {
                Ok(s) => s,
                // a single kept replication has no spread
                Err(Error::InsufficientData { .. }) => {
                    Covariance2::new(0.0, 0.0, 0.0, SigmaMethod::Replication)
                }
                Err(e) => return Err(e),
            },
        };
        sigmas.push(s);
    }

    let pvalue_table = sigmas
        .iter()
        .map(|s| MarginalRow {
            method: s.method,
            reject_a: frequency(
                achap
                    .iter()
                    .map(|&x| marginal_test(x, a, s.s11, n).map(|r| r.reject_at_5pct)),
            ),
            reject_b: frequency(
                bchap
                    .iter()
                    .map(|&x| marginal_test(x, b, s.s22, n).map(|r| r.reject_at_5pct)),
            ),
        })
        .collect();
    let omnibus = sigmas
        .iter()
        .map(|s| OmnibusRow {
            method: s.method,
            reject: frequency(
                achap
                    .iter()
                    .zip(&bchap)
                    .map(|(&x, &y)| omnibus_test(x, y, a, b, n, s).map(|r| r.reject_at_5pct)),
            ),
            det: s.det,
        })
        .collect();

    let error_table = error_table(&achap, &bchap, a, b)?;
    let find = |m| sigmas.iter().find(|s: &&Covariance2| s.method == m);
    let exact = find(SigmaMethod::ExactMoments).or_else(|| find(SigmaMethod::ExactQuadrature));
    let ratio_table = match (
        find(SigmaMethod::PluginSample),
        find(SigmaMethod::Replication),
        exact,
    ) {
        (Some(p), Some(r), Some(e)) => ratio_table(p, r, e).ok(),
        _ => None,
    };

    Ok(SimulationReport {
        config: cfg.clone(),
        influence_h: h,
        influence_l: l,
        infeasible_count,
        indices,
        achap,
        bchap,
        da,
        db,
        vh,
        vl,
        vhl,
        sigmas,
        error_table,
        ratio_table,
        pvalue_table,
        omnibus,
    })
}

/// Sorted `values` paired with `normal_quantile((i - 0.5) / n)`.
pub fn qq_plot_data(values: &[f64]) -> Result<Vec<(f64, f64)>> {
    if values.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: values.len(),
        });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .into_iter()
        .enumerate()
        .map(|(i, y)| Ok((normal_quantile((i as f64 + 0.5) / n)?, y)))
        .collect()
}

/// Pearson correlation of the QQ points.
pub fn qq_correlation(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
        sxy += (x - mx) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Linear-interpolation quantile of sorted data (the usual "type 7").
fn sorted_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `0.9 min(sd, IQR / 1.34) n^(-1/5)`, using `sd` alone when the IQR is zero.
pub fn silverman_bandwidth(values: &[f64]) -> Result<f64> {
    if values.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: values.len(),
        });
    }
    let n = values.len() as f64;
    let m = mean(values);
    let sd = (values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)).sqrt();
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let iqr = sorted_quantile(&sorted, 0.75) - sorted_quantile(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    if !(spread > 0.0) {
        return Err(Error::DegenerateSample(
            "zero spread sample needs an explicit bandwidth".into(),
        ));
    }
    Ok(0.9 * spread * n.powf(-0.2))
}

/// Gaussian kernel density estimate on `grid_points` equally spaced points
/// of `[grid_lo, grid_hi]`.
pub fn parzen_density(
    values: &[f64],
    grid_lo: f64,
    grid_hi: f64,
    grid_points: usize,
    bandwidth: Option<f64>,
) -> Result<Vec<(f64, f64)>> {
    if values.len() < 2 {
        return Err(Error::InsufficientData {
            needed: 2,
            got: values.len(),
        });
    }
    if !(grid_lo < grid_hi) || grid_points < 2 {
        return Err(Error::InvalidConfig(format!(
            "need grid_lo < grid_hi and at least 2 points, got [{grid_lo}, {grid_hi}] with {grid_points}"
        )));
    }
    let bw = match bandwidth {
        Some(bw) if bw > 0.0 && bw.is_finite() => bw,
        Some(bw) => {
            return Err(Error::InvalidConfig(format!(
                "bandwidth must be positive, got {bw}"
            )))
        }
        None => silverman_bandwidth(values)?,
    };
    let n = values.len() as f64;
    let step = (grid_hi - grid_lo) / (grid_points - 1) as f64;
    Ok((0..grid_points)
        .map(|i| {
            let x = if i + 1 == grid_points {
                grid_hi
            } else {
                grid_lo + step * i as f64
            };
            let d = values.iter().map(|&v| normal_pdf((x - v) / bw)).sum::<f64>() / (n * bw);
            (x, d)
        })
        .collect())
}
