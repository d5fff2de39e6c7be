//! On-disk form of a [`SimulationReport`].
//!
//! Every table is a comma-separated file with a header row. Missing values
//! (a singular `Sigma`, a nonpositive variance) are empty fields.
//!
//! | file | columns |
//! |---|---|
//! | `error_table.csv` | `parameter,truth,me,mae,rmse,sd` |
//! | `ratio_table.csv` | `row,variance_ratio,sd_ratio` |
//! | `sigma.csv` | `method,s11,s22,s12,det,correlation` |
//! | `pvalues.csv` | `method,reject_a,reject_b` |
//! | `omnibus.csv` | `method,reject,det` |
//! | `qq_{a,b}_{method}.csv` | `theoretical,empirical` |
//! | `parzen_{a,b}_{method}.csv` | `x,density` |
//! | `report.json` | `{"schema_version": 1, "report": {...}}` |
//!
//! Figure files hold `DA / sqrt(s11)` and `DB / sqrt(s22)` standardized by
//! each `Sigma` method; the Parzen curves use the default bandwidth on
//! `[-4, 4]`.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::montecarlo::{parzen_density, qq_plot_data, SimulationReport};

pub const SCHEMA_VERSION: u32 = 1;

const PARZEN_LO: f64 = -4.0;
const PARZEN_HI: f64 = 4.0;
const PARZEN_POINTS: usize = 161;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub schema_version: u32,
    pub report: SimulationReport,
}

impl ReportDocument {
    pub fn new(report: SimulationReport) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            report,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        serde_json::from_str(text)
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_table(path: &Path, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()
}

fn pairs(path: &Path, header: [&str; 2], points: &[(f64, f64)]) -> io::Result<()> {
    let rows: Vec<Vec<String>> = points
        .iter()
        .map(|(x, y)| vec![x.to_string(), y.to_string()])
        .collect();
    write_table(path, &header, &rows)
}

/// Writes every table, the figure data and `report.json` into `dir`,
/// creating it if needed. Returns the written paths in write order.
pub fn write_report(report: &SimulationReport, dir: &Path) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut out = |name: String| {
        let p = dir.join(name);
        written.push(p.clone());
        p
    };

    let law = report.config.law;
    let et = &report.error_table;
    write_table(
        &out("error_table.csv".into()),
        &["parameter", "truth", "me", "mae", "rmse", "sd"],
        &[("a", law.a(), et.a), ("b", law.b(), et.b)]
            .iter()
            .map(|(p, t, s)| {
                vec![
                    p.to_string(),
                    t.to_string(),
                    s.me.to_string(),
                    s.mae.to_string(),
                    s.rmse.to_string(),
                    opt(s.sd),
                ]
            })
            .collect::<Vec<_>>(),
    )?;

    let ratio_rows: Vec<Vec<String>> = report
        .ratio_table
        .iter()
        .flatten()
        .map(|r| {
            vec![
                r.name.clone(),
                r.variance_ratio.to_string(),
                r.sd_ratio.to_string(),
            ]
        })
        .collect();
    write_table(
        &out("ratio_table.csv".into()),
        &["row", "variance_ratio", "sd_ratio"],
        &ratio_rows,
    )?;

    let sigma_rows: Vec<Vec<String>> = report
        .sigmas
        .iter()
        .map(|s| {
            let c = s.correlation();
            vec![
                s.method.label().to_string(),
                s.s11.to_string(),
                s.s22.to_string(),
                s.s12.to_string(),
                s.det.to_string(),
                opt(c.is_finite().then_some(c)),
            ]
        })
        .collect();
    write_table(
        &out("sigma.csv".into()),
        &["method", "s11", "s22", "s12", "det", "correlation"],
        &sigma_rows,
    )?;

    let pv_rows: Vec<Vec<String>> = report
        .pvalue_table
        .iter()
        .map(|r| vec![r.method.label().to_string(), opt(r.reject_a), opt(r.reject_b)])
        .collect();
    write_table(
        &out("pvalues.csv".into()),
        &["method", "reject_a", "reject_b"],
        &pv_rows,
    )?;

    let om_rows: Vec<Vec<String>> = report
        .omnibus
        .iter()
        .map(|r| vec![r.method.label().to_string(), opt(r.reject), r.det.to_string()])
        .collect();
    write_table(
        &out("omnibus.csv".into()),
        &["method", "reject", "det"],
        &om_rows,
    )?;

    for sigma in &report.sigmas {
        if !(sigma.s11 > 0.0 && sigma.s22 > 0.0) {
            continue;
        }
        let label = sigma.method.label();
        let (za, zb) = report.standardized(sigma);
        for (param, z) in [("a", za), ("b", zb)] {
            if let Ok(points) = qq_plot_data(&z) {
                pairs(
                    &out(format!("qq_{param}_{label}.csv")),
                    ["theoretical", "empirical"],
                    &points,
                )?;
            }
            if let Ok(curve) = parzen_density(&z, PARZEN_LO, PARZEN_HI, PARZEN_POINTS, None) {
                pairs(
                    &out(format!("parzen_{param}_{label}.csv")),
                    ["x", "density"],
                    &curve,
                )?;
            }
        }
    }

    let json_path = out("report.json".into());
    fs::write(&json_path, ReportDocument::new(report.clone()).to_json())?;
    Ok(written)
}
