//! `momentchi`: moment estimation, tests and Monte-Carlo runs from the shell.
//!
//! Exit codes: 0 accept (or success), 1 I/O failure, 2 input or domain
//! error, 3 omnibus rejection at 5%, 4 singular or degenerate `Sigma`.

mod input;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use momentchi::asymptotics::{
    covariance_exact_moments, covariance_exact_quadrature, covariance_plugin, influence_pair,
    CoefficientMode, Covariance2, QuadraticInfluence, SigmaMethod,
};
use momentchi::distributions::{LawKind, LawSpec};
use momentchi::estimation::{empirical_moments, estimate};
use momentchi::montecarlo::{default_sigma_methods, run_simulation, SimulationConfig};
use momentchi::report::write_report;
use momentchi::special::{QuadratureConfig, QuadratureRule};
use momentchi::testing::{marginal_test, omnibus_test, TestReport};
use momentchi::Error;

/// Correlation printed for Gamma(2, 3) with the published coefficients,
/// reading its first two rows as standard deviations.
const PUBLISHED_GAMMA_2_3_CORRELATION: f64 = 0.6976;

#[derive(Parser)]
#[command(name = "momentchi", version, about = "Method-of-moments estimation and chi-square omnibus tests")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Influence coefficients and exact Sigma of a law.
    Coeffs {
        law: LawKind,
        a: f64,
        b: f64,
        #[arg(long, default_value = "canonical")]
        mode: Mode,
        #[command(flatten)]
        quad: QuadArgs,
        #[arg(long, default_value = "text")]
        format: Format,
    },
    /// Moment estimates of (a, b) from a sample.
    Estimate {
        law: LawKind,
        #[command(flatten)]
        sample: SampleArgs,
        #[arg(long, default_value = "text")]
        format: Format,
    },
    /// Marginal and omnibus tests of H0: (a, b) = (A0, B0).
    Test {
        law: LawKind,
        a0: f64,
        b0: f64,
        #[command(flatten)]
        sample: SampleArgs,
        /// exact-moments, exact-quadrature or emp (plug-in on the sample).
        #[arg(long, default_value = "exact-moments")]
        sigma: SigmaMethod,
        #[arg(long, default_value = "canonical")]
        mode: Mode,
        #[command(flatten)]
        quad: QuadArgs,
        #[arg(long, default_value = "text")]
        format: Format,
    },
    /// Replicated estimation under a known law; writes CSV tables and report.json.
    Simulate {
        law: LawKind,
        a: f64,
        b: f64,
        /// Sample sizes; several values run a sweep into `n<N>` subdirectories.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long)]
        reps: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value = "canonical")]
        mode: Mode,
        /// Comma-separated Sigma methods; defaults to every method the law supports.
        #[arg(long, value_delimiter = ',')]
        sigma: Vec<SigmaMethod>,
        /// Thread count; does not change any output byte.
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, env = "MOMENTCHI_OUT", default_value = "momentchi-out")]
        out: PathBuf,
        #[command(flatten)]
        quad: QuadArgs,
    },
}

#[derive(Args)]
struct SampleArgs {
    /// File with one value per line (`#` starts a comment), or a CSV with --column.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Inline comma-separated values.
    #[arg(long, allow_hyphen_values = true)]
    values: Option<String>,
    /// Column name when --input is a headed CSV.
    #[arg(long)]
    column: Option<String>,
}

#[derive(Args)]
struct QuadArgs {
    #[arg(long, default_value_t = 100)]
    quad_panels: usize,
    #[arg(long, default_value_t = 1e-8)]
    quad_tol: f64,
    #[arg(long, default_value_t = 12)]
    quad_doublings: u32,
    #[arg(long, default_value = "tanh-sinh")]
    quad_rule: Rule,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Canonical,
    #[value(alias = "verbatim")]
    Paper,
}

#[derive(Clone, Copy, ValueEnum)]
enum Rule {
    TanhSinh,
    Trapezoid,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Text,
    Json,
}

impl From<Mode> for CoefficientMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Canonical => CoefficientMode::Canonical,
            Mode::Paper => CoefficientMode::Verbatim,
        }
    }
}

impl QuadArgs {
    fn config(&self) -> Result<QuadratureConfig, Failure> {
        let rule = match self.quad_rule {
            Rule::TanhSinh => QuadratureRule::TanhSinh,
            Rule::Trapezoid => QuadratureRule::Trapezoid,
        };
        Ok(QuadratureConfig::new(
            self.quad_panels,
            self.quad_tol,
            self.quad_doublings,
            rule,
        )?)
    }
}

enum Failure {
    Io(String),
    Input(String),
    Singular(String),
    Reject,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::SingularCovariance { .. } | Error::DegenerateVariance(_) => {
                Failure::Singular(e.to_string())
            }
            other => Failure::Input(other.to_string()),
        }
    }
}

type Outcome = Result<(), Failure>;

fn fmt_influence(name: &str, q: &QuadraticInfluence) -> String {
    format!("{name}: c1 = {}, c2 = {}, center = {}", q.c1, q.c2, q.center)
}

fn fmt_sigma(s: &Covariance2) -> String {
    format!(
        "sigma {}: s11 = {}, s22 = {}, s12 = {}, det = {}, correlation = {}",
        s.method.label(),
        s.s11,
        s.s22,
        s.s12,
        s.det,
        s.correlation()
    )
}

fn cmd_coeffs(law: LawKind, a: f64, b: f64, mode: Mode, quad: &QuadArgs, format: Format) -> Outcome {
    let spec = LawSpec::new(law, a, b)?;
    let cfg = quad.config()?;
    let (h, l) = influence_pair(&spec, mode.into())?;
    let quadrature = covariance_exact_quadrature(&spec, &h, &l, &cfg)?;
    let moments = covariance_exact_moments(&spec, &h, &l)?;
    let reference = (matches!(mode, Mode::Paper) && law == LawKind::Gamma && a == 2.0 && b == 3.0)
        .then_some(PUBLISHED_GAMMA_2_3_CORRELATION);
    if format == Format::Json {
        let doc = json!({
            "law": spec,
            "mode": CoefficientMode::from(mode),
            "h": h,
            "l": l,
            "sigma": [quadrature, moments],
            "correlation": quadrature.correlation(),
            "published_correlation": reference,
        });
        println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
        return Ok(());
    }
    let mut out = String::new();
    let mode_name = match mode {
        Mode::Canonical => "canonical",
        Mode::Paper => "paper",
    };
    writeln!(out, "law {law}({a}, {b}), {mode_name} coefficients").unwrap();
    writeln!(out, "{}", fmt_influence("H", &h)).unwrap();
    writeln!(out, "{}", fmt_influence("L", &l)).unwrap();
    writeln!(out, "{}", fmt_sigma(&quadrature)).unwrap();
    writeln!(out, "{}", fmt_sigma(&moments)).unwrap();
    if let Some(r) = reference {
        let c = quadrature.correlation();
        writeln!(
            out,
            "published correlation {r}: computed {c:.4}, relative difference {:.1}%",
            100.0 * (c - r).abs() / r
        )
        .unwrap();
    }
    print!("{out}");
    Ok(())
}

fn load(sample: &SampleArgs) -> Result<Vec<f64>, Failure> {
    input::read_sample(
        sample.input.as_deref(),
        sample.values.as_deref(),
        sample.column.as_deref(),
    )
    .map_err(Failure::Input)
}

fn cmd_estimate(law: LawKind, sample: &SampleArgs, format: Format) -> Outcome {
    let xs = load(sample)?;
    let em = empirical_moments(&xs)?;
    let est = estimate(law, &em)?;
    if format == Format::Json {
        let doc = json!({ "estimate": est, "moments": em });
        println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
    } else {
        println!("law {law}, n = {}", em.n);
        println!("a_hat = {}", est.a_hat);
        println!("b_hat = {}", est.b_hat);
        println!(
            "mean = {}, mean_sq = {}, S2 = {}, biased variance = {}",
            em.mean, em.mean_sq, em.var_unbiased, em.var_biased
        );
    }
    Ok(())
}

fn fmt_report(name: &str, r: &TestReport) -> String {
    format!(
        "{name}: statistic = {}, df = {}, p = {}, {}",
        r.statistic,
        r.df,
        r.p_value,
        if r.reject_at_5pct { "reject" } else { "accept" }
    )
}

#[allow(clippy::too_many_arguments)]
fn cmd_test(
    law: LawKind,
    a0: f64,
    b0: f64,
    sample: &SampleArgs,
    sigma: SigmaMethod,
    mode: Mode,
    quad: &QuadArgs,
    format: Format,
) -> Outcome {
    let spec = LawSpec::new(law, a0, b0)?;
    let xs = load(sample)?;
    let em = empirical_moments(&xs)?;
    let est = estimate(law, &em)?;
    let (h, l) = influence_pair(&spec, mode.into())?;
    let cov = match sigma {
        SigmaMethod::ExactMoments => covariance_exact_moments(&spec, &h, &l)?,
        SigmaMethod::ExactQuadrature => covariance_exact_quadrature(&spec, &h, &l, &quad.config()?)?,
        SigmaMethod::PluginSample => covariance_plugin(&xs, &h, &l)?,
        SigmaMethod::Replication => {
            return Err(Failure::Input(
                "the replication Sigma needs a simulation; use exact-moments, exact-quadrature or emp"
                    .into(),
            ))
        }
    };
    let n = em.n;
    let mut ta = marginal_test(est.a_hat, a0, cov.s11, n)?;
    let mut tb = marginal_test(est.b_hat, b0, cov.s22, n)?;
    ta.sigma_method = Some(cov.method);
    tb.sigma_method = Some(cov.method);
    let omni = omnibus_test(est.a_hat, est.b_hat, a0, b0, n, &cov)?;
    if format == Format::Json {
        let doc = json!({
            "estimate": est,
            "sigma": cov,
            "marginal_a": ta,
            "marginal_b": tb,
            "omnibus": omni,
        });
        println!("{}", serde_json::to_string_pretty(&doc).expect("json"));
    } else {
        println!("law {law}, H0 (a, b) = ({a0}, {b0}), n = {n}");
        println!("a_hat = {}, b_hat = {}", est.a_hat, est.b_hat);
        println!("{}", fmt_sigma(&cov));
        println!("{}", fmt_report("marginal a", &ta));
        println!("{}", fmt_report("marginal b", &tb));
        println!("{}", fmt_report("omnibus", &omni));
    }
    if omni.reject_at_5pct {
        Err(Failure::Reject)
    } else {
        Ok(())
    }
}

fn pct(v: Option<f64>) -> String {
    v.map(|x| format!("{:.2}%", 100.0 * x)).unwrap_or_else(|| "n/a".into())
}

fn write_sweep(path: &Path, rows: &[(usize, String, Option<f64>)]) -> Result<(), Failure> {
    let io = |e: csv::Error| Failure::Io(format!("{}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    w.write_record(["n", "method", "reject"]).map_err(io)?;
    for (n, method, reject) in rows {
        let r = reject.map(|x| x.to_string()).unwrap_or_default();
        w.write_record([n.to_string(), method.clone(), r]).map_err(io)?;
    }
    w.flush().map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    law: LawKind,
    a: f64,
    b: f64,
    ns: &[usize],
    reps: usize,
    seed: u64,
    mode: Mode,
    sigma: &[SigmaMethod],
    workers: Option<usize>,
    out: &Path,
    quad: &QuadArgs,
) -> Outcome {
    let spec = LawSpec::new(law, a, b)?;
    let quadrature = quad.config()?;
    let mut sweep = Vec::new();
    for &n in ns {
        let mut cfg = SimulationConfig::new(spec, n, reps, seed);
        cfg.coefficient_mode = mode.into();
        cfg.sigma_methods = if sigma.is_empty() {
            default_sigma_methods(&spec)
        } else {
            sigma.to_vec()
        };
        cfg.quadrature = quadrature;
        cfg.workers = workers;
        let rep = run_simulation(&cfg)?;
        let dir = if ns.len() > 1 {
            out.join(format!("n{n}"))
        } else {
            out.to_path_buf()
        };
        write_report(&rep, &dir).map_err(|e| Failure::Io(format!("{}: {e}", dir.display())))?;

        println!(
            "{law}({a}, {b}) n = {n}, B = {reps}, seed = {seed}: {} kept, {} infeasible -> {}",
            rep.achap.len(),
            rep.infeasible_count,
            dir.display()
        );
        let et = rep.error_table;
        println!(
            "  a: ME {:.4} MAE {:.4} RMSE {:.4} | b: ME {:.4} MAE {:.4} RMSE {:.4}",
            et.a.me, et.a.mae, et.a.rmse, et.b.me, et.b.mae, et.b.rmse
        );
        for (m, o) in rep.pvalue_table.iter().zip(&rep.omnibus) {
            println!(
                "  {:<16} marginal a {:>7} b {:>7} omnibus {:>7}",
                m.method.label(),
                pct(m.reject_a),
                pct(m.reject_b),
                pct(o.reject)
            );
            sweep.push((n, o.method.label().to_string(), o.reject));
        }
    }
    if ns.len() > 1 {
        write_sweep(&out.join("omnibus_sweep.csv"), &sweep)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Coeffs {
            law,
            a,
            b,
            mode,
            quad,
            format,
        } => cmd_coeffs(law, a, b, mode, &quad, format),
        Command::Estimate {
            law,
            sample,
            format,
        } => cmd_estimate(law, &sample, format),
        Command::Test {
            law,
            a0,
            b0,
            sample,
            sigma,
            mode,
            quad,
            format,
        } => cmd_test(law, a0, b0, &sample, sigma, mode, &quad, format),
        Command::Simulate {
            law,
            a,
            b,
            n,
            reps,
            seed,
            mode,
            sigma,
            workers,
            out,
            quad,
        } => cmd_simulate(law, a, b, &n, reps, seed, mode, &sigma, workers, &out, &quad),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Reject) => ExitCode::from(3),
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Singular(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(4)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
