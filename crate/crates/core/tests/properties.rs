use momentchi::asymptotics::{
    covariance_exact_moments, covariance_exact_quadrature, covariance_plugin,
    covariance_replication, delta_gradient, influence_pair, CoefficientMode, Covariance2,
    SigmaMethod,
};
use momentchi::distributions::{LawKind, LawSpec};
use momentchi::estimation::{empirical_moments, estimate, estimator_at_moments};
use momentchi::montecarlo::{
    error_table, parzen_density, qq_plot_data, run_simulation, silverman_bandwidth,
    SimulationConfig,
};
use momentchi::special::{
    chisq_cdf, integrate_unit, normal_quantile, trapezoid_integrate, QuadratureConfig,
    QuadratureRule,
};
use momentchi::testing::{marginal_test, omnibus_test};
use proptest::prelude::*;

fn gamma_law() -> impl Strategy<Value = LawSpec> {
    (0.2f64..30.0, 0.1f64..20.0).prop_map(|(a, b)| LawSpec::gamma(a, b).unwrap())
}

fn beta_law() -> impl Strategy<Value = LawSpec> {
    (0.3f64..30.0, 0.3f64..30.0).prop_map(|(a, b)| LawSpec::beta(a, b).unwrap())
}

fn uniform_law() -> impl Strategy<Value = LawSpec> {
    (-20.0f64..20.0, 0.5f64..100.0).prop_map(|(lo, w)| LawSpec::uniform(lo, lo + w).unwrap())
}

/// Fisher laws with a fourth moment.
fn fisher_law() -> impl Strategy<Value = LawSpec> {
    (1.0f64..40.0, 9.0f64..60.0).prop_map(|(a, b)| LawSpec::fisher(a, b).unwrap())
}

fn any_law() -> impl Strategy<Value = LawSpec> {
    prop_oneof![gamma_law(), beta_law(), uniform_law(), fisher_law()]
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cdf_is_monotone_and_clamped(law in any_law(), u1 in 0.0f64..1.0, u2 in 0.0f64..1.0) {
        let (lo, hi) = law.support();
        let span = |u: f64| if hi.is_finite() { lo + (hi - lo) * u } else { lo + u / (1.0 - u) };
        let (x1, x2) = (span(u1.min(u2)), span(u1.max(u2)));
        let (c1, c2) = (law.cdf(x1), law.cdf(x2));
        prop_assert!((0.0..=1.0).contains(&c1) && (0.0..=1.0).contains(&c2));
        prop_assert!(c1 <= c2);
        prop_assert_eq!(law.cdf(lo - 1.0), 0.0);
        prop_assert_eq!(law.cdf(f64::INFINITY), 1.0);
    }

    #[test]
    fn quantile_and_cdf_are_inverse(law in any_law(), u in 1e-6f64..(1.0 - 1e-6)) {
        let x = law.quantile(u).unwrap();
        prop_assert!((law.cdf(x) - u).abs() <= 1e-8, "cdf(quantile({})) = {}", u, law.cdf(x));
        if (1e-4..=1.0 - 1e-4).contains(&u) {
            let back = law.quantile(law.cdf(x)).unwrap();
            prop_assert!((back - x).abs() <= 1e-7 * x.abs().max(1.0), "{} vs {}", back, x);
        }
    }

    #[test]
    fn pdf_integrates_to_one_with_mean_m1(law in any_law()) {
        let (lo, hi) = law.support();
        // Beta(b, a) at 1 - x resolves the density next to 1
        let mirror = (law.kind() == LawKind::Beta).then(|| LawSpec::beta(law.b(), law.a()).unwrap());
        // x = u/(1-u) on a half line, affine on a bounded support
        let [mass, mean] = integrate_unit(
            |u| {
                let (x, w) = if hi.is_finite() {
                    let width = hi - lo;
                    if u.p <= 0.5 {
                        let x = lo + width * u.p;
                        (x, law.pdf(x) * width)
                    } else {
                        let d = if let Some(m) = mirror { m.pdf(u.q) } else { law.pdf(hi - width * u.q) };
                        (hi - width * u.q, d * width)
                    }
                } else {
                    let x = u.p / u.q;
                    (x, law.pdf(x) / (u.q * u.q))
                };
                if w.is_finite() { [w, x * w] } else { [0.0, 0.0] }
            },
            &QuadratureConfig::default(),
        )
        .unwrap();
        let m1 = law.theoretical_moments().m1.unwrap();
        prop_assert!((mass - 1.0).abs() <= 1e-6, "mass {}", mass);
        prop_assert!((mean - m1).abs() <= 1e-6 * m1.abs().max(1.0), "{} vs {}", mean, m1);
    }

    #[test]
    fn chisq_two_matches_exponential(x in 0.0f64..50.0) {
        let want = -(-x / 2.0f64).exp_m1();
        prop_assert!((chisq_cdf(x, 2).unwrap() - want).abs() <= 1e-12);
    }

    #[test]
    fn trapezoid_is_linear(alpha in -5.0f64..5.0, beta in -5.0f64..5.0, k in 1.0f64..4.0) {
        for rule in [QuadratureRule::Trapezoid, QuadratureRule::TanhSinh] {
            let cfg = QuadratureConfig::new(50, 1e9, 1, rule).unwrap();
            let f = |x: f64| (k * x).cos();
            let g = |x: f64| x * x - k;
            let lhs = trapezoid_integrate(|x| alpha * f(x) + beta * g(x), -1.0, 1.5, &cfg).unwrap();
            let rhs = alpha * trapezoid_integrate(f, -1.0, 1.5, &cfg).unwrap()
                + beta * trapezoid_integrate(g, -1.0, 1.5, &cfg).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
        }
    }

    #[test]
    fn estimator_recovers_parameters_from_moments(law in any_law()) {
        let ms = law.theoretical_moments();
        let (a, b) = estimator_at_moments(law.kind(), ms.m1.unwrap(), ms.m2.unwrap()).unwrap();
        let tol = |t: f64| 1e-10 * t.abs().max(1.0);
        prop_assert!((a - law.a()).abs() <= tol(law.a()), "{} vs {}", a, law.a());
        prop_assert!((b - law.b()).abs() <= tol(law.b()), "{} vs {}", b, law.b());
    }

    #[test]
    fn gamma_scale_equivariance(seed in any::<u64>(), k in -6i32..6, c in 0.01f64..100.0) {
        let xs = LawSpec::gamma(3.0, 2.0).unwrap().sample(50, seed);
        let base = estimate(LawKind::Gamma, &empirical_moments(&xs).unwrap()).unwrap();
        // powers of two scale without rounding
        let p = 2f64.powi(k);
        let scaled: Vec<f64> = xs.iter().map(|x| x * p).collect();
        let e = estimate(LawKind::Gamma, &empirical_moments(&scaled).unwrap()).unwrap();
        prop_assert_eq!(e.a_hat, base.a_hat);
        prop_assert_eq!(e.b_hat, base.b_hat / p);
        let scaled: Vec<f64> = xs.iter().map(|x| x * c).collect();
        let e = estimate(LawKind::Gamma, &empirical_moments(&scaled).unwrap()).unwrap();
        prop_assert!(rel(e.a_hat, base.a_hat) <= 1e-12);
        prop_assert!(rel(e.b_hat, base.b_hat / c) <= 1e-12);
    }

    #[test]
    fn uniform_affine_equivariance(seed in any::<u64>(), alpha in 0.01f64..100.0, shift in -100.0f64..100.0) {
        let xs = LawSpec::uniform(0.0, 1.0).unwrap().sample(40, seed);
        let base = estimate(LawKind::Uniform, &empirical_moments(&xs).unwrap()).unwrap();
        let mapped: Vec<f64> = xs.iter().map(|x| alpha * x + shift).collect();
        let e = estimate(LawKind::Uniform, &empirical_moments(&mapped).unwrap()).unwrap();
        let scale = alpha + shift.abs();
        prop_assert!((e.a_hat - (alpha * base.a_hat + shift)).abs() <= 1e-12 * scale);
        prop_assert!((e.b_hat - (alpha * base.b_hat + shift)).abs() <= 1e-12 * scale);
    }

    #[test]
    fn delta_gradient_matches_finite_differences(law in any_law()) {
        let ms = law.theoretical_moments();
        let (m1, m2) = (ms.m1.unwrap(), ms.m2.unwrap());
        let g = delta_gradient(law.kind(), m1, m2).unwrap();
        let h1 = m1.abs().max(1.0) * 1e-6;
        let h2 = m2.abs().max(1.0) * 1e-6;
        let at = |x: f64, y: f64| estimator_at_moments(law.kind(), x, y).unwrap();
        let (ap, bp) = at(m1 + h1, m2);
        let (am, bm) = at(m1 - h1, m2);
        let (aq, bq) = at(m1, m2 + h2);
        let (ar, br) = at(m1, m2 - h2);
        let fd = [
            (ap - am) / (2.0 * h1),
            (aq - ar) / (2.0 * h2),
            (bp - bm) / (2.0 * h1),
            (bq - br) / (2.0 * h2),
        ];
        let an = [g.da_dm1, g.da_dm2, g.db_dm1, g.db_dm2];
        let row_a = an[0].abs().max(an[1].abs());
        let row_b = an[2].abs().max(an[3].abs());
        for (i, (f, a)) in fd.iter().zip(an).enumerate() {
            let scale = if i < 2 { row_a } else { row_b };
            prop_assert!((f - a).abs() <= 1e-5 * scale, "entry {}: fd {} analytic {}", i, f, a);
        }
    }

    #[test]
    fn quadrature_and_moment_sigma_agree(law in any_law(), verbatim in any::<bool>()) {
        let mode = if verbatim { CoefficientMode::Verbatim } else { CoefficientMode::Canonical };
        let (h, l) = influence_pair(&law, mode).unwrap();
        let m = covariance_exact_moments(&law, &h, &l).unwrap();
        let q = covariance_exact_quadrature(&law, &h, &l, &QuadratureConfig::default()).unwrap();
        let scale = (m.s11 * m.s22).sqrt();
        prop_assert!(rel(q.s11, m.s11) <= 1e-5, "s11 {} vs {}", q.s11, m.s11);
        prop_assert!(rel(q.s22, m.s22) <= 1e-5, "s22 {} vs {}", q.s22, m.s22);
        prop_assert!((q.s12 - m.s12).abs() <= 1e-5 * scale, "s12 {} vs {}", q.s12, m.s12);
        prop_assert!(m.s11 >= 0.0 && m.s22 >= 0.0);
        prop_assert!(m.det >= -1e-9 * m.s11 * m.s22);
    }

    #[test]
    fn influence_is_centered(law in any_law()) {
        let (h, l) = influence_pair(&law, CoefficientMode::Canonical).unwrap();
        let [eh, el] = integrate_unit(
            |u| {
                let x = law.quantile_at(u);
                [h.evaluate(x), l.evaluate(x)]
            },
            &QuadratureConfig::default(),
        )
        .unwrap();
        let sigma = covariance_exact_moments(&law, &h, &l).unwrap();
        prop_assert!(eh.abs() <= 1e-6 * sigma.s11.sqrt().max(1.0), "{}", eh);
        prop_assert!(el.abs() <= 1e-6 * sigma.s22.sqrt().max(1.0), "{}", el);
    }

    #[test]
    fn omnibus_invariants(
        s11 in 0.01f64..100.0,
        s22 in 0.01f64..100.0,
        rho in -0.99f64..0.99,
        da in -2.0f64..2.0,
        db in -2.0f64..2.0,
        n in 2usize..10_000,
    ) {
        let s12 = rho * (s11 * s22).sqrt();
        let sigma = Covariance2::new(s11, s22, s12, SigmaMethod::ExactMoments);
        let (a0, b0) = (3.0, 7.0);
        let r = omnibus_test(a0 + da, b0 + db, a0, b0, n, &sigma).unwrap();
        prop_assert!(r.statistic >= 0.0);
        prop_assert!((0.0..=1.0).contains(&r.p_value));
        prop_assert_eq!(r.reject_at_5pct, r.p_value < 0.05);
        let swapped = omnibus_test(b0 + db, a0 + da, b0, a0, n, &sigma.swapped()).unwrap();
        prop_assert!((swapped.statistic - r.statistic).abs() <= 1e-12 * r.statistic.max(1.0));

        let diag = Covariance2::new(s11, s22, 0.0, SigmaMethod::ExactMoments);
        let q = omnibus_test(a0 + da, b0 + db, a0, b0, n, &diag).unwrap().statistic;
        let za = marginal_test(a0 + da, a0, s11, n).unwrap().statistic;
        let zb = marginal_test(b0 + db, b0, s22, n).unwrap().statistic;
        prop_assert!((q - (za * za + zb * zb)).abs() <= 1e-12 * q.max(1.0));
    }

    #[test]
    fn marginal_decision_matches_p_value(theta in -10.0f64..10.0, var in 0.01f64..50.0, n in 2usize..5000) {
        let r = marginal_test(theta, 0.0, var, n).unwrap();
        prop_assert!((0.0..=1.0).contains(&r.p_value));
        let crit = normal_quantile(0.975).unwrap();
        prop_assert_eq!(r.reject_at_5pct, r.statistic.abs() > crit);
        if (r.statistic.abs() - crit).abs() > 1e-9 {
            prop_assert_eq!(r.reject_at_5pct, r.p_value < 0.05);
        }
    }

    #[test]
    fn covariance_estimates_are_symmetric(seed in any::<u64>()) {
        let law = LawSpec::beta(2.0, 3.0).unwrap();
        let xs = law.sample(30, seed);
        let (h, l) = influence_pair(&law, CoefficientMode::Canonical).unwrap();
        let a = covariance_plugin(&xs, &h, &l).unwrap();
        let b = covariance_plugin(&xs, &l, &h).unwrap();
        prop_assert_eq!((a.s11, a.s22, a.s12), (b.s22, b.s11, b.s12));
        prop_assert!(a.det >= -1e-9 * a.s11 * a.s22);
        let ys = law.sample(30, seed ^ 1);
        let r1 = covariance_replication(&xs, &ys).unwrap();
        let r2 = covariance_replication(&ys, &xs).unwrap();
        prop_assert_eq!((r1.s11, r1.s22, r1.s12), (r2.s22, r2.s11, r2.s12));
    }

    #[test]
    fn error_table_orders(est in prop::collection::vec(-100.0f64..100.0, 1..200), truth in -10.0f64..10.0) {
        let t = error_table(&est, &est, truth, truth).unwrap();
        prop_assert!(t.a.rmse + 1e-12 >= t.a.me.abs());
        prop_assert!(t.a.mae <= t.a.rmse + 1e-12);
    }

    #[test]
    fn parzen_normalizes(seed in any::<u64>()) {
        let xs = LawSpec::gamma(2.0, 1.0).unwrap().sample(300, seed);
        let bw = silverman_bandwidth(&xs).unwrap();
        let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min) - 8.0 * bw;
        let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 8.0 * bw;
        let curve = parzen_density(&xs, lo, hi, 4001, None).unwrap();
        let mut area = 0.0;
        for w in curve.windows(2) {
            prop_assert!(w[0].1 >= 0.0);
            area += 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1);
        }
        prop_assert!((area - 1.0).abs() <= 1e-3, "{}", area);
    }

    #[test]
    fn qq_of_normal_quantiles_is_diagonal(n in 2usize..500) {
        let vals: Vec<f64> = (1..=n)
            .rev()
            .map(|i| normal_quantile((i as f64 - 0.5) / n as f64).unwrap())
            .collect();
        for (x, y) in qq_plot_data(&vals).unwrap() {
            prop_assert!((x - y).abs() <= 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn simulation_is_deterministic_and_accounts(
        seed in any::<u64>(),
        n in 2usize..40,
        reps in 2usize..60,
        workers in 1usize..4,
    ) {
        let law = LawSpec::fisher(5.0, 12.0).unwrap();
        let mut cfg = SimulationConfig::new(law, n, reps, seed);
        cfg.workers = Some(1);
        let first = run_simulation(&cfg);
        cfg.workers = Some(workers);
        // the worker count is kept in memory only
        let second = run_simulation(&cfg).map(|mut r| {
            r.config.workers = Some(1);
            r
        });
        prop_assert_eq!(&first, &second);
        if let Ok(r) = first {
            let kept = reps - r.infeasible_count;
            for arr in [&r.achap, &r.bchap, &r.da, &r.db, &r.vh, &r.vl, &r.vhl] {
                prop_assert_eq!(arr.len(), kept);
            }
            for row in &r.pvalue_table {
                for f in [row.reject_a, row.reject_b].into_iter().flatten() {
                    prop_assert!((0.0..=1.0).contains(&f));
                }
            }
            for row in &r.omnibus {
                if let Some(f) = row.reject {
                    prop_assert!((0.0..=1.0).contains(&f));
                }
            }
        }
    }
}
