use std::f64::consts::PI;

use proptest::prelude::*;
use twistmod::bounds;
use twistmod::channel::ChannelConfig;
use twistmod::statistics::{self, Signal};
use twistmod::SystemSpec;

fn spec_strategy() -> impl Strategy<Value = SystemSpec> {
    prop::collection::vec(0.05f64..1.0, 2..=6).prop_map(|w| {
        let total: f64 = w.iter().sum();
        SystemSpec::new(&w.iter().map(|v| v / total).collect::<Vec<_>>()).unwrap()
    })
}

/// Periodic trapezoid rule for the mean of `ln S_Y` over one period.
fn log_mean_trapezoid(params: &statistics::SpectrumParams, points: usize) -> f64 {
    (0..points)
        .map(|j| params.output_spectrum_sum(2.0 * PI * j as f64 / points as f64).ln())
        .sum::<f64>()
        / points as f64
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn spectrum_coefficients_match(spec in spec_strategy(), q in 0.01f64..100.0, sigma2 in 0.001f64..100.0) {
        let sp = statistics::spectrum_params(&spec, q, sigma2).unwrap();
        let pb = sp.p_bar;
        let lhs1 = sp.a * (1.0 + sp.tau * sp.tau);
        let rhs1 = sigma2 * (1.0 + pb * pb) + q * (1.0 - pb * pb);
        prop_assert!((lhs1 - rhs1).abs() <= 1e-12 * rhs1);
        let rhs2 = sigma2 * pb;
        prop_assert!((sp.a * sp.tau - rhs2).abs() <= 1e-12 * rhs2);
        prop_assert!(sp.tau > 0.0 && sp.tau < 1.0);
    }

    #[test]
    fn spectrum_forms_agree(spec in spec_strategy(), q in 0.01f64..100.0, sigma2 in 0.001f64..100.0) {
        let sp = statistics::spectrum_params(&spec, q, sigma2).unwrap();
        for j in 0..1000 {
            let w = -PI + 2.0 * PI * j as f64 / 999.0;
            let a = sp.output_spectrum_sum(w);
            let b = sp.output_spectrum_factored(w);
            prop_assert!((a - b).abs() <= 1e-9 * a, "w={}: {} vs {}", w, a, b);
        }
    }

    #[test]
    fn log_spectrum_mean_is_ln_a(spec in spec_strategy(), q in 0.01f64..10.0, sigma2 in 0.01f64..10.0) {
        let sp = statistics::spectrum_params(&spec, q, sigma2).unwrap();
        let quad = log_mean_trapezoid(&sp, 8192);
        prop_assert!((quad - sp.a.ln()).abs() < 1e-6);
        let cfg = ChannelConfig::new(q, sigma2).unwrap();
        let c1 = bounds::c1_bound(&spec, &cfg).unwrap();
        prop_assert!((c1 - 0.5 * (quad - sigma2.ln())).abs() < 1e-6);
    }
}

#[test]
fn locus_bounds_and_uniform_closed_form() {
    for p in [vec![0.5, 0.5], vec![0.3, 0.7], vec![0.2, 0.3, 0.5], vec![1.0 / 3.0; 3]] {
        let spec = SystemSpec::new(&p).unwrap();
        let max_n = if spec.r() == 2 { 10 } else { 8 };
        for n in 1..=max_n {
            let rep = statistics::locus_length(&spec, 1.0, n, statistics::DEFAULT_ENUMERATION_BUDGET).unwrap();
            assert!(rep.lower <= rep.exact * (1.0 + 1e-12), "{p:?} n={n}: {rep:?}");
            assert!(rep.exact <= rep.upper * (1.0 + 1e-12), "{p:?} n={n}: {rep:?}");
            if spec.is_uniform() {
                let r = spec.r() as f64;
                let sum: f64 = (1..=n).map(|i| r.powi(2 * i as i32)).sum();
                let closed = 12f64.sqrt() * sum.sqrt();
                assert!((rep.exact - closed).abs() <= 1e-9 * closed);
            }
        }
    }
    let rep = statistics::locus_length(&SystemSpec::uniform(2).unwrap(), 1.0 / 12.0, 3, 1 << 10).unwrap();
    assert!((rep.exact - 84f64.sqrt()).abs() < 1e-9 * 84f64.sqrt());
}

#[test]
fn empirical_autocorrelation_matches_closed_form() {
    for (i, p) in [vec![0.5, 0.5], vec![0.25, 0.75], vec![0.2, 0.3, 0.5]].into_iter().enumerate() {
        let spec = SystemSpec::new(&p).unwrap();
        for signal in [Signal::State, Signal::Input { q: 2.0 }] {
            let est = statistics::autocorr_empirical(&spec, signal, 64, 20_000, 8, 100 + i as u64).unwrap();
            for e in est {
                let exact = signal.exact_autocorr(&spec, e.lag as i64);
                assert!(
                    (e.mean - exact).abs() < 4.0 * e.stderr,
                    "{p:?} {signal:?} lag {}: {} vs {exact} (se {})",
                    e.lag,
                    e.mean,
                    e.stderr
                );
            }
        }
    }
}

#[test]
fn lyapunov_matches_entropy() {
    for p in [vec![0.5, 0.5], vec![0.25, 0.75], vec![0.25; 4], vec![0.1, 0.6, 0.3]] {
        let spec = SystemSpec::new(&p).unwrap();
        let h: f64 = -p.iter().map(|q| q * q.ln()).sum::<f64>();
        assert!((statistics::lyapunov_exact(&spec) - h).abs() < 1e-15);
        let est = statistics::lyapunov_empirical(&spec, std::f64::consts::FRAC_1_PI, 100_000).unwrap();
        assert!((est / h - 1.0).abs() < 0.01, "{p:?}: {est} vs {h}");
    }
}

#[test]
fn time_average_spread_shrinks() {
    let spec = SystemSpec::new(&[0.3, 0.7]).unwrap();
    let v: Vec<f64> = [1_000, 10_000, 100_000]
        .iter()
        .map(|&n| statistics::ergodicity_spread(&spec, Signal::State, 2, n, 100, 11).unwrap().variance)
        .collect();
    assert!(v[0] > v[1] && v[1] > v[2], "{v:?}");
}
