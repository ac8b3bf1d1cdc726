//! End-to-end acceptance checks over the checked-in configs.
//!
//! Runs each config through the library, prints one PASS/FAIL line per
//! criterion and fails if any criterion fails. Reference values are
//! recomputed here from closed forms rather than read from the tables.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use twistmod_cli::{load_config, run, ResultTable};

fn config_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(format!("{name}.json"))
}

fn run_config(name: &str) -> (ResultTable, Duration) {
    let cfg = load_config(&config_path(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
    let start = Instant::now();
    let table = run(&cfg).unwrap_or_else(|e| panic!("{name}: {e}"));
    (table, start.elapsed())
}

fn value(t: &ResultTable, point: &str, stat: &str) -> f64 {
    t.get(point, stat)
        .unwrap_or_else(|| panic!("missing row {point} / {stat} in {}", t.kind))
        .value
}

fn stderr(t: &ResultTable, point: &str, stat: &str) -> f64 {
    t.get(point, stat).and_then(|r| r.stderr).unwrap_or(f64::NAN)
}

struct Outcome {
    pass: bool,
    detail: String,
}

impl Outcome {
    fn new(pass: bool, detail: String) -> Self {
        Self { pass, detail }
    }
}

const ALL: [&str; 15] = [
    "c01_autocorr",
    "c02_lyapunov",
    "c03_reconstruction",
    "c04a_locus",
    "c04b_locus_example",
    "c05_spectrum",
    "c06a_bounds",
    "c06b_bounds_c1",
    "c07a_ml_gamma1000",
    "c07b_ml_gamma1",
    "c08a_scheme_n16",
    "c08b_scheme_n8",
    "c09_scheme_union",
    "c10a_procsim_dyadic",
    "c10b_procsim_nondyadic",
];

fn criterion_1() -> Outcome {
    let (t, took) = run_config("c01_autocorr");
    // r = 2 uniform: p_bar = sum p^2 = 1/2
    let p_bar = 0.5f64;
    let mut worst = 0.0f64;
    let mut ok = true;
    for k in 0..=8 {
        let point = format!("k={k}");
        let exact = 0.25 + p_bar.powi(k) / 12.0;
        let z = (value(&t, &point, "autocorr") - exact).abs() / stderr(&t, &point, "autocorr");
        ok &= z <= 4.0;
        worst = worst.max(z);
    }
    let r0 = t.get("k=0", "autocorr").and_then(|r| r.reference);
    let exact_zero = r0 == Some(1.0 / 3.0);
    let fast = took < Duration::from_secs(60);
    Outcome::new(
        ok && exact_zero && fast,
        format!("max |z| = {worst:.3} (limit 4), R_S(0) reference = {r0:?}, runtime {took:.1?} (limit 60 s)"),
    )
}

fn criterion_2() -> Outcome {
    let (t, _) = run_config("c02_lyapunov");
    let cases: [(&str, Vec<f64>); 3] = [
        ("p=0.5/0.5", vec![0.5, 0.5]),
        ("p=0.25/0.75", vec![0.25, 0.75]),
        ("uniform_r=4", vec![0.25; 4]),
    ];
    let mut ok = true;
    let mut detail = Vec::new();
    for (point, p) in &cases {
        let h: f64 = -p.iter().map(|&v| v * v.ln()).sum::<f64>();
        let rel = (value(&t, point, "lyapunov") - h).abs() / h;
        ok &= rel <= 0.01;
        detail.push(format!("{point} rel {rel:.2e}"));
    }
    for point in ["p=0.5/0.5", "uniform_r=4"] {
        let dev = value(&t, point, "max_step_deviation");
        ok &= dev == 0.0;
        detail.push(format!("{point} step deviation {dev:e}"));
    }
    Outcome::new(ok, detail.join(", "))
}

fn criterion_3() -> Outcome {
    let (t, _) = run_config("c03_reconstruction");
    let samples = value(&t, "reconstruction", "samples");
    let violations = value(&t, "reconstruction", "violations");
    let ratio = value(&t, "reconstruction", "gap_ratio_max");
    Outcome::new(
        samples == 1000.0 && violations == 0.0 && ratio <= 1.0,
        format!("{violations} violations in {samples} samples, max gap / max_p^tau = {ratio}"),
    )
}

fn criterion_4() -> Outcome {
    let (t, _) = run_config("c04a_locus");
    let q = 1.0f64;
    let mut ok = true;
    let mut checked = 0;
    let mut worst_closed = 0.0f64;
    for row in t.column("locus_exact") {
        let (label, n) = row.point.rsplit_once(";n=").expect("point has n");
        let n: i32 = n.parse().unwrap();
        let r = if let Some(r) = label.strip_prefix("uniform_r=") {
            r.parse::<i32>().unwrap()
        } else {
            label.trim_start_matches("p=").split('/').count() as i32
        };
        let rn = (r as f64).powi(n);
        let lower = (12.0 * q).sqrt() * rn;
        let upper = (12.0 * q * n as f64).sqrt() * rn;
        ok &= lower <= row.value && row.value <= upper;
        ok &= value(&t, &row.point, "locus_lower") <= row.value && row.value <= value(&t, &row.point, "locus_upper");
        if label.starts_with("uniform_r=") {
            let sum: f64 = (1..=n).map(|i| (r as f64).powi(2 * i)).sum();
            let closed = (12.0 * q).sqrt() * sum.sqrt();
            let rel = (row.value - closed).abs() / closed;
            ok &= rel <= 1e-9;
            worst_closed = worst_closed.max(rel);
        }
        checked += 1;
    }
    let (ex, _) = run_config("c04b_locus_example");
    let l3 = value(&ex, "uniform_r=2;n=3", "locus_exact");
    let rel84 = (l3 - 84f64.sqrt()).abs() / 84f64.sqrt();
    ok &= rel84 <= 1e-9;
    Outcome::new(
        ok,
        format!("{checked} (system, n) points in bounds, closed-form max rel {worst_closed:.1e}, L_3 = {l3} (sqrt 84 rel {rel84:.1e})"),
    )
}

fn criterion_5() -> Outcome {
    let (t, _) = run_config("c05_spectrum");
    let cases = value(&t, "all", "cases");
    let c1 = value(&t, "all", "coeff_residual_max_1");
    let c2 = value(&t, "all", "coeff_residual_max_2");
    let form = value(&t, "all", "form_rel_diff_max");
    let szego = value(&t, "all", "szego_abs_diff_max");
    Outcome::new(
        cases == 100.0 && c1 <= 1e-12 && c2 <= 1e-12 && form <= 1e-9 && szego <= 1e-6,
        format!("{cases} cases: coefficients {c1:.1e}/{c2:.1e} (1e-12), forms {form:.1e} (1e-9), log-integral {szego:.1e} (1e-6)"),
    )
}

fn criterion_6() -> Outcome {
    let (a, _) = run_config("c06a_bounds");
    let point = "alpha=0.0;gamma=6.38905609893065";
    let residual = value(&a, "alpha_grid", "solve_w_residual_max");
    let w0 = value(&a, "alpha_grid", "w_at_zero");
    let increasing = value(&a, "alpha_grid", "w_increasing");
    let mu = value(&a, point, "shaping_loss");
    let mu_exact = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E / 12.0).ln();
    let limit = value(&a, point, "alphabet_limit");
    let (b, _) = run_config("c06b_bounds_c1");
    let c1: Vec<f64> = [0.1, 0.3, 0.5, 0.7]
        .iter()
        .map(|p| value(&b, &format!("p_bar={p};gamma=10.0"), "c1"))
        .collect();
    let decreasing = c1.windows(2).all(|w| w[1] < w[0]);
    let ok = residual <= 1e-12
        && w0 == 0.0
        && (mu - 0.1765).abs() <= 5e-5
        && (mu - mu_exact).abs() <= 1e-15
        && limit == 2.0
        && decreasing
        && increasing == 1.0;
    Outcome::new(
        ok,
        format!(
            "residual {residual:.1e}, w(0) = {w0}, mu = {mu:.6} (|mu - 0.17651| = {:.1e}), alphabet limit {limit}, C1 = {c1:.4?}",
            (mu - 0.17651).abs()
        ),
    )
}

/// Weak-noise conditional MSE reference for r = 2 uniform, n = 12.
fn weak_noise_reference(sigma2: f64, q: f64) -> f64 {
    let s: f64 = (1..=12).map(|i| 4f64.powi(i)).sum();
    sigma2 / (12.0 * q * s)
}

fn criterion_7() -> (Outcome, f64, f64) {
    let (hi, t_hi) = run_config("c07a_ml_gamma1000");
    let (lo, t_lo) = run_config("c07b_ml_gamma1");
    let p_hi = "gamma=1000.0;n=12";
    let p_lo = "gamma=1.0;n=12";
    let anomaly_hi = value(&hi, p_hi, "anomaly_rate");
    let anomaly_lo = value(&lo, p_lo, "anomaly_rate");
    let mse = value(&hi, p_hi, "conditional_cost");
    let ratio = mse / weak_noise_reference(1e-3, 1.0);
    let took = t_hi + t_lo;
    let ok = anomaly_hi < 1e-2
        && (0.5..=2.0).contains(&ratio)
        && anomaly_lo > 0.1
        && took < Duration::from_secs(600);
    let rmse = value(&hi, p_hi, "conditional_rmse");
    (
        Outcome::new(
            ok,
            format!(
                "gamma=1e3 anomaly {anomaly_hi}, MSE / weak-noise = {ratio:.3} (within x2), gamma=1 anomaly {anomaly_lo:.4}, runtime {took:.1?} (limit 600 s)"
            ),
        ),
        rmse,
        anomaly_hi,
    )
}

fn criterion_8() -> Outcome {
    let (a, _) = run_config("c08a_scheme_n16");
    let (b, _) = run_config("c08b_scheme_n8");
    let pa = "gamma=4.656854249492381;n=16;M=1024.0";
    let pb = "gamma=4.656854249492381;n=8;M=32.0";
    let anomaly16 = value(&a, pa, "anomaly_rate");
    let anomaly8 = value(&b, pb, "anomaly_rate");
    let slack = 2.0 * stderr(&a, pa, "anomaly_rate").hypot(stderr(&b, pb, "anomaly_rate"));
    let ceiling = value(&a, pa, "ceiling");
    let max_err = value(&a, pa, "max_conditional_error");
    let trials = value(&a, pa, "trials");
    let same_rate = value(&a, pa, "rate") == value(&b, pb, "rate");
    // C = 2R at the configured gamma
    let capacity = value(&a, pa, "capacity");
    let two_r = 2.0 * (1024f64).ln() / 16.0;
    let ok = anomaly16 < 0.05
        && trials == 1e4
        && ceiling == 2f64.powi(-11)
        && max_err <= ceiling
        && same_rate
        && (capacity - two_r).abs() <= 1e-12
        && anomaly16 + slack < anomaly8;
    Outcome::new(
        ok,
        format!(
            "n=16 anomaly {anomaly16} over {trials} trials, max conditional error {max_err:.6e} <= 2^-11, n=8 anomaly {anomaly8} (gap {:.4}, 2-se {slack:.4})",
            anomaly8 - anomaly16
        ),
    )
}

fn criterion_9(rmse: f64, state_anomaly: f64) -> Outcome {
    let (t, _) = run_config("c09_scheme_union");
    let gamma = 1000.0f64;
    let c = 0.5 * (1.0 + gamma).ln();
    let m = (12.0 * 0.75 * c).exp().ceil();
    let point = format!("gamma=1000.0;n=12;M={m:?}");
    let ceiling = value(&t, &point, "ceiling");
    let bound = value(&t, &point, "anomaly_bound");
    let bound_se = stderr(&t, &point, "anomaly_bound");
    let ok = ceiling == 0.5 / m && ceiling < rmse && state_anomaly <= 1e-2 && bound + 4.0 * bound_se <= 1e-2;
    Outcome::new(
        ok,
        format!(
            "M = {m:e}, ceiling {ceiling:.3e} < state RMSE {rmse:.3e}; anomaly: itinerary <= {bound:.2e} (+-{bound_se:.1e}), state {state_anomaly}"
        ),
    )
}

fn criterion_10() -> Outcome {
    let (a, _) = run_config("c10a_procsim_dyadic");
    let n = 1e6;
    let mut worst = 0.0f64;
    let mut ok = true;
    for (x, p) in [0.5f64, 0.25, 0.25].iter().enumerate() {
        let se = (p * (1.0 - p) / n).sqrt();
        let z = (value(&a, &format!("x={x}"), "frequency") - p).abs() / se;
        ok &= z <= 4.0;
        worst = worst.max(z);
    }
    let rate = value(&a, "law", "bits_per_symbol");
    let mismatches = value(&a, "law", "reduction_mismatches");
    ok &= (rate - 1.5).abs() <= 0.01 && mismatches == 0.0;
    let (b, _) = run_config("c10b_procsim_nondyadic");
    let p3 = value(&b, "k=3", "chi_square_p_value");
    ok &= p3 > 1e-3;
    Outcome::new(
        ok,
        format!("max |z| {worst:.2}, rate {rate} bits/symbol, 3-gram p-value {p3:.3}, reduction mismatches {mismatches}"),
    )
}

fn criterion_11() -> Outcome {
    let mut differing = Vec::new();
    for name in ALL {
        let (first, _) = run_config(name);
        let (second, _) = run_config(name);
        if first.to_csv() != second.to_csv() {
            differing.push(name);
        }
    }
    Outcome::new(
        differing.is_empty(),
        format!("{} configs re-run, differing: {differing:?}", ALL.len()),
    )
}

fn main() {
    let (c7, rmse, state_anomaly) = criterion_7();
    let outcomes = [
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(),
        c7,
        criterion_8(),
        criterion_9(rmse, state_anomaly),
        criterion_10(),
        criterion_11(),
    ];
    for (i, o) in outcomes.iter().enumerate() {
        println!("criterion {}: {} {}", i + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    let failed: Vec<usize> = outcomes.iter().enumerate().filter(|(_, o)| !o.pass).map(|(i, _)| i + 1).collect();
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
