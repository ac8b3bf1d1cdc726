//! Closed-form and simulated statistics of the state and input processes.
//!
//! With a uniformly distributed initial state the itinerary is i.i.d. with
//! law `p`, the states are uniform and their autocorrelation decays
//! geometrically with ratio `p_bar = sum p(x)^2`. Everything in this module
//! is a consequence of that structure: Lyapunov exponent, autocorrelation,
//! the AR(1)-shaped spectra and the length of the signal locus.

use rayon::prelude::*;

use crate::dynamics::{self, SystemSpec};
use crate::error::{domain, Error, Result};
use crate::numeric::{CompensatedSum, MeanEstimate};
use crate::rng::{self, tags};

/// Default number of continuity cells an enumeration may visit.
pub const DEFAULT_ENUMERATION_BUDGET: u128 = 1 << 24;

/// Low-order moments of `p` and `F` under `p`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    /// `sum p^2`
    pub p_bar: f64,
    /// `sum p^3`
    pub p2_bar: f64,
    /// `sum p F`
    pub f_bar: f64,
    /// `sum p F^2`
    pub f2_bar: f64,
    /// `sum p^2 F`
    pub pf_bar: f64,
}

impl Moments {
    pub fn of(spec: &SystemSpec) -> Self {
        let mut m = [CompensatedSum::new(); 5];
        for (x, &p) in spec.probabilities().iter().enumerate() {
            let f = spec.cdf()[x];
            m[0].add(p * p);
            m[1].add(p * p * p);
            m[2].add(p * f);
            m[3].add(p * f * f);
            m[4].add(p * p * f);
        }
        Self {
            p_bar: m[0].value(),
            p2_bar: m[1].value(),
            f_bar: m[2].value(),
            f2_bar: m[3].value(),
            pf_bar: m[4].value(),
        }
    }
}

/// Lyapunov exponent in nats per step: the entropy `-sum p ln p`.
pub fn lyapunov_exact(spec: &SystemSpec) -> f64 {
    spec.probabilities()
        .iter()
        .map(|&p| -p * p.ln())
        .collect::<CompensatedSum>()
        .value()
}

/// Average log-slope `(1/n) sum ln(1/p(x_i))` along an itinerary.
pub fn lyapunov_of_itinerary(spec: &SystemSpec, symbols: &[usize]) -> Result<f64> {
    if symbols.is_empty() {
        return Err(domain("need at least one step"));
    }
    let total: CompensatedSum = symbols.iter().map(|&x| -spec.p(x).ln()).collect();
    Ok(total.value() / symbols.len() as f64)
}

/// Empirical Lyapunov exponent along the double-precision orbit of `s0`.
pub fn lyapunov_empirical(spec: &SystemSpec, s0: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(domain("need at least one step"));
    }
    let traj = dynamics::iterate(spec, s0, n)?;
    lyapunov_of_itinerary(spec, &traj.symbols)
}

/// `R_S(k) = E{S_0 S_k} = 1/4 + p_bar^|k| / 12`.
pub fn autocorr_state_exact(spec: &SystemSpec, k: i64) -> f64 {
    0.25 + Moments::of(spec).p_bar.powi(k.unsigned_abs() as i32) / 12.0
}

/// `R_U(k) = Q p_bar^|k|`.
pub fn autocorr_input_exact(spec: &SystemSpec, q: f64, k: i64) -> f64 {
    q * Moments::of(spec).p_bar.powi(k.unsigned_abs() as i32)
}

/// Which process an empirical statistic is computed on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Signal {
    /// The raw states `s_t`.
    State,
    /// Channel inputs `u_t = sqrt(12 Q) (s_t - 1/2)`.
    Input { q: f64 },
}

impl Signal {
    fn values(&self, states: &[f64]) -> Vec<f64> {
        match *self {
            Signal::State => states.to_vec(),
            Signal::Input { q } => {
                let a = (12.0 * q).sqrt();
                states.iter().map(|s| a * (s - 0.5)).collect()
            }
        }
    }

    /// Closed-form autocorrelation at lag `k`.
    pub fn exact_autocorr(&self, spec: &SystemSpec, k: i64) -> f64 {
        match *self {
            Signal::State => autocorr_state_exact(spec, k),
            Signal::Input { q } => autocorr_input_exact(spec, q, k),
        }
    }
}

/// Time average `(1/(n-k)) sum_t v_t v_{t+k}` over one sequence.
pub fn lag_product_mean(values: &[f64], k: usize) -> f64 {
    let m = values.len() - k;
    let s: CompensatedSum = (0..m).map(|t| values[t] * values[t + k]).collect();
    s.value() / m as f64
}

/// Empirical autocorrelation at one lag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LagEstimate {
    pub lag: usize,
    pub mean: f64,
    pub stderr: f64,
}

/// Ensemble estimate of the autocorrelation for lags `0..=k_max`.
///
/// Each trial samples a stationary trajectory (uniform initial state) of
/// `n` transmitted samples `t = 1..=n`, takes the per-trajectory time
/// average of lagged products, and the trials are averaged. Standard errors
/// come from the across-trial spread. Trial `i` uses the sub-seed
/// `derive_seed(seed, STATIONARY, i, 0)`, so results do not depend on the
/// thread count.
pub fn autocorr_empirical(
    spec: &SystemSpec,
    signal: Signal,
    n: usize,
    trials: usize,
    k_max: usize,
    seed: u64,
) -> Result<Vec<LagEstimate>> {
    if trials == 0 {
        return Err(domain("trials must be at least 1"));
    }
    if n <= k_max {
        return Err(domain(format!("n = {n} must exceed k_max = {k_max}")));
    }
    let per_trial: Vec<Vec<f64>> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::rng_from_seed(rng::derive_seed(seed, tags::STATIONARY, i as u64, 0));
            let traj = dynamics::sample_stationary(spec, n, &mut rng);
            let v = signal.values(&traj.states[1..]);
            (0..=k_max).map(|k| lag_product_mean(&v, k)).collect()
        })
        .collect();
    Ok((0..=k_max)
        .map(|k| {
            let samples: Vec<f64> = per_trial.iter().map(|row| row[k]).collect();
            let est = MeanEstimate::from_samples(&samples);
            LagEstimate {
                lag: k,
                mean: est.mean,
                stderr: est.stderr,
            }
        })
        .collect())
}

/// Mean and across-draw variance of single-trajectory time averages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeAverageSpread {
    pub n: usize,
    pub draws: usize,
    pub mean: f64,
    pub variance: f64,
}

/// Spread of single-trajectory time averages.
///
/// Draws `draws` independent stationary trajectories of length `n`, computes
/// the lag-`k` time average on each, and reports the sample variance across
/// draws. Ergodicity shows up as this variance shrinking with `n`.
pub fn ergodicity_spread(
    spec: &SystemSpec,
    signal: Signal,
    k: usize,
    n: usize,
    draws: usize,
    seed: u64,
) -> Result<TimeAverageSpread> {
    if draws < 2 {
        return Err(domain("need at least two draws"));
    }
    if n <= k {
        return Err(domain(format!("n = {n} must exceed k = {k}")));
    }
    let averages: Vec<f64> = (0..draws)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::rng_from_seed(rng::derive_seed(seed, tags::STATIONARY, i as u64, n as u64));
            let traj = dynamics::sample_stationary(spec, n, &mut rng);
            lag_product_mean(&signal.values(&traj.states[1..]), k)
        })
        .collect();
    let est = MeanEstimate::from_samples(&averages);
    Ok(TimeAverageSpread {
        n,
        draws,
        mean: est.mean,
        variance: est.stderr * est.stderr * draws as f64,
    })
}

/// Factorisation of the channel-output spectrum.
///
/// `S_Y(e^{jw}) = Q(1-p_bar^2)/|1-p_bar e^{-jw}|^2 + sigma2
///              = A |1 - tau e^{-jw}|^2 / |1 - p_bar e^{-jw}|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumParams {
    pub a: f64,
    pub tau: f64,
    pub p_bar: f64,
    pub q: f64,
    pub sigma2: f64,
}

impl SpectrumParams {
    /// Relative residuals of `A(1+tau^2) = sigma2(1+p_bar^2) + Q(1-p_bar^2)`
    /// and `A tau = sigma2 p_bar`.
    pub fn coefficient_residuals(&self) -> (f64, f64) {
        let b = self.sigma2 * (1.0 + self.p_bar * self.p_bar) + self.q * (1.0 - self.p_bar * self.p_bar);
        let c = self.sigma2 * self.p_bar;
        let r1 = (self.a * (1.0 + self.tau * self.tau) - b).abs() / b;
        let r2 = if c == 0.0 {
            (self.a * self.tau).abs()
        } else {
            (self.a * self.tau - c).abs() / c
        };
        (r1, r2)
    }

    /// Sum form of `S_Y` at radian frequency `w`.
    pub fn output_spectrum_sum(&self, w: f64) -> f64 {
        self.q * (1.0 - self.p_bar * self.p_bar) / pole_gain(self.p_bar, w) + self.sigma2
    }

    /// Factored form of `S_Y` at radian frequency `w`.
    pub fn output_spectrum_factored(&self, w: f64) -> f64 {
        self.a * pole_gain(self.tau, w) / pole_gain(self.p_bar, w)
    }
}

/// `|1 - c e^{-jw}|^2`
fn pole_gain(c: f64, w: f64) -> f64 {
    1.0 - 2.0 * c * w.cos() + c * c
}

/// Solves for `(A, tau)` by matching coefficients of the two spectrum forms.
///
/// With `B = sigma2(1+p_bar^2) + Q(1-p_bar^2)` and `c = sigma2 p_bar`, `tau`
/// is the root of `tau^2 - (B/c) tau + 1 = 0` inside the unit disk.
pub fn spectrum_params_from_pbar(p_bar: f64, q: f64, sigma2: f64) -> Result<SpectrumParams> {
    if !(q > 0.0 && q.is_finite()) {
        return Err(domain(format!("power Q = {q} must be positive")));
    }
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(domain(format!("noise variance {sigma2} must be positive")));
    }
    if !(0.0..1.0).contains(&p_bar) {
        return Err(domain(format!("p_bar = {p_bar} must lie in [0, 1)")));
    }
    let b = sigma2 * (1.0 + p_bar * p_bar) + q * (1.0 - p_bar * p_bar);
    let c = sigma2 * p_bar;
    let disc = (b - 2.0 * c) * (b + 2.0 * c);
    if disc < 0.0 {
        return Err(Error::Numerical(format!("negative discriminant {disc}")));
    }
    let big = b + disc.sqrt();
    Ok(SpectrumParams {
        a: 0.5 * big,
        tau: 2.0 * c / big,
        p_bar,
        q,
        sigma2,
    })
}

pub fn spectrum_params(spec: &SystemSpec, q: f64, sigma2: f64) -> Result<SpectrumParams> {
    spectrum_params_from_pbar(Moments::of(spec).p_bar, q, sigma2)
}

/// Channel-output spectrum at radian frequency `w` in `[-pi, pi]`.
pub fn output_spectrum(params: &SpectrumParams, w: f64) -> f64 {
    let sum = params.output_spectrum_sum(w);
    debug_assert!((sum - params.output_spectrum_factored(w)).abs() <= 1e-9 * sum);
    sum
}

/// `(1/2pi) int_{-pi}^{pi} ln S_Y(w) dw` by the trapezoid rule on `points`
/// equispaced frequencies (spectrally accurate for this smooth periodic
/// integrand).
pub fn log_spectrum_mean(params: &SpectrumParams, points: usize) -> f64 {
    let h = 2.0 * std::f64::consts::PI / points as f64;
    let s: CompensatedSum = (0..points)
        .map(|i| params.output_spectrum_sum(-std::f64::consts::PI + i as f64 * h).ln())
        .collect();
    s.value() / points as f64
}

/// Length of the signal locus `u^n(theta)`, `theta` in `[0, 1]`, with its
/// bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocusReport {
    pub n: usize,
    pub exact: f64,
    /// `sqrt(12Q) r^n`
    pub lower: f64,
    /// `sqrt(12Qn) r^n`
    pub upper: f64,
}

/// Exact locus length by enumerating all `r^n` continuity cells.
///
/// On the cell labelled `x^n`, `|du_i/dtheta| = sqrt(12Q) prod_{j<=i}
/// 1/p(x_j)`, so the cell contributes its length `prod p(x_i)` times the
/// norm of that derivative vector.
pub fn locus_length(spec: &SystemSpec, q: f64, n: usize, budget: u128) -> Result<LocusReport> {
    if !(q > 0.0) {
        return Err(domain(format!("power Q = {q} must be positive")));
    }
    if n == 0 {
        return Err(domain("n must be at least 1"));
    }
    let r = spec.r();
    let cells = (r as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if cells > budget {
        return Err(Error::Budget {
            what: "locus enumeration cells",
            needed: cells,
            budget,
        });
    }
    // Split on the first symbol; each branch is enumerated sequentially and
    // the branches are combined in symbol order.
    let branches: Vec<f64> = (0..r)
        .into_par_iter()
        .map(|x1| {
            let mut total = CompensatedSum::new();
            let p1 = spec.p(x1);
            enumerate_locus(spec, n, p1, 1.0 / (p1 * p1), &mut total);
            total.value()
        })
        .collect();
    let sum: CompensatedSum = branches.into_iter().collect();
    let scale = (12.0 * q).sqrt();
    let rn = (r as f64).powi(n as i32);
    Ok(LocusReport {
        n,
        exact: scale * sum.value(),
        lower: scale * rn,
        upper: scale * (n as f64).sqrt() * rn,
    })
}

/// Odometer over the remaining `n - 1` symbols below a fixed first symbol.
fn enumerate_locus(spec: &SystemSpec, n: usize, p1: f64, slope1_sq: f64, total: &mut CompensatedSum) {
    let r = spec.r();
    // prob[k], slope_sq[k], sum_sq[k] describe the prefix of depth k + 1
    let mut digits = vec![0usize; n];
    let mut prob = vec![0.0; n];
    let mut slope_sq = vec![0.0; n];
    let mut sum_sq = vec![0.0; n];
    prob[0] = p1;
    slope_sq[0] = slope1_sq;
    sum_sq[0] = slope1_sq;
    let mut fill_from = 1;
    loop {
        for k in fill_from..n {
            let p = spec.p(digits[k]);
            prob[k] = prob[k - 1] * p;
            slope_sq[k] = slope_sq[k - 1] / (p * p);
            sum_sq[k] = sum_sq[k - 1] + slope_sq[k];
        }
        total.add(prob[n - 1] * sum_sq[n - 1].sqrt());
        // advance the odometer (position 0 is fixed)
        let mut k = n - 1;
        loop {
            if k == 0 {
                return;
            }
            digits[k] += 1;
            if digits[k] < r {
                break;
            }
            digits[k] = 0;
            k -= 1;
        }
        fill_from = k;
    }
}

/// `sqrt(12Q) sqrt(sum_{i=1}^n r^{2i})`, the exact locus length of the
/// uniform map.
pub fn locus_length_uniform(r: usize, q: f64, n: usize) -> f64 {
    let s: CompensatedSum = (1..=n).map(|i| (r as f64).powi(2 * i as i32)).collect();
    (12.0 * q).sqrt() * s.value().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{LN_2, PI};

    fn skewed() -> SystemSpec {
        SystemSpec::new(&[0.25, 0.75]).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert!((lyapunov_exact(&SystemSpec::uniform(2).unwrap()) - LN_2).abs() < 1e-15);
        assert!((lyapunov_exact(&SystemSpec::uniform(4).unwrap()) - 4f64.ln()).abs() < 1e-15);
        let h = -0.25 * 0.25f64.ln() - 0.75 * 0.75f64.ln();
        assert!((lyapunov_exact(&skewed()) - h).abs() < 1e-15);
        assert!((h - 0.562335).abs() < 1e-6);
    }

    #[test]
    fn empirical_lyapunov_uniform_and_fixed_point() {
        let spec = SystemSpec::uniform(2).unwrap();
        for &s0 in &[0.1, 0.77, 0.5] {
            assert_eq!(lyapunov_empirical(&spec, s0, 1000).unwrap(), LN_2);
        }
        let s = skewed();
        for n in [1, 10, 100] {
            let l = lyapunov_empirical(&s, 0.0, n).unwrap();
            assert!((l - 4f64.ln()).abs() < 1e-15);
        }
        assert!(lyapunov_empirical(&s, 0.3, 0).is_err());
    }

    #[test]
    fn autocorr_closed_forms() {
        let d = SystemSpec::uniform(2).unwrap();
        for r in 2..6 {
            assert!((autocorr_state_exact(&SystemSpec::uniform(r).unwrap(), 0) - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!((autocorr_state_exact(&d, 1) - 7.0 / 24.0).abs() < 1e-15);
        assert!((autocorr_state_exact(&d, 60) - 0.25).abs() < 1e-15);
        assert_eq!(autocorr_input_exact(&d, 1.0, 2), 0.25);
        assert_eq!(autocorr_input_exact(&d, 3.5, 0), 3.5);
        assert!((autocorr_input_exact(&SystemSpec::uniform(3).unwrap(), 2.0, 1) - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(autocorr_input_exact(&d, 1.0, -2), 0.25);
    }

    /// Brute-force oracle: numerically integrate s0 * s_k(s0) over [0, 1]
    /// cell by cell (s_k is affine on each depth-k cell).
    fn state_autocorr_by_quadrature(spec: &SystemSpec, k: usize) -> f64 {
        if k == 0 {
            return 1.0 / 3.0;
        }
        let r = spec.r();
        let mut total = 0.0;
        let cells = r.pow(k as u32);
        for idx in 0..cells {
            let mut x = vec![0; k];
            let mut v = idx;
            for slot in x.iter_mut().rev() {
                *slot = v % r;
                v /= r;
            }
            let c = dynamics::cell_affine(spec, &x).unwrap();
            // s_k goes linearly from 0 to 1 across [lower, lower + width];
            // Simpson is exact for this quadratic integrand.
            let (a, b) = (c.lower, c.lower + c.width);
            let f = |s0: f64| s0 * (s0 - a) / c.width;
            total += (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b));
        }
        total
    }

    #[test]
    fn state_autocorr_matches_quadrature_oracle() {
        for p in [vec![0.5, 0.5], vec![0.25, 0.75], vec![0.2, 0.5, 0.3]] {
            let spec = SystemSpec::new(&p).unwrap();
            for k in 0..6 {
                let oracle = state_autocorr_by_quadrature(&spec, k);
                let exact = autocorr_state_exact(&spec, k as i64);
                assert!((oracle - exact).abs() < 1e-12, "p={p:?} k={k}: {oracle} vs {exact}");
            }
        }
    }

    #[test]
    fn moments_of_dyadic_map() {
        let m = Moments::of(&SystemSpec::uniform(2).unwrap());
        assert_eq!(m.p_bar, 0.5);
        assert_eq!(m.p2_bar, 0.25);
        assert_eq!(m.f_bar, 0.25);
        assert_eq!(m.f2_bar, 0.125);
        assert_eq!(m.pf_bar, 0.125);
    }

    #[test]
    fn empirical_autocorr_matches_input_closed_form() {
        for p in [vec![0.5, 0.5], vec![0.25, 0.75], vec![0.2, 0.5, 0.3]] {
            let spec = SystemSpec::new(&p).unwrap();
            let signal = Signal::Input { q: 1.0 };
            let est = autocorr_empirical(&spec, signal, 64, 20_000, 8, 7).unwrap();
            for e in &est {
                let exact = signal.exact_autocorr(&spec, e.lag as i64);
                assert!(
                    (e.mean - exact).abs() <= 4.0 * e.stderr,
                    "p={p:?} k={}: {} vs {exact} (se {})",
                    e.lag,
                    e.mean,
                    e.stderr
                );
            }
            assert!((est[0].mean - 1.0).abs() < 0.01);
        }
    }

    #[test]
    fn empirical_autocorr_is_seed_deterministic() {
        let spec = skewed();
        let a = autocorr_empirical(&spec, Signal::State, 16, 500, 3, 99).unwrap();
        let b = autocorr_empirical(&spec, Signal::State, 16, 500, 3, 99).unwrap();
        assert_eq!(a, b);
        assert!(autocorr_empirical(&spec, Signal::State, 3, 5, 3, 1).is_err());
        assert!(autocorr_empirical(&spec, Signal::State, 8, 0, 3, 1).is_err());
    }

    #[test]
    fn time_average_variance_shrinks_with_length() {
        let spec = skewed();
        let short = ergodicity_spread(&spec, Signal::State, 1, 64, 400, 3).unwrap();
        let long = ergodicity_spread(&spec, Signal::State, 1, 4096, 400, 3).unwrap();
        assert!(long.variance < short.variance / 20.0);
        assert!((long.mean - autocorr_state_exact(&spec, 1)).abs() < 0.01);
    }

    #[test]
    fn spectrum_params_example() {
        let p = spectrum_params_from_pbar(0.5, 1.0, 1.0).unwrap();
        assert!((p.tau - (2.0 - 3f64.sqrt())).abs() < 1e-15);
        assert!((p.a - (2.0 + 3f64.sqrt()) / 2.0).abs() < 1e-15);
        assert!((p.output_spectrum_sum(0.0) - 4.0).abs() < 1e-14);
        assert!((p.output_spectrum_sum(PI) - 4.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn spectrum_white_signal_limit() {
        let spec = SystemSpec::uniform(1000).unwrap();
        let p = spectrum_params(&spec, 2.0, 0.5).unwrap();
        assert!(p.tau < 1e-3);
        assert!((p.a - 2.5).abs() < 1e-2);
    }

    #[test]
    fn spectrum_noiseless_limit_matches_pointwise() {
        let p = spectrum_params_from_pbar(0.4, 1.0, 1e-12).unwrap();
        assert!(p.tau < 1e-11);
        for i in 0..1000 {
            let w = -PI + 2.0 * PI * i as f64 / 1000.0;
            let s = p.output_spectrum_sum(w);
            assert!((s - p.output_spectrum_factored(w)).abs() <= 1e-9 * s);
        }
    }

    #[test]
    fn szego_identity() {
        let p = spectrum_params_from_pbar(0.5, 1.0, 1.0).unwrap();
        assert!((log_spectrum_mean(&p, 4096) - p.a.ln()).abs() < 1e-12);
    }

    #[test]
    fn locus_examples() {
        let l = locus_length(&SystemSpec::uniform(2).unwrap(), 1.0 / 12.0, 3, DEFAULT_ENUMERATION_BUDGET).unwrap();
        assert!((l.exact - 84f64.sqrt()).abs() < 1e-12);
        assert!((l.lower - 8.0).abs() < 1e-12);
        assert!((l.upper - 8.0 * 3f64.sqrt()).abs() < 1e-12);
        for p in [vec![0.25, 0.75], vec![0.2, 0.5, 0.3]] {
            let spec = SystemSpec::new(&p).unwrap();
            let l = locus_length(&spec, 1.0 / 12.0, 1, DEFAULT_ENUMERATION_BUDGET).unwrap();
            assert!((l.exact - p.len() as f64).abs() < 1e-12);
            assert!((l.exact - l.lower).abs() < 1e-12);
        }
        let l = locus_length(&skewed(), 1.0 / 12.0, 2, DEFAULT_ENUMERATION_BUDGET).unwrap();
        assert!(l.exact >= 4.0 && l.exact <= 4.0 * 2f64.sqrt());
    }

    #[test]
    fn locus_matches_brute_force_cells() {
        let spec = SystemSpec::new(&[0.2, 0.5, 0.3]).unwrap();
        let n = 4;
        let mut total = 0.0;
        for idx in 0..81 {
            let mut x = vec![0; n];
            let mut v = idx;
            for slot in x.iter_mut().rev() {
                *slot = v % 3;
                v /= 3;
            }
            let c = dynamics::cell_affine(&spec, &x).unwrap();
            total += c.width * c.slopes.iter().map(|m| m * m).sum::<f64>().sqrt();
        }
        let l = locus_length(&spec, 1.0 / 12.0, n, DEFAULT_ENUMERATION_BUDGET).unwrap();
        assert!((l.exact - total).abs() < 1e-10 * total);
    }

    #[test]
    fn locus_budget_is_enforced() {
        let spec = SystemSpec::uniform(2).unwrap();
        match locus_length(&spec, 1.0, 30, DEFAULT_ENUMERATION_BUDGET) {
            Err(Error::Budget { needed, .. }) => assert_eq!(needed, 1 << 30),
            other => panic!("expected budget error, got {other:?}"),
        }
    }
}
