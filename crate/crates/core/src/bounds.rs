//! Scalar bound quantities for parameter modulation over the AWGN channel.
//!
//! All correction terms that vanish with the SNR (`o(gamma)`, `Delta(gamma)`)
//! are set to zero, so the exponents here are leading order. The finite-`n`
//! form of the generic lower bound is exposed separately so a caller can
//! plug in any grid size `M` and locus length `L_n`.

use crate::channel::ChannelConfig;
use crate::dynamics::SystemSpec;
use crate::error::{domain, Result};
use crate::estimators::CostFunction;
use crate::numeric::{bisect, gaussian_tail};
use crate::statistics::{self, Moments};

/// Solves `w - ln(1 + w) = 2 alpha` for `w >= 0`.
///
/// The bracket `[0, hi]` starts at `hi = 1` and doubles until the residual
/// changes sign; bisection then runs to machine precision.
pub fn solve_w(alpha: f64) -> Result<f64> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(domain(format!("outage exponent alpha = {alpha} must be finite and >= 0")));
    }
    if alpha == 0.0 {
        return Ok(0.0);
    }
    let f = |w: f64| w - w.ln_1p() - 2.0 * alpha;
    let mut hi = 1.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    bisect(f, 0.0, hi)
}

/// `C = ln(1 + gamma) / 2`.
pub fn capacity(gamma: f64) -> f64 {
    0.5 * gamma.ln_1p()
}

/// Shaping loss `mu = ln(2 pi e / 12) / 2` of a uniform input marginal.
pub fn shaping_loss() -> f64 {
    0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E / 12.0).ln()
}

/// `R(alpha, gamma) = ln(gamma / (1 + w(alpha))) / 2`.
pub fn rate(alpha: f64, gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    Ok(0.5 * (gamma / (1.0 + solve_w(alpha)?)).ln())
}

/// `E(alpha, gamma) = zeta(R(alpha, gamma))`; `None` for costs without a
/// closed-form `zeta`.
pub fn exponent(alpha: f64, gamma: f64, cost: &CostFunction) -> Result<Option<f64>> {
    Ok(cost.zeta(rate(alpha, gamma)?))
}

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("SNR gamma = {gamma} must be positive and finite")))
    }
}

/// Largest alphabet size `r >= 2` with `r < e^{C - mu}`, or 1 when there is
/// none.
pub fn alphabet_limit(gamma: f64) -> Result<u64> {
    check_gamma(gamma)?;
    let cap = (capacity(gamma) - shaping_loss()).exp();
    let r = cap.ceil() - 1.0;
    Ok(if r >= 2.0 { r as u64 } else { 1 })
}

/// `C1 = ln(A / sigma2) / 2` from the spectral factorisation.
pub fn c1_bound(spec: &SystemSpec, cfg: &ChannelConfig) -> Result<f64> {
    c1_from_pbar(Moments::of(spec).p_bar, cfg)
}

/// [`c1_bound`] for a given `p_bar = sum p^2`.
pub fn c1_from_pbar(p_bar: f64, cfg: &ChannelConfig) -> Result<f64> {
    let sp = statistics::spectrum_params_from_pbar(p_bar, cfg.q, cfg.sigma2)?;
    Ok(0.5 * (sp.a / cfg.sigma2).ln())
}

/// Exponent of the locus-length cap, `ln(gamma)/2 - mu - ln(1 + w)/2`.
pub fn ln_star_exponent(alpha: f64, gamma: f64) -> Result<f64> {
    Ok(rate(alpha, gamma)? - shaping_loss())
}

/// `ln L_n* = ln(sqrt(2 pi e) sigma) + n * ln_star_exponent`.
pub fn ln_star_log(alpha: f64, cfg: &ChannelConfig, n: usize) -> Result<f64> {
    let pre = 0.5 * (2.0 * std::f64::consts::PI * std::f64::consts::E * cfg.sigma2).ln();
    Ok(pre + n as f64 * ln_star_exponent(alpha, cfg.gamma)?)
}

/// Smallest `n` from which the locus lower bound `sqrt(12Q) r^n` exceeds
/// the cap `L_n*`, or `None` if it never does.
pub fn locus_crossing(r: u64, alpha: f64, cfg: &ChannelConfig) -> Result<Option<u64>> {
    if r < 2 {
        return Err(domain(format!("alphabet size must be at least 2, got {r}")));
    }
    let slope = (r as f64).ln() - ln_star_exponent(alpha, cfg.gamma)?;
    if slope <= 0.0 {
        return Ok(None);
    }
    let gap = ln_star_log(alpha, cfg, 0)? - 0.5 * (12.0 * cfg.q).ln();
    let mut n = if gap < 0.0 { 0 } else { (gap / slope).floor() as u64 };
    // settle the boundary against the direct comparison
    let exceeds = |n: u64| -> Result<bool> {
        Ok(0.5 * (12.0 * cfg.q).ln() + n as f64 * (r as f64).ln() > ln_star_log(alpha, cfg, n as usize)?)
    };
    while n > 0 && exceeds(n - 1)? {
        n -= 1;
    }
    while !exceeds(n)? {
        n += 1;
    }
    Ok(Some(n))
}

/// Generic weak-noise lower bound at finite `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakNoiseBound {
    /// Leading-order exponent `E(alpha, gamma)`, when `zeta` is known.
    pub exponent: Option<f64>,
    /// `2 rho(1/(2M)) [Q_tail(L_n / (2 sigma M)) - e^{-alpha n}]`, clamped
    /// at zero.
    pub finite_n: f64,
}

/// Evaluates the generic lower bound for a caller-supplied grid size `m`
/// and locus length `l_n`.
pub fn weak_noise_lower_bound(
    alpha: f64,
    cfg: &ChannelConfig,
    cost: &CostFunction,
    n: usize,
    m: f64,
    l_n: f64,
) -> Result<WeakNoiseBound> {
    if !(m >= 1.0 && m.is_finite()) {
        return Err(domain(format!("grid size M = {m} must be finite and >= 1")));
    }
    if !(l_n > 0.0) {
        return Err(domain(format!("locus length {l_n} must be positive")));
    }
    let bracket = gaussian_tail(l_n / (2.0 * cfg.sigma() * m)) - (-alpha * n as f64).exp();
    Ok(WeakNoiseBound {
        exponent: exponent(alpha, cfg.gamma, cost)?,
        finite_n: (2.0 * cost.cost(0.5 / m) * bracket).max(0.0),
    })
}

/// All scalar bound quantities for one `(alpha, gamma)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub alpha: f64,
    pub gamma: f64,
    pub w_alpha: f64,
    pub rate: f64,
    pub exponent: Option<f64>,
    pub capacity: f64,
    pub mu: f64,
    pub r_max: u64,
    /// Present when a `p_bar` is supplied.
    pub c1: Option<f64>,
    pub ln_star_exponent: f64,
}

impl BoundReport {
    pub fn compute(alpha: f64, gamma: f64, cost: &CostFunction, p_bar: Option<f64>) -> Result<Self> {
        let c1 = match p_bar {
            Some(pb) => Some(c1_from_pbar(pb, &ChannelConfig::from_gamma(1.0, gamma)?)?),
            None => None,
        };
        Ok(Self {
            alpha,
            gamma,
            w_alpha: solve_w(alpha)?,
            rate: rate(alpha, gamma)?,
            exponent: exponent(alpha, gamma, cost)?,
            capacity: capacity(gamma),
            mu: shaping_loss(),
            r_max: alphabet_limit(gamma)?,
            c1,
            ln_star_exponent: ln_star_exponent(alpha, gamma)?,
        })
    }
}
