//! Maximum-likelihood estimation of the initial state from noisy channel
//! outputs, anomaly accounting and the Monte Carlo harness.
//!
//! On the continuity cell labelled by an itinerary `x^n` every state is an
//! affine function of `theta`, so the squared-error residual is a quadratic
//! in `theta` and its minimum over the cell has a closed form. The search
//! over cells is a depth-first branch and bound on the itinerary tree:
//! a node fixes a prefix `x_1..x_k`, and in the local coordinate
//! `t = s_k` in `[0, 1]` the residual of the first `k` samples is a
//! quadratic `A t^2 + B t + C`. Later samples only add non-negative terms,
//! so the minimum of that quadratic over `[0, 1]` bounds every leaf below
//! the node. The result is the exact minimiser over all `r^n` cells, equal
//! to plain enumeration ([`ml_estimate_exhaustive`]) but typically visiting
//! a handful of cells at high SNR.

use rayon::prelude::*;

use crate::channel::{self, ChannelConfig, SignalWindow};
use crate::dynamics::{self, SystemSpec};
use crate::error::{domain, Error, Result};
use crate::numeric::{CompensatedSum, MeanEstimate};
use crate::rng::{self, tags};

/// Default budget on the number of continuity cells `r^n`.
pub const DEFAULT_CELL_BUDGET: u128 = 1 << 24;

/// Error cost `rho(e)`.
#[derive(Debug, Clone, Copy)]
pub enum CostFunction {
    /// `|e|^p` with `p >= 1`; `zeta(c) = p c`.
    PowerLaw(f64),
    /// Any convex even cost with `rho(0) = 0`. Usable for cost evaluation
    /// only; it has no closed-form `zeta`.
    Convex(fn(f64) -> f64),
}

impl CostFunction {
    pub fn power_law(p: f64) -> Result<Self> {
        if p >= 1.0 && p.is_finite() {
            Ok(CostFunction::PowerLaw(p))
        } else {
            Err(domain(format!("cost exponent p = {p} must be finite and >= 1")))
        }
    }

    /// `rho(e) = e^2`.
    pub fn squared() -> Self {
        CostFunction::PowerLaw(2.0)
    }

    pub fn cost(&self, e: f64) -> f64 {
        match *self {
            CostFunction::PowerLaw(p) if p == 2.0 => e * e,
            CostFunction::PowerLaw(p) if p == 1.0 => e.abs(),
            CostFunction::PowerLaw(p) => e.abs().powf(p),
            CostFunction::Convex(f) => f(e),
        }
    }

    /// Exponent map with `rho(e^{-nc}) = e^{-n zeta(c)}`.
    pub fn zeta(&self, c: f64) -> Option<f64> {
        match *self {
            CostFunction::PowerLaw(p) => Some(p * c),
            CostFunction::Convex(_) => None,
        }
    }
}

/// Quadratic `a (t - m)^2 + rest` in a local coordinate.
///
/// Kept in centred form so that adding terms never subtracts large
/// numbers: the residual stays accurate even when it is tiny compared with
/// the energy of the observation.
#[derive(Debug, Clone, Copy)]
struct Quad {
    a: f64,
    m: f64,
    rest: f64,
}

impl Quad {
    const ZERO: Quad = Quad {
        a: 0.0,
        m: 0.0,
        rest: 0.0,
    };

    /// Adds `weight (t - centre)^2`.
    fn add(self, weight: f64, centre: f64) -> Quad {
        let a = self.a + weight;
        if self.a == 0.0 || weight == 0.0 {
            let m = if self.a == 0.0 { centre } else { self.m };
            return Quad { a, m, rest: self.rest };
        }
        let d = self.m - centre;
        Quad {
            a,
            m: (self.a * self.m + weight * centre) / a,
            rest: self.rest + self.a * weight / a * d * d,
        }
    }

    /// Substitutes `t = f + p t'`.
    fn refine(self, f: f64, p: f64) -> Quad {
        Quad {
            a: self.a * p * p,
            m: (self.m - f) / p,
            rest: self.rest,
        }
    }

    /// Minimiser and minimum over `[0, hi]`.
    fn min_on(&self, hi: f64) -> (f64, f64) {
        let t = if self.a > 0.0 { self.m.clamp(0.0, hi) } else { 0.0 };
        let d = t - self.m;
        (t, self.a * d * d + self.rest)
    }
}

/// Result of the ML search.
#[derive(Debug, Clone, PartialEq)]
pub struct MlEstimate {
    pub theta_hat: f64,
    /// Itinerary `x_1..x_n` of the winning cell.
    pub cell: Vec<usize>,
    /// Minimum of `||y - u^n(theta)||^2`.
    pub residual: f64,
    /// Tree nodes expanded by the search.
    pub nodes: u64,
}

fn check_budget(r: usize, n: usize, budget: u128) -> Result<()> {
    let cells = (r as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if cells > budget {
        return Err(Error::Budget {
            what: "ML continuity cells",
            needed: cells,
            budget,
        });
    }
    Ok(())
}

fn steps_from_output(y: &[f64], window: SignalWindow) -> Result<usize> {
    let n = (y.len() + window.first()).saturating_sub(1);
    if n == 0 {
        return Err(domain("need at least one map step in the observation"));
    }
    Ok(n)
}

struct Search<'a> {
    spec: &'a SystemSpec,
    scale: f64,
    /// `z[k] = y_k + scale/2` for state index `k`, `None` if not observed.
    z: Vec<Option<f64>>,
    n: usize,
    prefix: Vec<usize>,
    best: f64,
    best_theta: f64,
    best_cell: Vec<usize>,
    nodes: u64,
}

impl Search<'_> {
    fn child(&self, q: &Quad, x: usize, k: usize) -> Quad {
        let out = q.refine(self.spec.cdf()[x], self.spec.p(x));
        match self.z[k] {
            Some(z) => out.add(self.scale * self.scale, z / self.scale),
            None => out,
        }
    }

    fn visit(&mut self, k: usize, lo: f64, w: f64, q: Quad) {
        self.nodes += 1;
        if k == self.n {
            let (t, v) = q.min_on(1.0);
            if v < self.best || (v == self.best && self.prefix < self.best_cell) {
                self.best = v;
                self.best_theta = (lo + w * t).min(1.0);
                self.best_cell.clone_from(&self.prefix);
            }
            return;
        }
        let mut kids: Vec<(f64, usize, Quad)> = (0..self.spec.r())
            .map(|x| {
                let c = self.child(&q, x, k + 1);
                (c.min_on(1.0).1, x, c)
            })
            .collect();
        kids.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for (lb, x, c) in kids {
            if lb > self.best {
                break;
            }
            self.prefix.push(x);
            let f = self.spec.cdf()[x];
            self.visit(k + 1, lo + w * f, w * self.spec.p(x), c);
            self.prefix.pop();
        }
    }
}

/// Moves `theta` by at most a few ulps so that forward iteration from it
/// follows `cell`. A minimiser clamped to a cell edge can otherwise round
/// into the neighbouring cell, or sit on the excluded right endpoint.
fn settle_in_cell(spec: &SystemSpec, cell: &[usize], theta: f64) -> f64 {
    let follows = |t: f64| dynamics::iterate(spec, t, cell.len()).is_ok_and(|tr| tr.symbols == cell);
    if follows(theta) {
        return theta;
    }
    let (mut up, mut down) = (theta, theta);
    for _ in 0..256 {
        up = up.next_up().min(1.0);
        down = down.next_down().max(0.0);
        if follows(down) {
            return down;
        }
        if follows(up) {
            return up;
        }
    }
    theta
}

/// Exact ML estimate of `theta = s_0` from `y`.
///
/// `y` holds the observed samples of the chosen window: `n + 1` values for
/// [`SignalWindow::WithInitial`], `n` for [`SignalWindow::AfterInitial`].
/// Ties between cells are resolved towards the lexicographically smallest
/// itinerary.
pub fn ml_estimate(
    spec: &SystemSpec,
    cfg: &ChannelConfig,
    y: &[f64],
    window: SignalWindow,
    budget: u128,
) -> Result<MlEstimate> {
    let n = steps_from_output(y, window)?;
    check_budget(spec.r(), n, budget)?;
    let scale = (12.0 * cfg.q).sqrt();
    let first = window.first();
    let z: Vec<Option<f64>> = (0..=n)
        .map(|k| (k >= first).then(|| y[k - first] + 0.5 * scale))
        .collect();
    let root = match z[0] {
        Some(z0) => Quad::ZERO.add(scale * scale, z0 / scale),
        None => Quad::ZERO,
    };
    let mut search = Search {
        spec,
        scale,
        z,
        n,
        prefix: Vec::with_capacity(n),
        best: f64::INFINITY,
        best_theta: f64::NAN,
        best_cell: Vec::new(),
        nodes: 0,
    };
    search.visit(0, 0.0, 1.0, root);
    if !search.best.is_finite() {
        return Err(Error::Numerical(format!("non-finite ML residual {}", search.best)));
    }
    Ok(MlEstimate {
        theta_hat: settle_in_cell(spec, &search.best_cell, search.best_theta),
        cell: search.best_cell,
        residual: search.best.max(0.0),
        nodes: search.nodes,
    })
}

/// ML estimate by visiting every continuity cell.
///
/// Each cell's states come from [`dynamics::cell_affine`]; the residual is
/// minimised over the cell in closed form. Serves as an independent check
/// of [`ml_estimate`].
pub fn ml_estimate_exhaustive(
    spec: &SystemSpec,
    cfg: &ChannelConfig,
    y: &[f64],
    window: SignalWindow,
    budget: u128,
) -> Result<MlEstimate> {
    let n = steps_from_output(y, window)?;
    check_budget(spec.r(), n, budget)?;
    let r = spec.r();
    let scale = (12.0 * cfg.q).sqrt();
    let first = window.first();
    let mut x = vec![0usize; n];
    let mut best: Option<MlEstimate> = None;
    let mut nodes = 0u64;
    loop {
        nodes += 1;
        let cell = dynamics::cell_affine(spec, &x)?;
        // residual as a quadratic in tau = s0 - lower over [0, width]
        let term = |q: Quad, base: f64, slope: f64, y: f64| {
            let d = y - scale * (base - 0.5);
            q.add(scale * scale * slope * slope, d / (scale * slope))
        };
        let mut q = Quad::ZERO;
        if first == 0 {
            q = term(q, cell.lower, 1.0, y[0]);
        }
        for i in 1..=n {
            q = term(q, cell.bases[i - 1], cell.slopes[i - 1], y[i - first]);
        }
        let (tau, v) = q.min_on(cell.width);
        if best.as_ref().is_none_or(|b| v < b.residual) {
            best = Some(MlEstimate {
                theta_hat: (cell.lower + tau).min(1.0),
                cell: x.clone(),
                residual: v,
                nodes: 0,
            });
        }
        let mut k = n;
        loop {
            if k == 0 {
                let mut b = best.expect("at least one cell");
                b.residual = b.residual.max(0.0);
                b.theta_hat = settle_in_cell(spec, &b.cell, b.theta_hat);
                b.nodes = nodes;
                return Ok(b);
            }
            k -= 1;
            x[k] += 1;
            if x[k] < r {
                break;
            }
            x[k] = 0;
        }
    }
}

/// Definition of the outage event.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum AnomalyMode {
    /// The decoded cell differs from the true itinerary.
    #[default]
    CellError,
    /// `|theta_hat - theta| > eps`.
    Threshold(f64),
}

/// Evaluates the outage predicate.
pub fn anomaly_predicate(mode: AnomalyMode, cell_hat: &[usize], truth: &[usize], theta_hat: f64, theta: f64) -> bool {
    match mode {
        AnomalyMode::CellError => cell_hat != truth,
        AnomalyMode::Threshold(eps) => (theta_hat - theta).abs() > eps,
    }
}

/// Scored estimate for one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateOutcome {
    pub theta_hat: f64,
    pub cell_hat: Vec<usize>,
    pub anomalous: bool,
    pub error: f64,
    pub cost: f64,
}

impl EstimateOutcome {
    pub fn assess(est: MlEstimate, theta: f64, truth: &[usize], mode: AnomalyMode, cost: &CostFunction) -> Self {
        let error = est.theta_hat - theta;
        Self {
            anomalous: anomaly_predicate(mode, &est.cell, truth, est.theta_hat, theta),
            theta_hat: est.theta_hat,
            cell_hat: est.cell,
            error,
            cost: cost.cost(error),
        }
    }
}

/// Parameter values scanned for the supremum over `theta`.
#[derive(Debug, Clone, PartialEq)]
pub enum ThetaGrid {
    /// `evenly_spaced` points `i / (evenly_spaced - 1)` followed by `random`
    /// uniform draws, draw `j` from sub-seed
    /// `derive_seed(seed, THETA_GRID, j, 0)`.
    Mixed { evenly_spaced: usize, random: usize },
    Explicit(Vec<f64>),
}

impl Default for ThetaGrid {
    fn default() -> Self {
        ThetaGrid::Mixed {
            evenly_spaced: 33,
            random: 16,
        }
    }
}

impl ThetaGrid {
    pub fn values(&self, seed: u64) -> Vec<f64> {
        match self {
            ThetaGrid::Explicit(v) => v.clone(),
            ThetaGrid::Mixed { evenly_spaced, random } => {
                let mut out: Vec<f64> = match *evenly_spaced {
                    0 => Vec::new(),
                    1 => vec![0.5],
                    m => (0..m).map(|i| i as f64 / (m - 1) as f64).collect(),
                };
                out.extend((0..*random).map(|j| {
                    let mut rng = rng::rng_from_seed(rng::derive_seed(seed, tags::THETA_GRID, j as u64, 0));
                    rng::uniform(&mut rng)
                }));
                out
            }
        }
    }
}

/// Monte Carlo experiment for the state-signal estimator.
#[derive(Debug, Clone)]
pub struct MonteCarloConfig {
    pub spec: SystemSpec,
    pub channel: ChannelConfig,
    pub n: usize,
    pub trials_per_theta: usize,
    pub thetas: ThetaGrid,
    pub cost: CostFunction,
    pub anomaly: AnomalyMode,
    pub window: SignalWindow,
    pub seed: u64,
    pub budget: u128,
}

impl MonteCarloConfig {
    pub fn new(spec: SystemSpec, channel: ChannelConfig, n: usize, trials_per_theta: usize, seed: u64) -> Self {
        Self {
            spec,
            channel,
            n,
            trials_per_theta,
            thetas: ThetaGrid::default(),
            cost: CostFunction::squared(),
            anomaly: AnomalyMode::default(),
            window: SignalWindow::default(),
            seed,
            budget: DEFAULT_CELL_BUDGET,
        }
    }
}

/// Aggregates for one parameter value (or pooled over all of them).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostSummary {
    pub trials: usize,
    pub anomalies: usize,
    pub anomaly_rate: MeanEstimate,
    /// Mean cost over non-anomalous trials.
    pub conditional_cost: MeanEstimate,
    /// Mean cost over anomalous trials.
    pub anomalous_cost: MeanEstimate,
    pub unconditional_cost: MeanEstimate,
}

impl CostSummary {
    fn from_trials(trials: &[(bool, f64)]) -> Self {
        let good: Vec<f64> = trials.iter().filter(|t| !t.0).map(|t| t.1).collect();
        let bad: Vec<f64> = trials.iter().filter(|t| t.0).map(|t| t.1).collect();
        let all: Vec<f64> = trials.iter().map(|t| t.1).collect();
        Self {
            trials: trials.len(),
            anomalies: bad.len(),
            anomaly_rate: MeanEstimate::proportion(bad.len(), trials.len()),
            conditional_cost: MeanEstimate::from_samples(&good),
            anomalous_cost: MeanEstimate::from_samples(&bad),
            unconditional_cost: MeanEstimate::from_samples(&all),
        }
    }

    /// `|E[cost] - ((1-a) E[cost | ok] + a E[cost | anomaly])|` on the sample.
    pub fn decomposition_residual(&self) -> f64 {
        let a = self.anomaly_rate.mean;
        let part = |w: f64, m: &MeanEstimate| if w == 0.0 { 0.0 } else { w * m.mean };
        (self.unconditional_cost.mean - part(1.0 - a, &self.conditional_cost) - part(a, &self.anomalous_cost)).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaSummary {
    pub theta: f64,
    pub summary: CostSummary,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonteCarloReport {
    pub pooled: CostSummary,
    pub per_theta: Vec<ThetaSummary>,
    pub max_anomaly_rate: f64,
    /// Parameter value with the largest conditional mean cost.
    pub worst_theta: f64,
    pub worst_conditional_cost: MeanEstimate,
}

/// Runs the state-signal ML estimator over a grid of `theta` values.
///
/// Trial `i` at grid point `j` uses noise sub-seed
/// `derive_seed(seed, NOISE, j, i)`. True itineraries come from exact
/// rational iteration. Results are independent of the thread count.
pub fn run_monte_carlo(exp: &MonteCarloConfig) -> Result<MonteCarloReport> {
    if exp.n == 0 {
        return Err(domain("n must be at least 1"));
    }
    if exp.trials_per_theta == 0 {
        return Err(domain("trials per theta must be at least 1"));
    }
    check_budget(exp.spec.r(), exp.n, exp.budget)?;
    let thetas = exp.thetas.values(exp.seed);
    if thetas.is_empty() {
        return Err(domain("theta grid is empty"));
    }
    if let Some(t) = thetas.iter().find(|t| !(0.0..=1.0).contains(*t)) {
        return Err(domain(format!("theta {t} is outside [0, 1]")));
    }
    let truths: Vec<(Vec<f64>, Vec<usize>)> = thetas
        .iter()
        .map(|&theta| {
            let traj = dynamics::iterate_exact(&exp.spec, theta, exp.n)?;
            let u = channel::modulate_window(&traj, exp.channel.q, exp.window);
            Ok((u, traj.symbols))
        })
        .collect::<Result<_>>()?;
    let per_trial: Vec<(bool, f64)> = (0..thetas.len() * exp.trials_per_theta)
        .into_par_iter()
        .map(|idx| {
            let (j, i) = (idx / exp.trials_per_theta, idx % exp.trials_per_theta);
            let (u, truth) = &truths[j];
            let seed = rng::derive_seed(exp.seed, tags::NOISE, j as u64, i as u64);
            let y = channel::noisy_output(u, &exp.channel, seed);
            let est = ml_estimate(&exp.spec, &exp.channel, &y, exp.window, exp.budget)?;
            let out = EstimateOutcome::assess(est, thetas[j], truth, exp.anomaly, &exp.cost);
            Ok((out.anomalous, out.cost))
        })
        .collect::<Result<_>>()?;
    let per_theta: Vec<ThetaSummary> = thetas
        .iter()
        .enumerate()
        .map(|(j, &theta)| ThetaSummary {
            theta,
            summary: CostSummary::from_trials(&per_trial[j * exp.trials_per_theta..(j + 1) * exp.trials_per_theta]),
        })
        .collect();
    let max_anomaly_rate = per_theta
        .iter()
        .map(|t| t.summary.anomaly_rate.mean)
        .fold(0.0, f64::max);
    let worst = per_theta
        .iter()
        .filter(|t| t.summary.conditional_cost.count > 0)
        .fold(None::<&ThetaSummary>, |acc, t| match acc {
            Some(a) if a.summary.conditional_cost.mean >= t.summary.conditional_cost.mean => Some(a),
            _ => Some(t),
        });
    let (worst_theta, worst_conditional_cost) = match worst {
        Some(t) => (t.theta, t.summary.conditional_cost),
        None => (f64::NAN, MeanEstimate::from_samples(&[])),
    };
    Ok(MonteCarloReport {
        pooled: CostSummary::from_trials(&per_trial),
        per_theta,
        max_anomaly_rate,
        worst_theta,
        worst_conditional_cost,
    })
}

/// Weak-noise mean squared error of the state-signal estimator for the
/// uniform map: `sigma2 / (12 Q sum_i r^{2i})`, the sum running over the
/// transmitted state indices.
pub fn weak_noise_mse_uniform(r: usize, cfg: &ChannelConfig, n: usize, window: SignalWindow) -> f64 {
    let s: CompensatedSum = (window.first()..=n).map(|i| (r as f64).powi(2 * i as i32)).collect();
    cfg.sigma2 / (12.0 * cfg.q * s.value())
}
