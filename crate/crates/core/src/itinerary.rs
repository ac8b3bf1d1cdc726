//! Itinerary-coded transmission of a parameter.
//!
//! `theta` is quantised to the nearest point of the grid
//! `(2i + 1) / (2M)`, `i = 0..M`. Grid point `i` owns a random initial
//! state `psi[i]`, shared by transmitter and receiver. The transmitter sends
//! the constellation image `c(x) = delta (x - (r - 1)/2)` of the itinerary
//! of `psi[i]` under a map whose cell probabilities are a finely quantised
//! Gaussian. Since the `psi` are independent uniforms, the codewords are
//! i.i.d. draws from that quantised Gaussian, i.e. a random Gaussian
//! codebook. The receiver decodes by minimum distance and reports the grid
//! point of the decoded index; when decoding succeeds the error is the
//! quantisation error alone, at most `1 / (2M)`.
//!
//! Indices in this module are 0-based.
//!
//! # Codebook file layout
//!
//! Little-endian, no padding:
//!
//! ```text
//! u64 n | u64 M | u64 r_cw | f64 delta | u64 seed
//! f64 psi[0..M]
//! f64 codewords[0..M][0..n]   (row-major)
//! ```

use std::collections::HashSet;

use rayon::prelude::*;

use crate::channel::ChannelConfig;
use crate::dynamics::{self, SystemSpec};
use crate::error::{domain, Error, Result};
use crate::estimators::CostFunction;
use crate::numeric::{bisect, gaussian_tail, CompensatedSum, MeanEstimate};
use crate::rng::{self, tags, Gaussian};

/// Largest codebook, in stored values `M * n`.
pub const CODEBOOK_VALUE_BUDGET: u128 = 1 << 26;

const HEADER_BYTES: usize = 40;

/// Parameters of the scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub n: usize,
    pub m: usize,
    pub delta: f64,
    pub r_cw: usize,
    pub q: f64,
    pub sigma2: f64,
    pub seed: u64,
}

impl SchemeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(domain("block length n must be at least 1"));
        }
        if self.m == 0 {
            return Err(domain("grid size M must be at least 1"));
        }
        if self.r_cw < 3 || self.r_cw.is_multiple_of(2) {
            return Err(domain(format!("constellation size r_cw = {} must be odd and >= 3", self.r_cw)));
        }
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(domain(format!("spacing delta = {} must be positive", self.delta)));
        }
        ChannelConfig::new(self.q, self.sigma2)?;
        if (self.r_cw as f64) * self.delta < 8.0 * self.q.sqrt() {
            return Err(domain(format!(
                "constellation span r_cw * delta = {} must be at least 8 sqrt(Q) = {}",
                self.r_cw as f64 * self.delta,
                8.0 * self.q.sqrt()
            )));
        }
        Ok(())
    }

    pub fn channel(&self) -> Result<ChannelConfig> {
        ChannelConfig::new(self.q, self.sigma2)
    }

    /// `R = ln M / n` in nats per channel use.
    pub fn rate(&self) -> f64 {
        (self.m as f64).ln() / self.n as f64
    }
}

/// `c(x) = delta (x - (r - 1)/2)`.
pub fn constellation(r_cw: usize, delta: f64) -> Vec<f64> {
    let mid = (r_cw - 1) as f64 / 2.0;
    (0..r_cw).map(|x| delta * (x as f64 - mid)).collect()
}

/// Cell probabilities of `N(0, var)` on the constellation cells.
///
/// Interior symbol `x` owns `[delta (x - r/2), delta (x - r/2 + 1)]`; the
/// two edge symbols take the tails. The vector is exactly symmetric.
fn quantized_gaussian(r_cw: usize, delta: f64, var: f64) -> Vec<f64> {
    let sd = var.sqrt();
    let half = r_cw as f64 / 2.0;
    // P(a < N < b) for a >= 0, or via symmetry
    let mass = |a: f64, b: f64| -> f64 {
        if a >= 0.0 {
            gaussian_tail(a / sd) - gaussian_tail(b / sd)
        } else if b <= 0.0 {
            gaussian_tail(-b / sd) - gaussian_tail(-a / sd)
        } else {
            1.0 - gaussian_tail(-a / sd) - gaussian_tail(b / sd)
        }
    };
    let mut p = vec![0.0; r_cw];
    for x in 0..=(r_cw - 1) / 2 {
        p[x] = if x == 0 {
            gaussian_tail((half - 1.0) * delta / sd)
        } else {
            mass(delta * (x as f64 - half), delta * (x as f64 - half + 1.0))
        };
        p[r_cw - 1 - x] = p[x];
    }
    p
}

/// Constellation power `sum p(x) c(x)^2`.
pub fn constellation_power(p: &[f64], values: &[f64]) -> f64 {
    p.iter()
        .zip(values)
        .map(|(p, c)| p * c * c)
        .collect::<CompensatedSum>()
        .value()
}

/// Quantised Gaussian law with the variance of the continuous density
/// equal to `Q`, as displayed. Its constellation power exceeds `Q` by
/// about `delta^2 / 12`.
pub fn gaussian_quantized_p_literal(r_cw: usize, delta: f64, q: f64) -> Result<Vec<f64>> {
    check_constellation(r_cw, delta, q)?;
    Ok(quantized_gaussian(r_cw, delta, q))
}

/// Quantised Gaussian law whose constellation power meets the constraint.
///
/// The variance `v <= Q` of the underlying density is the largest found
/// by bisection with `sum p_v(x) c(x)^2 <= Q`, so the power lands within
/// bisection resolution below `Q`.
pub fn gaussian_quantized_p(r_cw: usize, delta: f64, q: f64) -> Result<Vec<f64>> {
    check_constellation(r_cw, delta, q)?;
    let c = constellation(r_cw, delta);
    let power = |v: f64| constellation_power(&quantized_gaussian(r_cw, delta, v), &c);
    if power(q) <= q {
        return Ok(quantized_gaussian(r_cw, delta, q));
    }
    let mut lo = q * 1e-6;
    if power(lo) > q {
        return Err(Error::Numerical(format!(
            "no Gaussian variance meets power {q} with delta = {delta}"
        )));
    }
    let mut hi = q;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if power(mid) <= q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(quantized_gaussian(r_cw, delta, lo))
}

fn check_constellation(r_cw: usize, delta: f64, q: f64) -> Result<()> {
    if r_cw < 3 || r_cw.is_multiple_of(2) {
        return Err(domain(format!("constellation size r_cw = {r_cw} must be odd and >= 3")));
    }
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(domain(format!("spacing delta = {delta} must be positive")));
    }
    if !(q > 0.0 && q.is_finite()) {
        return Err(domain(format!("power Q = {q} must be positive")));
    }
    Ok(())
}

/// Shared random table and codewords.
#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub n: usize,
    pub m: usize,
    pub r_cw: usize,
    pub delta: f64,
    pub seed: u64,
    pub psi: Vec<f64>,
    /// Row-major `M x n` codeword matrix.
    pub codewords: Vec<f64>,
    /// `(psi bits, index)` sorted by bits, for inverting `psi`.
    lookup: Vec<(u64, usize)>,
}

impl Codebook {
    fn new(n: usize, m: usize, r_cw: usize, delta: f64, seed: u64, psi: Vec<f64>, codewords: Vec<f64>) -> Result<Self> {
        let mut lookup: Vec<(u64, usize)> = psi.iter().enumerate().map(|(i, s)| (s.to_bits(), i)).collect();
        lookup.sort_unstable();
        if lookup.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Format("psi table has repeated entries".into()));
        }
        Ok(Self {
            n,
            m,
            r_cw,
            delta,
            seed,
            psi,
            codewords,
            lookup,
        })
    }

    pub fn codeword(&self, i: usize) -> &[f64] {
        &self.codewords[i * self.n..(i + 1) * self.n]
    }

    /// Index whose table entry is exactly `s`.
    pub fn psi_inverse(&self, s: f64) -> Option<usize> {
        let bits = s.to_bits();
        self.lookup
            .binary_search_by_key(&bits, |e| e.0)
            .ok()
            .map(|k| self.lookup[k].1)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_BYTES + 8 * (self.psi.len() + self.codewords.len()));
        out.extend_from_slice(&(self.n as u64).to_le_bytes());
        out.extend_from_slice(&(self.m as u64).to_le_bytes());
        out.extend_from_slice(&(self.r_cw as u64).to_le_bytes());
        out.extend_from_slice(&self.delta.to_le_bytes());
        out.extend_from_slice(&self.seed.to_le_bytes());
        for v in self.psi.iter().chain(&self.codewords) {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_BYTES {
            return Err(Error::Format(format!("codebook header needs {HEADER_BYTES} bytes, got {}", bytes.len())));
        }
        let word = |k: usize| u64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().expect("8 bytes"));
        let (n, m, r_cw) = (word(0), word(1), word(2));
        let delta = f64::from_bits(word(3));
        let seed = word(4);
        let values = (m as u128) * (n as u128 + 1);
        let expected = HEADER_BYTES as u128 + 8 * values;
        if bytes.len() as u128 != expected {
            return Err(Error::Format(format!(
                "codebook with n = {n}, M = {m} needs {expected} bytes, got {}",
                bytes.len()
            )));
        }
        let floats: Vec<f64> = bytes[HEADER_BYTES..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let (psi, codewords) = floats.split_at(m as usize);
        Self::new(n as usize, m as usize, r_cw as usize, delta, seed, psi.to_vec(), codewords.to_vec())
    }
}

/// Map, constellation and law used by a scheme configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    pub spec: SystemSpec,
    pub values: Vec<f64>,
    pub power: f64,
}

impl Constellation {
    pub fn for_config(cfg: &SchemeConfig) -> Result<Self> {
        let p = gaussian_quantized_p(cfg.r_cw, cfg.delta, cfg.q)?;
        let spec = SystemSpec::new(&p)?;
        let values = constellation(cfg.r_cw, cfg.delta);
        let power = constellation_power(spec.probabilities(), &values);
        Ok(Self { spec, values, power })
    }
}

/// Draws `psi` and generates every codeword.
///
/// `psi` values are successive uniform draws from the generator seeded with
/// `derive_seed(seed, CODEBOOK, 0, 0)`, a draw equal to an earlier one being
/// discarded. Itineraries are computed in exact arithmetic.
pub fn build_codebook(cfg: &SchemeConfig) -> Result<Codebook> {
    cfg.validate()?;
    let values = (cfg.m as u128) * (cfg.n as u128);
    if values > CODEBOOK_VALUE_BUDGET {
        return Err(Error::Budget {
            what: "codebook values",
            needed: values,
            budget: CODEBOOK_VALUE_BUDGET,
        });
    }
    let con = Constellation::for_config(cfg)?;
    let mut rng = rng::rng_from_seed(rng::derive_seed(cfg.seed, tags::CODEBOOK, 0, 0));
    let mut seen = HashSet::with_capacity(cfg.m);
    let mut psi = Vec::with_capacity(cfg.m);
    while psi.len() < cfg.m {
        let s = rng::uniform(&mut rng);
        if seen.insert(s.to_bits()) {
            psi.push(s);
        }
    }
    let rows: Vec<Vec<f64>> = psi
        .par_iter()
        .map(|&s| {
            let traj = dynamics::iterate_exact(&con.spec, s, cfg.n)?;
            Ok(traj.symbols.iter().map(|&x| con.values[x]).collect())
        })
        .collect::<Result<_>>()?;
    Codebook::new(cfg.n, cfg.m, cfg.r_cw, cfg.delta, cfg.seed, psi, rows.concat())
}

/// Grid point `(2i + 1) / (2M)`.
pub fn grid_point(i: usize, m: usize) -> f64 {
    (2 * i + 1) as f64 / (2 * m) as f64
}

/// Nearest grid index of `theta` and the codeword sent for it.
pub fn encode(theta: f64, book: &Codebook) -> Result<(usize, &[f64])> {
    if !(0.0..=1.0).contains(&theta) {
        return Err(domain(format!("theta {theta} is outside [0, 1]")));
    }
    let i = ((theta * book.m as f64).floor() as usize).min(book.m - 1);
    Ok((i, book.codeword(i)))
}

fn squared_distance(y: &[f64], c: &[f64]) -> f64 {
    y.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// Minimum-distance (ML for AWGN) decoding; ties go to the lowest index.
pub fn decode(y: &[f64], book: &Codebook) -> usize {
    let mut best = (f64::INFINITY, 0);
    for i in 0..book.m {
        let d = squared_distance(y, book.codeword(i));
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

/// [`decode`] with the scan split across threads. The argmin is reduced
/// on `(distance, index)`, so the result does not depend on the split.
pub fn decode_parallel(y: &[f64], book: &Codebook) -> usize {
    (0..book.m)
        .into_par_iter()
        .map(|i| (squared_distance(y, book.codeword(i)), i))
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
        .map_or(0, |b| b.1)
}

/// Correlation-form decoder `argmax <y, c> - ||c||^2 / 2`.
pub fn decode_correlation(y: &[f64], book: &Codebook) -> usize {
    let mut best = (f64::NEG_INFINITY, 0);
    for i in 0..book.m {
        let c = book.codeword(i);
        let corr: f64 = y.iter().zip(c).map(|(a, b)| a * b).sum();
        let energy: f64 = c.iter().map(|v| v * v).sum();
        let metric = corr - 0.5 * energy;
        if metric > best.0 {
            best = (metric, i);
        }
    }
    best.1
}

/// Outcome statistics of the scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeReport {
    pub trials: usize,
    pub anomalies: usize,
    pub anomaly_rate: MeanEstimate,
    /// Largest `|theta_hat - theta|` over correctly decoded trials.
    pub max_conditional_error: f64,
    pub conditional_cost: MeanEstimate,
    /// `1 / (2M)`.
    pub ceiling: f64,
}

/// Runs `trials_per_theta` transmissions for each `theta`.
///
/// Trial `i` at parameter index `j` draws its noise from
/// `derive_seed(seed, SCHEME, j, i)`.
pub fn run_scheme(
    thetas: &[f64],
    cfg: &SchemeConfig,
    book: &Codebook,
    trials_per_theta: usize,
    cost: &CostFunction,
    seed: u64,
) -> Result<SchemeReport> {
    let channel = cfg.channel()?;
    if book.n != cfg.n || book.m != cfg.m {
        return Err(domain(format!(
            "codebook is {} x {}, configuration asks for {} x {}",
            book.m, book.n, cfg.m, cfg.n
        )));
    }
    let encoded: Vec<usize> = thetas
        .iter()
        .map(|&t| encode(t, book).map(|e| e.0))
        .collect::<Result<_>>()?;
    let sigma = channel.sigma();
    let outcomes: Vec<(bool, f64)> = (0..thetas.len() * trials_per_theta)
        .into_par_iter()
        .map(|idx| {
            let (j, i) = (idx / trials_per_theta, idx % trials_per_theta);
            let sent = encoded[j];
            let mut g = Gaussian::new(rng::rng_from_seed(rng::derive_seed(seed, tags::SCHEME, j as u64, i as u64)));
            let y: Vec<f64> = book.codeword(sent).iter().map(|c| c + sigma * g.next()).collect();
            let got = decode(&y, book);
            (got != sent, grid_point(got, book.m) - thetas[j])
        })
        .collect();
    let good: Vec<f64> = outcomes.iter().filter(|o| !o.0).map(|o| cost.cost(o.1)).collect();
    let anomalies = outcomes.len() - good.len();
    let max_conditional_error = outcomes
        .iter()
        .filter(|o| !o.0)
        .map(|o| o.1.abs())
        .fold(0.0, f64::max);
    Ok(SchemeReport {
        trials: outcomes.len(),
        anomalies,
        anomaly_rate: MeanEstimate::proportion(anomalies, outcomes.len()),
        max_conditional_error,
        conditional_cost: MeanEstimate::from_samples(&good),
        ceiling: 0.5 / book.m as f64,
    })
}

/// Monte Carlo estimate of a union-Chernoff upper bound on the ensemble
/// decoding-error probability of the random itinerary codebook.
///
/// For a sent word `c` with i.i.d. letters from `p` and output `y = c + z`,
/// a competing independent word `c'` beats `c` with probability at most
/// `exp(min_{s >= 0} [s d^2 + sum_i ln sum_x p(x) e^{-s (y_i - c(x))^2}])`,
/// `d^2 = ||y - c||^2`. The union over the other `M - 1` words, capped at
/// one, is averaged over `samples` draws of `(c, z)`. Usable for `M` far
/// beyond what can be stored.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomCodingBound {
    pub m: f64,
    pub n: usize,
    pub estimate: MeanEstimate,
}

pub fn random_coding_error_bound(
    con: &Constellation,
    channel: &ChannelConfig,
    n: usize,
    m: f64,
    samples: usize,
    seed: u64,
) -> Result<RandomCodingBound> {
    if n == 0 || samples < 2 {
        return Err(domain("need n >= 1 and at least two samples"));
    }
    if !(m >= 1.0 && m.is_finite()) {
        return Err(domain(format!("codebook size {m} must be finite and >= 1")));
    }
    let p = con.spec.probabilities();
    let ln_p: Vec<f64> = p.iter().map(|v| v.ln()).collect();
    let ln_others = (m - 1.0).ln();
    let sigma = channel.sigma();
    let values: Vec<f64> = (0..samples)
        .into_par_iter()
        .map(|k| {
            let mut g = Gaussian::new(rng::rng_from_seed(rng::derive_seed(seed, tags::SCHEME, u64::MAX, k as u64)));
            let mut y = Vec::with_capacity(n);
            let mut d2 = 0.0;
            for _ in 0..n {
                let x = con.spec.sample_symbol(g.rng_mut());
                let z = sigma * g.next();
                y.push(con.values[x] + z);
                d2 += z * z;
            }
            if m <= 1.0 {
                return 0.0;
            }
            // derivative of the (convex) Chernoff exponent in s
            let slope = |s: f64| -> f64 {
                let mut total = d2;
                for &yi in &y {
                    let mut mx = f64::NEG_INFINITY;
                    let logs: Vec<f64> = con
                        .values
                        .iter()
                        .zip(&ln_p)
                        .map(|(c, lp)| {
                            let v = lp - s * (yi - c) * (yi - c);
                            mx = mx.max(v);
                            v
                        })
                        .collect();
                    let (mut num, mut den) = (0.0, 0.0);
                    for (l, c) in logs.iter().zip(&con.values) {
                        let w = (l - mx).exp();
                        den += w;
                        num += w * (yi - c) * (yi - c);
                    }
                    total -= num / den;
                }
                total
            };
            let exponent = |s: f64| -> f64 {
                let mut total = s * d2;
                for &yi in &y {
                    let logs: Vec<f64> = con
                        .values
                        .iter()
                        .zip(&ln_p)
                        .map(|(c, lp)| lp - s * (yi - c) * (yi - c))
                        .collect();
                    let mx = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    total += mx + logs.iter().map(|l| (l - mx).exp()).sum::<f64>().ln();
                }
                total
            };
            let s_star = if slope(0.0) >= 0.0 {
                0.0
            } else {
                let mut hi = 1.0 / (channel.sigma2 * n as f64);
                while slope(hi) < 0.0 && hi < 1e12 {
                    hi *= 2.0;
                }
                bisect(slope, 0.0, hi).unwrap_or(hi)
            };
            (ln_others + exponent(s_star)).min(0.0).exp()
        })
        .collect();
    Ok(RandomCodingBound {
        m,
        n,
        estimate: MeanEstimate::from_samples(&values),
    })
}
