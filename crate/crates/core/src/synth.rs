//! Maps driven by conditional laws, and exact process synthesis from bits.
//!
//! A [`ConditionalLaw`] gives, for every history `x_1..x_{t-1}`, a cell
//! partition of `[0, 1]`. The generalised map picks the cell of `s_{t-1}`
//! under the partition for the current history and stretches it onto
//! `[0, 1]`. With a uniform initial state the itinerary has exactly the
//! prescribed law, so feeding the binary expansion of `s_0` from a stream
//! of fair bits turns the map into a sampler.
//!
//! [`synthesize`] reads bits lazily. It keeps an interval `[a, a + w)` of
//! `s_t` values compatible with the bits read so far; while the interval
//! straddles a cell boundary it reads one more bit and halves the interval,
//! and once the interval fits in a cell it emits that symbol and maps the
//! interval through the cell's affine stretch. For dyadic laws all of this
//! is exact in floating point and the bits are consumed one-for-one as in
//! a shift register.

use std::borrow::Cow;
use std::io::{Read, Write};

use rand::RngCore;
use rayon::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::dynamics::{ReconstructionBounds, SystemSpec, Trajectory};
use crate::error::{domain, Error, Result};
use crate::numeric::{CompensatedSum, MeanEstimate};
use crate::rng::{self, tags, ChaCha8Rng};

/// Smallest interval width the synthesiser will refine to.
const MIN_WIDTH: f64 = 1.0 / (1u64 << 62) as f64;

/// Sequence of conditional distributions `p_t(x | x_1..x_{t-1})`.
///
/// The returned table is lattice-snapped like any [`SystemSpec`], which
/// enforces positivity and the probability-sum tolerance on every history.
pub trait ConditionalLaw: Sync {
    fn alphabet(&self) -> usize;

    /// Cell partition for the next symbol given `history = x_1..x_{t-1}`.
    fn law(&self, history: &[usize]) -> Result<Cow<'_, SystemSpec>>;
}

/// The same distribution at every step.
#[derive(Debug, Clone, PartialEq)]
pub struct Memoryless(pub SystemSpec);

impl ConditionalLaw for Memoryless {
    fn alphabet(&self) -> usize {
        self.0.r()
    }

    fn law(&self, _history: &[usize]) -> Result<Cow<'_, SystemSpec>> {
        Ok(Cow::Borrowed(&self.0))
    }
}

/// First-order Markov chain.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    pub initial: SystemSpec,
    /// `rows[a]` is the law of `x_t` given `x_{t-1} = a`.
    pub rows: Vec<SystemSpec>,
}

impl MarkovChain {
    pub fn new(initial: SystemSpec, rows: Vec<SystemSpec>) -> Result<Self> {
        let r = initial.r();
        if rows.len() != r || rows.iter().any(|row| row.r() != r) {
            return Err(domain(format!("transition matrix must be {r} x {r}")));
        }
        Ok(Self { initial, rows })
    }

    /// Chain with the given transition rows started from its stationary law.
    pub fn stationary_start(rows: &[Vec<f64>]) -> Result<Self> {
        let specs: Vec<SystemSpec> = rows.iter().map(|p| SystemSpec::new(p)).collect::<Result<_>>()?;
        let r = specs.len();
        if r < 2 || specs.iter().any(|s| s.r() != r) {
            return Err(domain("transition matrix must be square with at least two states"));
        }
        let pi = stationary_distribution(&specs);
        Self::new(SystemSpec::new(&pi)?, specs)
    }

    /// Binary chain that flips state with probability `q`.
    pub fn symmetric_binary(q: f64) -> Result<Self> {
        Self::stationary_start(&[vec![1.0 - q, q], vec![q, 1.0 - q]])
    }

    /// `sum_a pi(a) H(rows[a])` in nats, with `pi` the stationary law.
    pub fn entropy_rate(&self) -> f64 {
        let pi = stationary_distribution(&self.rows);
        pi.iter()
            .zip(&self.rows)
            .map(|(w, row)| w * crate::statistics::lyapunov_exact(row))
            .collect::<CompensatedSum>()
            .value()
    }
}

/// Power iteration for the stationary law of a transition matrix.
fn stationary_distribution(rows: &[SystemSpec]) -> Vec<f64> {
    let r = rows.len();
    let mut pi = vec![1.0 / r as f64; r];
    for _ in 0..100_000 {
        let mut next = vec![0.0; r];
        for (a, row) in rows.iter().enumerate() {
            for (b, slot) in next.iter_mut().enumerate() {
                *slot += pi[a] * row.p(b);
            }
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|v| *v /= total);
        let diff: f64 = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        pi = next;
        if diff < 1e-16 {
            break;
        }
    }
    pi
}

impl ConditionalLaw for MarkovChain {
    fn alphabet(&self) -> usize {
        self.initial.r()
    }

    fn law(&self, history: &[usize]) -> Result<Cow<'_, SystemSpec>> {
        Ok(Cow::Borrowed(match history.last() {
            None => &self.initial,
            Some(&a) => &self.rows[a],
        }))
    }
}

/// Law given by a function of the most recent `window` symbols (or the
/// whole history when `window` is `None`).
pub struct FnLaw<F> {
    pub r: usize,
    pub window: Option<usize>,
    pub f: F,
}

impl<F> ConditionalLaw for FnLaw<F>
where
    F: Fn(&[usize]) -> Vec<f64> + Sync,
{
    fn alphabet(&self) -> usize {
        self.r
    }

    fn law(&self, history: &[usize]) -> Result<Cow<'_, SystemSpec>> {
        let recent = match self.window {
            Some(w) => &history[history.len().saturating_sub(w)..],
            None => history,
        };
        let p = (self.f)(recent);
        if p.len() != self.r {
            return Err(domain(format!("law returned {} probabilities, expected {}", p.len(), self.r)));
        }
        SystemSpec::new(&p)
            .map(Cow::Owned)
            .map_err(|e| domain(format!("law at step {}: {e}", history.len() + 1)))
    }
}

/// Iterates the history-dependent map from `s0`.
///
/// With a [`Memoryless`] law this performs the same floating-point
/// operations as [`crate::dynamics::iterate`].
pub fn iterate_memory<L: ConditionalLaw + ?Sized>(law: &L, s0: f64, n: usize) -> Result<Trajectory> {
    if !(0.0..=1.0).contains(&s0) {
        return Err(domain(format!("state {s0} is outside [0, 1]")));
    }
    let mut states = Vec::with_capacity(n + 1);
    let mut symbols = Vec::with_capacity(n);
    states.push(s0);
    let mut s = s0;
    for _ in 0..n {
        let (x, next) = law.law(&symbols)?.step(s);
        symbols.push(x);
        states.push(next);
        s = next;
    }
    Ok(Trajectory { states, symbols })
}

/// Bracket on `s_0` from an itinerary prefix under a conditional law:
/// `lower = sum_t F_t(x_t) prod_{j<t} p_j(x_j)`, `upper = lower + prod p`.
pub fn reconstruct_memory<L: ConditionalLaw + ?Sized>(law: &L, x: &[usize]) -> Result<ReconstructionBounds> {
    if x.is_empty() {
        return Err(domain("itinerary must be non-empty"));
    }
    let mut lower = CompensatedSum::new();
    let mut width = 1.0;
    for t in 0..x.len() {
        let spec = law.law(&x[..t])?;
        if x[t] >= spec.r() {
            return Err(domain(format!("symbol x_{} = {} is outside the alphabet", t + 1, x[t])));
        }
        lower.add(spec.cdf()[x[t]] * width);
        width *= spec.p(x[t]);
    }
    let lower = lower.value();
    Ok(ReconstructionBounds {
        lower,
        upper: (lower + width).min(1.0),
        depth: x.len(),
    })
}

/// A stream of fair bits.
pub trait BitSource {
    fn next_bit(&mut self) -> Option<bool>;
}

/// Bits of a seeded generator, most significant bit of each 64-bit word
/// first. The generator is seeded with `derive_seed(seed, BITS, 0, 0)`.
#[derive(Debug, Clone)]
pub struct SeededBits {
    rng: ChaCha8Rng,
    word: u64,
    left: u32,
}

impl SeededBits {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: rng::rng_from_seed(rng::derive_seed(seed, tags::BITS, 0, 0)),
            word: 0,
            left: 0,
        }
    }
}

impl BitSource for SeededBits {
    fn next_bit(&mut self) -> Option<bool> {
        if self.left == 0 {
            self.word = self.rng.next_u64();
            self.left = 64;
        }
        self.left -= 1;
        Some((self.word >> self.left) & 1 == 1)
    }
}

/// Bits of a byte slice, most significant bit of each byte first.
#[derive(Debug, Clone)]
pub struct ByteBits<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> ByteBits<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }
}

impl BitSource for ByteBits<'_> {
    fn next_bit(&mut self) -> Option<bool> {
        let byte = *self.bytes.get(self.pos / 8)?;
        let bit = (byte >> (7 - self.pos % 8)) & 1 == 1;
        self.pos += 1;
        Some(bit)
    }
}

/// Bits of a reader (for example a file), pulled in chunks of `chunk`
/// bytes. A read error ends the stream; it is kept in [`Self::error`].
pub struct ReaderBits<R> {
    reader: R,
    buf: Vec<u8>,
    len: usize,
    pos: usize,
    pub error: Option<std::io::Error>,
}

impl<R: Read> ReaderBits<R> {
    pub fn new(reader: R, chunk: usize) -> Self {
        Self {
            reader,
            buf: vec![0; chunk.max(1)],
            len: 0,
            pos: 0,
            error: None,
        }
    }
}

impl<R: Read> BitSource for ReaderBits<R> {
    fn next_bit(&mut self) -> Option<bool> {
        if self.pos == 8 * self.len {
            if self.error.is_some() {
                return None;
            }
            loop {
                match self.reader.read(&mut self.buf) {
                    Ok(0) => return None,
                    Ok(k) => {
                        self.len = k;
                        self.pos = 0;
                        break;
                    }
                    Err(e) if e.kind() == std::io::ErrorKind::Interrupted => continue,
                    Err(e) => {
                        self.error = Some(e);
                        return None;
                    }
                }
            }
        }
        let bit = (self.buf[self.pos / 8] >> (7 - self.pos % 8)) & 1 == 1;
        self.pos += 1;
        Some(bit)
    }
}

/// Output of [`synthesize`].
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisReport {
    pub symbols: Vec<usize>,
    pub bits_consumed: u64,
    /// Bits per symbol.
    pub rate: f64,
}

/// Generates `n` symbols of the law from a bit stream by interval
/// refinement.
pub fn synthesize<L, B>(law: &L, bits: &mut B, n: usize) -> Result<SynthesisReport>
where
    L: ConditionalLaw + ?Sized,
    B: BitSource + ?Sized,
{
    let mut symbols = Vec::with_capacity(n);
    let mut consumed = 0u64;
    // s_t is known to lie in [a, a + w)
    let (mut a, mut w) = (0.0f64, 1.0f64);
    while symbols.len() < n {
        let spec = law.law(&symbols)?;
        let cdf = spec.cdf();
        loop {
            let x = spec.cell_of(a);
            if a + w <= cdf[x + 1] {
                a = ((a - cdf[x]) / spec.p(x)).max(0.0);
                w = (w / spec.p(x)).min(1.0 - a);
                symbols.push(x);
                break;
            }
            if w < MIN_WIDTH {
                return Err(Error::Numerical(format!(
                    "interval refinement stalled at width {w:e} after {consumed} bits"
                )));
            }
            let bit = bits.next_bit().ok_or(Error::BitsExhausted {
                bits_consumed: consumed,
                produced: symbols.len(),
                requested: n,
            })?;
            consumed += 1;
            w *= 0.5;
            if bit {
                a += w;
            }
        }
    }
    Ok(SynthesisReport {
        rate: if n == 0 { 0.0 } else { consumed as f64 / n as f64 },
        symbols,
        bits_consumed: consumed,
    })
}

/// Monte Carlo estimate of the entropy rate in nats per symbol.
///
/// Each trial samples `n` symbols by inverse transform (trial `i` seeded
/// with `derive_seed(seed, ENTROPY, i, 0)`) and averages `ln 1/p_t(x_t)`;
/// the standard error comes from the spread across trials.
pub fn entropy_rate<L: ConditionalLaw + ?Sized>(law: &L, n: usize, trials: usize, seed: u64) -> Result<MeanEstimate> {
    if n == 0 || trials == 0 {
        return Err(domain("n and trials must be at least 1"));
    }
    let per_trial: Vec<f64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::rng_from_seed(rng::derive_seed(seed, tags::ENTROPY, i as u64, 0));
            let mut history = Vec::with_capacity(n);
            let mut total = CompensatedSum::new();
            for _ in 0..n {
                let spec = law.law(&history)?;
                let x = spec.sample_symbol(&mut rng);
                total.add(-spec.p(x).ln());
                history.push(x);
            }
            Ok(total.value() / n as f64)
        })
        .collect::<Result<_>>()?;
    Ok(MeanEstimate::from_samples(&per_trial))
}

/// Pearson statistic of overlapping `k`-grams against the law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
}

/// Goodness of fit of `symbols` to the law on overlapping `k`-grams.
///
/// Cell `(c, x)` counts positions whose preceding `k - 1` symbols form the
/// context `c` and whose symbol is `x`; its expected count is the sum of
/// `p_t(x | history)` over the positions with context `c`. Deviations are
/// martingale sums, so the statistic is asymptotically chi-square with
/// `(r - 1)` degrees of freedom per observed context whenever the law
/// depends on at most the last `k - 1` symbols.
pub fn chi_square_kgrams<L: ConditionalLaw + ?Sized>(law: &L, symbols: &[usize], k: usize) -> Result<ChiSquare> {
    let r = law.alphabet();
    if k == 0 {
        return Err(domain("k must be at least 1"));
    }
    let cells = (r as u128).pow(k as u32);
    if cells > 1 << 24 {
        return Err(Error::Budget {
            what: "k-gram cells",
            needed: cells,
            budget: 1 << 24,
        });
    }
    if symbols.len() < k {
        return Err(domain(format!("need at least {k} symbols")));
    }
    let contexts = r.pow(k as u32 - 1);
    let mut observed = vec![0u64; contexts * r];
    let mut expected = vec![CompensatedSum::new(); contexts * r];
    for t in (k - 1)..symbols.len() {
        let ctx = symbols[t + 1 - k..t].iter().fold(0usize, |acc, &x| acc * r + x);
        let spec = law.law(&symbols[..t])?;
        observed[ctx * r + symbols[t]] += 1;
        for (x, slot) in expected[ctx * r..(ctx + 1) * r].iter_mut().enumerate() {
            slot.add(spec.p(x));
        }
    }
    let mut stat = CompensatedSum::new();
    let mut seen_contexts = 0;
    for c in 0..contexts {
        let total: u64 = observed[c * r..(c + 1) * r].iter().sum();
        if total == 0 {
            continue;
        }
        seen_contexts += 1;
        for x in 0..r {
            let e = expected[c * r + x].value();
            let d = observed[c * r + x] as f64 - e;
            stat.add(d * d / e);
        }
    }
    let dof = seen_contexts * (r - 1);
    let statistic = stat.value();
    let p_value = ChiSquared::new(dof as f64)
        .map_err(|e| Error::Numerical(format!("chi-square distribution: {e}")))?
        .sf(statistic);
    Ok(ChiSquare {
        statistic,
        dof,
        p_value,
    })
}

/// Writes one symbol per line.
pub fn write_symbols_lines<W: Write>(out: &mut W, symbols: &[usize]) -> std::io::Result<()> {
    for x in symbols {
        writeln!(out, "{x}")?;
    }
    Ok(())
}

/// Writes one byte per symbol; the alphabet must fit in a byte.
pub fn write_symbols_bytes<W: Write>(out: &mut W, symbols: &[usize], r: usize) -> Result<std::io::Result<()>> {
    if r > 256 {
        return Err(domain(format!("alphabet of size {r} does not fit in a byte")));
    }
    let bytes: Vec<u8> = symbols.iter().map(|&x| x as u8).collect();
    Ok(out.write_all(&bytes))
}
