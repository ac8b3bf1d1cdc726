//! Piecewise-linear chaotic maps driven by a probability vector.
//!
//! A [`SystemSpec`] partitions `[0, 1]` into cells `[F(x), F(x+1))` of
//! lengths `p(x)`. One step of the map finds the cell `x = phi(s)` holding
//! the current state and stretches that cell back onto the unit interval:
//! `s' = (s - F(x)) / p(x)`. Iterating produces the state sequence and the
//! itinerary (the sequence of visited cells).
//!
//! Cell boundaries are stored on the lattice `k * 2^-53`. Both `F(x)` and
//! `p(x) = F(x+1) - F(x)` are then exactly representable, `F(r) = 1`
//! exactly, and the same partition can be iterated in exact integer
//! arithmetic by [`iterate_exact`].

use num_bigint::BigUint;
use rand::RngCore;

use crate::error::{domain, Result};
use crate::rng;

/// Resolution of the cell-boundary lattice, in bits.
pub const LATTICE_BITS: u32 = 53;
const LATTICE_ONE: u64 = 1 << LATTICE_BITS;
const LATTICE_SCALE: f64 = LATTICE_ONE as f64;

/// Tolerance on `sum p(x) = 1` accepted at construction.
pub const PROBABILITY_SUM_TOLERANCE: f64 = 1e-12;

/// Snaps a probability vector onto the boundary lattice.
///
/// Returns the integer boundaries `K[0] = 0 < K[1] < ... < K[r] = 2^53`.
pub(crate) fn lattice_boundaries(p: &[f64]) -> Result<Vec<u64>> {
    let r = p.len();
    if r < 2 {
        return Err(domain(format!("alphabet size must be at least 2, got {r}")));
    }
    for (x, &px) in p.iter().enumerate() {
        if !px.is_finite() || px <= 0.0 {
            return Err(domain(format!("p({x}) = {px} must be positive and finite")));
        }
    }
    let total: f64 = p.iter().copied().collect::<crate::numeric::CompensatedSum>().value();
    if (total - 1.0).abs() > PROBABILITY_SUM_TOLERANCE {
        return Err(domain(format!(
            "probabilities sum to {total}, expected 1 within {PROBABILITY_SUM_TOLERANCE:e} (probability-sum invariant)"
        )));
    }
    let mut ticks = Vec::with_capacity(r + 1);
    ticks.push(0u64);
    let mut acc = crate::numeric::CompensatedSum::new();
    for &px in &p[..r - 1] {
        acc.add(px);
        ticks.push((acc.value() / total * LATTICE_SCALE).round() as u64);
    }
    ticks.push(LATTICE_ONE);
    for x in 0..r {
        if ticks[x + 1] <= ticks[x] {
            return Err(domain(format!(
                "p({x}) = {} is below the 2^-{LATTICE_BITS} boundary resolution",
                p[x]
            )));
        }
    }
    Ok(ticks)
}

/// One member of the map family: alphabet size `r` and probabilities `p(x)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemSpec {
    p: Vec<f64>,
    cdf: Vec<f64>,
    g: Vec<f64>,
    ticks: Vec<u64>,
}

impl SystemSpec {
    /// Builds a spec from a probability vector.
    ///
    /// Requires `r >= 2`, every `p(x) > 0` and `|sum p - 1| <= 1e-12`. The
    /// stored probabilities are the input snapped to the 2^-53 lattice.
    pub fn new(p: &[f64]) -> Result<Self> {
        let ticks = lattice_boundaries(p)?;
        let r = p.len();
        let cdf: Vec<f64> = ticks.iter().map(|&k| k as f64 / LATTICE_SCALE).collect();
        let p: Vec<f64> = (0..r)
            .map(|x| (ticks[x + 1] - ticks[x]) as f64 / LATTICE_SCALE)
            .collect();
        let g = (0..r).map(|x| cdf[x] / p[x]).collect();
        Ok(Self { p, cdf, g, ticks })
    }

    /// The saw-tooth map `s -> r s mod 1`.
    pub fn uniform(r: usize) -> Result<Self> {
        if r < 2 {
            return Err(domain(format!("alphabet size must be at least 2, got {r}")));
        }
        Self::new(&vec![1.0 / r as f64; r])
    }

    pub fn r(&self) -> usize {
        self.p.len()
    }

    pub fn p(&self, x: usize) -> f64 {
        self.p[x]
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    /// `F(x)` for `x = 0..=r`; `F(0) = 0` and `F(r) = 1`.
    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    /// `G(x) = F(x) / p(x)`.
    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn max_p(&self) -> f64 {
        self.p.iter().copied().fold(0.0, f64::max)
    }

    pub fn min_p(&self) -> f64 {
        self.p.iter().copied().fold(1.0, f64::min)
    }

    pub fn is_uniform(&self) -> bool {
        self.p.iter().all(|&p| p == self.p[0])
    }

    /// Integer cell boundaries on the 2^-53 lattice.
    pub fn lattice(&self) -> &[u64] {
        &self.ticks
    }

    /// Cell index of a state; the caller guarantees `s` in `[0, 1]`.
    #[inline]
    pub(crate) fn cell_of(&self, s: f64) -> usize {
        let r = self.r();
        // number of interior boundaries F(1..r-1) that are <= s
        self.cdf[1..r].partition_point(|&f| f <= s)
    }

    /// One forward step from a state already known to lie in `[0, 1]`.
    #[inline]
    pub(crate) fn step(&self, s: f64) -> (usize, f64) {
        let x = self.cell_of(s);
        let next = ((s - self.cdf[x]) / self.p[x]).min(1.0);
        (x, next)
    }

    /// Draws a symbol from `p` by inverse transform of a uniform variate.
    #[inline]
    pub fn sample_symbol<R: RngCore + ?Sized>(&self, rng: &mut R) -> usize {
        self.cell_of(rng::uniform(rng))
    }
}

fn check_state(s: f64) -> Result<()> {
    if (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(domain(format!("state {s} is outside [0, 1]")))
    }
}

/// The unique `x` with `F(x) <= s < F(x+1)`; `phi(1) = r - 1`.
pub fn phi(spec: &SystemSpec, s: f64) -> Result<usize> {
    check_state(s)?;
    Ok(spec.cell_of(s))
}

/// States `s_0..s_n` and itinerary `x_1..x_n` of one run.
///
/// `symbols[t - 1]` is `x_t`, the cell of `states[t - 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<f64>,
    pub symbols: Vec<usize>,
}

impl Trajectory {
    /// Number of steps `n`.
    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn initial_state(&self) -> f64 {
        self.states[0]
    }
}

/// Iterates the map `n` times from `s0` in double precision.
///
/// The map expands by `1/p(x)` per step, so roughly `log2(1/p(x))` bits of
/// `s0` are consumed per step; after about 53 bits the float trajectory no
/// longer tracks the exact one. Use [`iterate_exact`] when the exact
/// itinerary of a long run matters.
pub fn iterate(spec: &SystemSpec, s0: f64, n: usize) -> Result<Trajectory> {
    check_state(s0)?;
    let mut states = Vec::with_capacity(n + 1);
    let mut symbols = Vec::with_capacity(n);
    states.push(s0);
    let mut s = s0;
    for _ in 0..n {
        let (x, next) = spec.step(s);
        debug_assert!((s - spec.cdf[x] - spec.p[x] * next).abs() <= 1e-12);
        symbols.push(x);
        states.push(next);
        s = next;
    }
    Ok(Trajectory { states, symbols })
}

/// Iterates the map in exact rational arithmetic.
///
/// `s0` is taken as the exact dyadic rational it represents. Symbols are
/// the exact itinerary of that number under the lattice partition; the
/// returned states are the exact states rounded to `f64`. Cost grows
/// linearly in `n` per step (the denominator gains up to 53 bits per step).
pub fn iterate_exact(spec: &SystemSpec, s0: f64, n: usize) -> Result<Trajectory> {
    check_state(s0)?;
    let (mut num, mut den) = dyadic_parts(s0);
    let one = BigUint::from(LATTICE_ONE);
    let ticks = spec.lattice();
    let r = spec.r();
    let mut states = Vec::with_capacity(n + 1);
    let mut symbols = Vec::with_capacity(n);
    states.push(s0);
    for _ in 0..n {
        // v = floor(s * 2^53) locates s among the integer boundaries exactly.
        let scaled = &num * &one;
        let v = &scaled / &den;
        let v = u64::try_from(&v).unwrap_or(LATTICE_ONE);
        let x = ticks[1..r].partition_point(|&k| k <= v);
        let width = ticks[x + 1] - ticks[x];
        num = scaled - BigUint::from(ticks[x]) * &den;
        den *= width;
        if num > den {
            // only reachable from s = 1 in the top cell
            num = den.clone();
        }
        symbols.push(x);
        states.push(ratio_to_f64(&num, &den));
    }
    Ok(Trajectory { states, symbols })
}

fn dyadic_parts(s: f64) -> (BigUint, BigUint) {
    if s == 0.0 {
        return (BigUint::from(0u8), BigUint::from(1u8));
    }
    let bits = s.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let (mantissa, e) = if exp == 0 {
        (bits & ((1 << 52) - 1), -1074)
    } else {
        ((bits & ((1 << 52) - 1)) | (1 << 52), exp - 1075)
    };
    // s = mantissa * 2^e with e < 0 for s <= 1, except s = 1 exactly
    if e >= 0 {
        return (BigUint::from(mantissa) << e as usize, BigUint::from(1u8));
    }
    (BigUint::from(mantissa), BigUint::from(1u8) << (-e) as usize)
}

fn ratio_to_f64(num: &BigUint, den: &BigUint) -> f64 {
    let q: BigUint = (num << 64usize) / den;
    // q < 2^65; keep the top 64 bits for the conversion
    let bits = q.bits();
    if bits <= 64 {
        let q = u64::try_from(&q).expect("fits");
        q as f64 / 18_446_744_073_709_551_616.0
    } else {
        let shifted = u64::try_from(&(q >> (bits - 64) as usize)).expect("fits");
        shifted as f64 * 2f64.powi(bits as i32 - 64 - 64)
    }
}

/// Samples a trajectory whose initial state is uniform on `[0, 1]`.
///
/// The itinerary is drawn i.i.d. from `p` and the final state uniformly;
/// the states are then rebuilt backwards with the contracting inverse map
/// `s_{t-1} = F(x_t) + p(x_t) s_t`. Uniformity of the state is invariant
/// under the map, so this has exactly the law of forward iteration from a
/// uniform `s0`, without the precision loss of iterating forward.
pub fn sample_stationary<R: RngCore + ?Sized>(spec: &SystemSpec, n: usize, rng: &mut R) -> Trajectory {
    let symbols: Vec<usize> = (0..n).map(|_| spec.sample_symbol(rng)).collect();
    let mut states = vec![0.0; n + 1];
    states[n] = rng::uniform(rng);
    for t in (1..=n).rev() {
        let x = symbols[t - 1];
        let upper = spec.cdf[x + 1];
        let mut s = spec.cdf[x] + spec.p[x] * states[t];
        if s >= upper && x + 1 < spec.r() {
            s = upper.next_down();
        }
        states[t - 1] = s;
    }
    Trajectory { states, symbols }
}

/// Bracket on the initial state implied by an itinerary prefix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconstructionBounds {
    pub lower: f64,
    pub upper: f64,
    /// Prefix length used.
    pub depth: usize,
}

impl ReconstructionBounds {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, s: f64) -> bool {
        self.lower <= s && s <= self.upper
    }
}

fn check_itinerary(spec: &SystemSpec, x: &[usize]) -> Result<()> {
    if x.is_empty() {
        return Err(domain("itinerary must be non-empty"));
    }
    if let Some((t, &sym)) = x.iter().enumerate().find(|(_, &sym)| sym >= spec.r()) {
        return Err(domain(format!(
            "symbol x_{} = {sym} is outside the alphabet of size {}",
            t + 1,
            spec.r()
        )));
    }
    Ok(())
}

/// Truncated mixed-radix series for `s0` from the prefix `x_1..x_tau`.
///
/// `lower = sum_t F(x_t) prod_{i<t} p(x_i)` and `upper = lower + prod p(x_i)`.
/// The sum is evaluated in nested (Horner) form from the deepest symbol
/// outwards.
pub fn reconstruct(spec: &SystemSpec, x: &[usize]) -> Result<ReconstructionBounds> {
    check_itinerary(spec, x)?;
    let mut lower = 0.0;
    for &sym in x.iter().rev() {
        lower = spec.cdf[sym] + spec.p[sym] * lower;
    }
    let width: f64 = x.iter().map(|&sym| spec.p[sym]).product();
    Ok(ReconstructionBounds {
        lower,
        upper: (lower + width).min(1.0),
        depth: x.len(),
    })
}

/// The reconstruction bracket in exact arithmetic.
///
/// Endpoints are `lower / 2^(53 tau)` and `(lower + width) / 2^(53 tau)`
/// with integer numerators, so containment and width comparisons carry no
/// rounding. The `f64` [`reconstruct`] can miss its bracket by an ulp.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExactBracket {
    pub lower: BigUint,
    pub width: BigUint,
    /// Prefix length `tau`; the common denominator is `2^(53 tau)`.
    pub depth: usize,
}

impl ExactBracket {
    fn shift(&self) -> usize {
        LATTICE_BITS as usize * self.depth
    }

    /// Exact test of `lower <= s <= upper`.
    pub fn contains(&self, s: f64) -> bool {
        if !(0.0..=1.0).contains(&s) {
            return false;
        }
        let (num, den) = dyadic_parts(s);
        let s_scaled = num << self.shift();
        let lo = &self.lower * &den;
        let hi = (&self.lower + &self.width) * &den;
        lo <= s_scaled && s_scaled <= hi
    }

    /// Exact test of `upper - lower <= q^tau` for a lattice probability
    /// `q = k / 2^53`.
    pub fn width_at_most_power(&self, k: u64) -> bool {
        self.width <= BigUint::from(k).pow(self.depth as u32)
    }

    /// `(upper - lower) / (k / 2^53)^tau`, rounded to `f64`.
    pub fn width_ratio(&self, k: u64) -> f64 {
        ratio_to_f64(&self.width, &BigUint::from(k).pow(self.depth as u32))
    }

    /// `f64` endpoints rounded outward.
    pub fn to_bounds(&self) -> ReconstructionBounds {
        let den = BigUint::from(1u8) << self.shift();
        let lower = ratio_to_f64(&self.lower, &den);
        let upper = ratio_to_f64(&(&self.lower + &self.width), &den);
        let (ln, ld) = dyadic_parts(lower);
        let lower = if (&ln << self.shift()) > &self.lower * &ld { lower.next_down().max(0.0) } else { lower };
        let (un, ud) = dyadic_parts(upper);
        let upper = if (&un << self.shift()) < (&self.lower + &self.width) * &ud {
            upper.next_up().min(1.0)
        } else {
            upper
        };
        ReconstructionBounds {
            lower,
            upper,
            depth: self.depth,
        }
    }
}

/// [`reconstruct`] in exact integer arithmetic on the boundary lattice.
pub fn reconstruct_exact(spec: &SystemSpec, x: &[usize]) -> Result<ExactBracket> {
    check_itinerary(spec, x)?;
    let ticks = spec.lattice();
    // Horner from the deepest symbol: L <- K[x] * 2^(53 d) + (K[x+1] - K[x]) * L
    let mut lower = BigUint::from(0u8);
    let mut width = BigUint::from(1u8);
    for (d, &sym) in x.iter().rev().enumerate() {
        let p = BigUint::from(ticks[sym + 1] - ticks[sym]);
        lower = (BigUint::from(ticks[sym]) << (LATTICE_BITS as usize * d)) + &p * &lower;
        width *= p;
    }
    Ok(ExactBracket {
        lower,
        width,
        depth: x.len(),
    })
}

/// Affine description of `s_1..s_n` over one continuity cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellAffine {
    /// Left endpoint of the cell of initial states.
    pub lower: f64,
    /// Cell length `prod p(x_i)`.
    pub width: f64,
    /// `slopes[i-1] = prod_{j<=i} 1/p(x_j)`.
    pub slopes: Vec<f64>,
    /// `intercepts[i-1]` such that `s_i = slope * s0 + intercept` on the cell.
    pub intercepts: Vec<f64>,
    /// `bases[i-1] = s_i` at the left endpoint (all in `[0, 1)`).
    pub bases: Vec<f64>,
}

impl CellAffine {
    /// `s_i(s0)` for `i` in `1..=n`, evaluated relative to the left endpoint.
    pub fn state(&self, i: usize, s0: f64) -> f64 {
        self.bases[i - 1] + self.slopes[i - 1] * (s0 - self.lower)
    }
}

/// Slopes and intercepts of the states on the cell labelled by `x`.
pub fn cell_affine(spec: &SystemSpec, x: &[usize]) -> Result<CellAffine> {
    check_itinerary(spec, x)?;
    let n = x.len();
    let mut slopes = Vec::with_capacity(n);
    let mut slope = 1.0;
    for &sym in x {
        slope /= spec.p[sym];
        slopes.push(slope);
    }
    // s_n = 0 at the left endpoint; walk the inverse map back to s_1.
    let mut bases = vec![0.0; n];
    let mut s = 0.0;
    for i in (1..n).rev() {
        s = spec.cdf[x[i]] + spec.p[x[i]] * s;
        bases[i - 1] = s;
    }
    let lower = spec.cdf[x[0]] + spec.p[x[0]] * s;
    let width = x.iter().map(|&sym| spec.p[sym]).product();
    let intercepts = bases
        .iter()
        .zip(&slopes)
        .map(|(b, m)| b - m * lower)
        .collect();
    Ok(CellAffine {
        lower,
        width,
        slopes,
        intercepts,
        bases,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dyadic() -> SystemSpec {
        SystemSpec::uniform(2).unwrap()
    }

    fn skewed() -> SystemSpec {
        SystemSpec::new(&[0.25, 0.75]).unwrap()
    }

    #[test]
    fn construction_rejects_invalid_vectors() {
        assert!(SystemSpec::new(&[1.0]).is_err());
        assert!(SystemSpec::new(&[0.5, 0.4]).is_err());
        assert!(SystemSpec::new(&[0.5, 0.5, 0.0]).is_err());
        assert!(SystemSpec::new(&[1.5, -0.5]).is_err());
        assert!(SystemSpec::new(&[0.5, f64::NAN]).is_err());
        let err = SystemSpec::new(&[0.3, 0.6]).unwrap_err().to_string();
        assert!(err.contains("probability-sum"), "{err}");
    }

    #[test]
    fn tables_are_consistent() {
        let spec = SystemSpec::new(&[0.2, 0.3, 0.1, 0.4]).unwrap();
        let f = spec.cdf();
        assert_eq!(f[0], 0.0);
        assert_eq!(f[4], 1.0);
        for x in 0..4 {
            assert_eq!(f[x + 1] - f[x], spec.p(x));
            assert!(f[x + 1] > f[x]);
            assert_eq!(spec.g()[x], f[x] / spec.p(x));
            assert!((spec.p(x) - [0.2, 0.3, 0.1, 0.4][x]).abs() < 1e-16);
        }
        // uniform maps have G(x) = x
        let u = SystemSpec::uniform(4).unwrap();
        assert_eq!(u.g(), &[0.0, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi(&dyadic(), 0.625).unwrap(), 1);
        assert_eq!(phi(&skewed(), 0.2).unwrap(), 0);
        assert_eq!(phi(&skewed(), 0.25).unwrap(), 1);
        for r in 2..7 {
            let spec = SystemSpec::uniform(r).unwrap();
            assert_eq!(phi(&spec, 1.0).unwrap(), r - 1);
            assert_eq!(phi(&spec, 0.0).unwrap(), 0);
        }
        assert!(phi(&dyadic(), 1.0000001).is_err());
        assert!(phi(&dyadic(), -0.0001).is_err());
    }

    #[test]
    fn iterate_dyadic_reads_binary_digits() {
        let t = iterate(&dyadic(), 0.625, 4).unwrap();
        assert_eq!(t.symbols, vec![1, 0, 1, 0]);
        assert_eq!(t.states, vec![0.625, 0.25, 0.5, 0.0, 0.0]);
    }

    #[test]
    fn iterate_skewed_matches_hand_recursion() {
        let t = iterate(&skewed(), 0.5, 3).unwrap();
        assert_eq!(t.symbols, vec![1, 1, 0]);
        let want = [0.5, 1.0 / 3.0, 1.0 / 9.0, 4.0 / 9.0];
        for (got, want) in t.states.iter().zip(want) {
            assert!((got - want).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_is_a_fixed_point() {
        let t = iterate(&SystemSpec::new(&[0.3, 0.7]).unwrap(), 0.0, 7).unwrap();
        assert_eq!(t.symbols, vec![0; 7]);
        assert!(t.states.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn one_stays_in_top_cell() {
        let spec = SystemSpec::new(&[0.3, 0.7]).unwrap();
        let t = iterate(&spec, 1.0, 5).unwrap();
        assert_eq!(t.symbols, vec![1; 5]);
        let e = iterate_exact(&spec, 1.0, 5).unwrap();
        assert_eq!(e.symbols, vec![1; 5]);
        assert_eq!(e.states, vec![1.0; 6]);
    }

    #[test]
    fn exact_iteration_agrees_with_float_on_dyadic_maps() {
        let spec = SystemSpec::uniform(4).unwrap();
        let a = iterate(&spec, 0.123456789, 20).unwrap();
        let b = iterate_exact(&spec, 0.123456789, 20).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exact_iteration_outlasts_double_precision() {
        // The float orbit of a non-dyadic map stops tracking s0 after a few
        // dozen steps; the exact itinerary still brackets it at depth 200.
        let spec = SystemSpec::new(&[0.3, 0.7]).unwrap();
        let s0 = std::f64::consts::FRAC_1_SQRT_2;
        let exact = iterate_exact(&spec, s0, 200).unwrap();
        for tau in [10, 50, 100, 200] {
            let b = reconstruct(&spec, &exact.symbols[..tau]).unwrap();
            assert!(b.lower <= s0 && s0 <= b.upper, "tau={tau}: {b:?}");
        }
    }

    #[test]
    fn reconstruct_examples() {
        let b = reconstruct(&dyadic(), &[1, 0, 1]).unwrap();
        assert_eq!((b.lower, b.upper), (0.625, 0.75));
        let b = reconstruct(&skewed(), &[1, 1, 0]).unwrap();
        assert_eq!(b.lower, 0.4375);
        assert_eq!(b.upper, 0.578125);
        assert!(reconstruct(&dyadic(), &[]).is_err());
        assert!(reconstruct(&dyadic(), &[0, 2]).is_err());
    }

    #[test]
    fn reconstruct_roundtrip() {
        let spec = SystemSpec::new(&[0.3, 0.2, 0.5]).unwrap();
        let t = iterate(&spec, 0.3, 20).unwrap();
        let b = reconstruct(&spec, &t.symbols).unwrap();
        assert!(b.contains(0.3));
        assert!(b.width() <= spec.max_p().powi(20));
    }

    #[test]
    fn cell_affine_examples() {
        let c = cell_affine(&dyadic(), &[1, 0]).unwrap();
        assert_eq!(c.slopes, vec![2.0, 4.0]);
        assert_eq!(c.intercepts, vec![-1.0, -2.0]);
        let c = cell_affine(&dyadic(), &[0]).unwrap();
        assert_eq!(c.slopes, vec![2.0]);
        assert_eq!(c.intercepts, vec![0.0]);
        assert_eq!(c.lower, 0.0);
        assert_eq!(c.width, 0.5);
    }

    #[test]
    fn cell_affine_agrees_with_iteration() {
        let spec = SystemSpec::new(&[0.25, 0.45, 0.3]).unwrap();
        let x = [2, 0, 1, 1];
        let c = cell_affine(&spec, &x).unwrap();
        let mut rng = rng::rng_from_seed(3);
        for _ in 0..100 {
            let s0 = c.lower + c.width * (0.001 + 0.998 * rng::uniform(&mut rng));
            let t = iterate(&spec, s0, x.len()).unwrap();
            assert_eq!(t.symbols, x);
            for i in 1..=x.len() {
                assert!((t.states[i] - c.state(i, s0)).abs() <= 1e-9);
                assert!((t.states[i] - (c.slopes[i - 1] * s0 + c.intercepts[i - 1])).abs() <= 1e-9);
            }
        }
    }

    #[test]
    fn stationary_sampler_satisfies_forward_recursion() {
        let spec = SystemSpec::new(&[0.15, 0.6, 0.25]).unwrap();
        let mut rng = rng::rng_from_seed(11);
        let t = sample_stationary(&spec, 500, &mut rng);
        for step in 1..=500 {
            let prev = t.states[step - 1];
            let x = t.symbols[step - 1];
            assert!((0.0..=1.0).contains(&prev));
            assert_eq!(phi(&spec, prev).unwrap(), x);
            let fwd = (prev - spec.cdf()[x]) / spec.p(x);
            // the backward rebuild is exact up to one rounding per step
            assert!((fwd - t.states[step]).abs() <= 1e-12 / spec.p(x));
        }
    }
}
