//! Small numerical kernels shared across modules.

use crate::error::{Error, Result};

/// Neumaier-compensated running sum.
///
/// Reductions over Monte Carlo trials and cell enumerations go through this
/// so that results do not depend on how the work was chunked beyond the
/// last bit or two.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::new();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Sample mean with the standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub count: usize,
}

impl MeanEstimate {
    /// Mean and standard error from an ordered slice of samples.
    ///
    /// With fewer than two samples the standard error is reported as NaN.
    pub fn from_samples(samples: &[f64]) -> Self {
        let count = samples.len();
        if count == 0 {
            return Self {
                mean: f64::NAN,
                stderr: f64::NAN,
                count,
            };
        }
        let mean = samples.iter().copied().collect::<CompensatedSum>().value() / count as f64;
        let stderr = if count > 1 {
            let ss = samples
                .iter()
                .map(|x| (x - mean) * (x - mean))
                .collect::<CompensatedSum>()
                .value();
            (ss / (count - 1) as f64 / count as f64).sqrt()
        } else {
            f64::NAN
        };
        Self {
            mean,
            stderr,
            count,
        }
    }

    /// Binomial proportion with its standard error.
    pub fn proportion(successes: usize, count: usize) -> Self {
        if count == 0 {
            return Self {
                mean: f64::NAN,
                stderr: f64::NAN,
                count,
            };
        }
        let p = successes as f64 / count as f64;
        Self {
            mean: p,
            stderr: (p * (1.0 - p) / count as f64).sqrt(),
            count,
        }
    }
}

/// Standard Gaussian upper tail `P(N(0,1) > x)` via the complementary error
/// function.
pub fn gaussian_tail(x: f64) -> f64 {
    0.5 * libm::erfc(x * std::f64::consts::FRAC_1_SQRT_2)
}

/// Bisection on a bracket `[lo, hi]` with `f(lo)` and `f(hi)` of opposite
/// sign. Iterates until the bracket cannot be split further in `f64`.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64) -> Result<f64> {
    let mut f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if !(f_lo.is_finite() && f_hi.is_finite()) || f_lo.signum() == f_hi.signum() {
        return Err(Error::Numerical(format!(
            "bracket [{lo}, {hi}] does not straddle a root (f = {f_lo}, {f_hi})"
        )));
    }
    for _ in 0..2100 {
        let mid = lo + 0.5 * (hi - lo);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo + 0.5 * (hi - lo))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut s = CompensatedSum::new();
        s.add(1.0);
        for _ in 0..1000 {
            s.add(1e-16);
        }
        s.add(-1.0);
        assert!((s.value() - 1e-13).abs() < 1e-25);
    }

    #[test]
    fn gaussian_tail_matches_high_precision_values() {
        // Reference values computed with 50-digit arithmetic.
        let cases = [
            (0.0, 0.5),
            (1.0, 0.15865525393145705),
            (2.5, 0.006209665325776135),
            (5.0, 2.866515718791939e-7),
            (8.0, 6.220960574271784e-16),
        ];
        for (x, want) in cases {
            let got = gaussian_tail(x);
            assert!(((got - want) / want).abs() < 1e-14, "x={x}: {got} vs {want}");
        }
    }

    #[test]
    fn bisect_finds_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0).unwrap();
        assert!((r - std::f64::consts::SQRT_2).abs() < 1e-15);
        assert!(bisect(|x| x * x + 1.0, 0.0, 2.0).is_err());
    }

    #[test]
    fn proportion_stderr() {
        let e = MeanEstimate::proportion(25, 100);
        assert_eq!(e.mean, 0.25);
        assert!((e.stderr - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
    }
}
