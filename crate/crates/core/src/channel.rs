//! Power-constrained modulation of state sequences and the AWGN channel.
//!
//! A state `s` in `[0, 1]` is sent as `u = sqrt(12Q) (s - 1/2)`. A uniform
//! state then gives a zero-mean input of power exactly `Q`, so the average
//! power constraint holds in expectation only; the hard guarantee is
//! `|u| <= sqrt(3Q)` per sample.

use crate::dynamics::Trajectory;
use crate::error::{domain, Result};
use crate::rng::{self, Gaussian};

/// Signal power, noise variance and their ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelConfig {
    pub q: f64,
    pub sigma2: f64,
    pub gamma: f64,
}

impl ChannelConfig {
    pub fn new(q: f64, sigma2: f64) -> Result<Self> {
        check_positive("power Q", q)?;
        check_positive("noise variance sigma2", sigma2)?;
        Ok(Self {
            q,
            sigma2,
            gamma: q / sigma2,
        })
    }

    /// Noise variance chosen as `Q / gamma`.
    pub fn from_gamma(q: f64, gamma: f64) -> Result<Self> {
        check_positive("power Q", q)?;
        check_positive("SNR gamma", gamma)?;
        Ok(Self {
            q,
            sigma2: q / gamma,
            gamma,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    /// `C = ln(1 + gamma) / 2` in nats per channel use.
    pub fn capacity(&self) -> f64 {
        0.5 * self.gamma.ln_1p()
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(domain(format!("{name} = {v} must be positive and finite")))
    }
}

/// Which states of a trajectory are put on the channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignalWindow {
    /// `s_1..s_n`. For `r` cells these are identical for the `r` initial
    /// states `F(x) + p(x) s_1`, so `theta` is only identified up to its
    /// first symbol.
    AfterInitial,
    /// `s_0..s_n` (`n + 1` samples), which makes `theta -> u` injective.
    #[default]
    WithInitial,
}

impl SignalWindow {
    /// Index of the first transmitted state.
    pub fn first(&self) -> usize {
        match self {
            SignalWindow::AfterInitial => 1,
            SignalWindow::WithInitial => 0,
        }
    }

    /// Number of transmitted samples for an `n`-step trajectory.
    pub fn len(&self, n: usize) -> usize {
        n + 1 - self.first()
    }
}

/// `sqrt(12Q) (s - 1/2)` for each state.
pub fn modulate_states(states: &[f64], q: f64) -> Vec<f64> {
    let a = (12.0 * q).sqrt();
    states.iter().map(|s| a * (s - 0.5)).collect()
}

/// Channel inputs `u_1..u_n`; the initial state is not transmitted.
pub fn modulate(traj: &Trajectory, q: f64) -> Vec<f64> {
    modulate_states(&traj.states[1..], q)
}

/// Channel inputs for the chosen window of states.
pub fn modulate_window(traj: &Trajectory, q: f64, window: SignalWindow) -> Vec<f64> {
    modulate_states(&traj.states[window.first()..], q)
}

/// One use of the channel: inputs, noise and outputs.
///
/// `z` holds the effective noise `y - u` as computed in floating point, so
/// `y[i] - u[i] == z[i]` holds exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub u: Vec<f64>,
    pub z: Vec<f64>,
    pub y: Vec<f64>,
}

/// Adds i.i.d. `N(0, sigma2)` noise drawn from a generator seeded with
/// `noise_seed` (polar method, see [`crate::rng`]).
pub fn transmit(u: &[f64], cfg: &ChannelConfig, noise_seed: u64) -> ChannelRealization {
    let y = noisy_output(u, cfg, noise_seed);
    let z = y.iter().zip(u).map(|(y, u)| y - u).collect();
    ChannelRealization {
        u: u.to_vec(),
        z,
        y,
    }
}

/// Outputs `y = u + z` only, for hot loops that do not need `z`.
pub fn noisy_output(u: &[f64], cfg: &ChannelConfig, noise_seed: u64) -> Vec<f64> {
    let sigma = cfg.sigma();
    let mut g = Gaussian::new(rng::rng_from_seed(noise_seed));
    u.iter().map(|&v| v + sigma * g.next()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{self, SystemSpec};

    #[test]
    fn modulation_examples() {
        assert_eq!(modulate_states(&[0.5], 3.0), vec![0.0]);
        assert!((modulate_states(&[1.0], 1.0 / 12.0)[0] - 0.5).abs() < 1e-15);
        let traj = dynamics::iterate(&SystemSpec::uniform(2).unwrap(), 0.625, 4).unwrap();
        assert_eq!(modulate(&traj, 1.0).len(), 4);
        assert_eq!(modulate_window(&traj, 1.0, SignalWindow::WithInitial).len(), 5);
        assert_eq!(SignalWindow::WithInitial.len(4), 5);
        assert_eq!(SignalWindow::AfterInitial.len(4), 4);
    }

    #[test]
    fn config_validation() {
        let c = ChannelConfig::new(2.0, 0.5).unwrap();
        assert_eq!(c.gamma, 4.0);
        assert!(ChannelConfig::new(0.0, 1.0).is_err());
        assert!(ChannelConfig::new(1.0, -1.0).is_err());
        assert!(ChannelConfig::from_gamma(1.0, f64::NAN).is_err());
        let g = ChannelConfig::from_gamma(1.0, 1000.0).unwrap();
        assert_eq!(g.gamma, 1000.0);
        assert_eq!(g.sigma2, 1e-3);
    }

    #[test]
    fn noiseless_limit_and_determinism() {
        let u: Vec<f64> = (0..100).map(|i| (i as f64 / 50.0) - 1.0).collect();
        let cfg = ChannelConfig::new(1.0, 1e-30).unwrap();
        let r = transmit(&u, &cfg, 5);
        for (y, u) in r.y.iter().zip(&u) {
            assert!((y - u).abs() < 1e-12);
        }
        let cfg = ChannelConfig::new(1.0, 0.3).unwrap();
        let a = transmit(&u, &cfg, 77);
        let b = transmit(&u, &cfg, 77);
        assert_eq!(a, b);
        for i in 0..u.len() {
            assert_eq!(a.y[i] - a.u[i], a.z[i]);
        }
        assert_ne!(transmit(&u, &cfg, 78).z, a.z);
    }

    #[test]
    fn noise_variance_law_of_large_numbers() {
        let cfg = ChannelConfig::new(1.0, 0.7).unwrap();
        let u = vec![0.0; 1_000_000];
        let z = transmit(&u, &cfg, 2024).z;
        let var = z.iter().map(|v| v * v).sum::<f64>() / z.len() as f64;
        assert!((var / 0.7 - 1.0).abs() < 0.01, "variance {var}");
    }
}
