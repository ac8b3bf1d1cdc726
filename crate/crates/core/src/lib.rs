//! Parameter modulation over the AWGN channel with piecewise-linear chaotic
//! maps.
//!
//! The crate is organised by subsystem:
//!
//! * [`dynamics`]: the map family, forward iteration, reconstruction of the
//!   initial state from an itinerary and the affine structure of each
//!   continuity cell.
//! * [`statistics`]: Lyapunov exponent, autocorrelation, spectra and signal
//!   locus length, in closed form and by simulation.
//! * [`channel`]: modulation of states into power-limited channel inputs
//!   and the Gaussian channel itself.
//! * [`estimators`]: exact maximum-likelihood estimation of the parameter,
//!   anomaly accounting and the Monte Carlo harness.
//! * [`bounds`]: scalar bound quantities (outage-exponent rate, capacity,
//!   shaping loss, alphabet limit, the memory bound `C1`).
//! * [`itinerary`]: the random-codebook scheme that transmits a
//!   constellation-mapped itinerary instead of the states.
//! * [`synth`]: maps with long-range memory and the bits-to-process
//!   synthesizer.

pub mod bounds;
pub mod channel;
pub mod dynamics;
pub mod error;
pub mod estimators;
pub mod itinerary;
pub mod numeric;
pub mod rng;
pub mod statistics;
pub mod synth;

pub use dynamics::{SystemSpec, Trajectory};
pub use error::{Error, Result};
