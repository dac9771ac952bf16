//! Deterministic BB84 quantum key distribution: timed protocol simulation and
//! secure-rate analysis.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: bases, state labels, weak-pulse photon statistics and the
//!   single-qubit measurement rule.
//! - [`timing`]: the schedule of the practical deterministic protocol and the
//!   arrival check that catches an eavesdropper waiting for the basis.
//! - [`channel`]: fiber loss, propagation delay, gated detectors and the
//!   authenticated classical channel.
//! - [`adversary`]: intercept-resend and delay-for-basis eavesdroppers.
//! - [`protocol`]: event-driven sessions for BB84 and both deterministic
//!   variants, producing auditable transcripts.
//! - [`postprocess`]: entropy functions, Cascade-style reconciliation and
//!   Toeplitz privacy amplification.
//! - [`rates`]: closed-form secure key rates, photon-number optimization,
//!   distance sweeps and the crossover finder.
//! - [`config`]: the flat `key=value` configuration format.

pub mod adversary;
pub mod channel;
pub mod config;
pub mod error;
pub mod model;
pub mod postprocess;
pub mod protocol;
pub mod rates;
pub mod timing;

pub use error::{Error, Result};

/// Seeded generator used for every random stream in the crate.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// Builds an independent stream `stream` of the generator seeded by `seed`.
pub fn rng_stream(seed: u64, stream: u64) -> SimRng {
    use rand::SeedableRng;
    let mut rng = SimRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
