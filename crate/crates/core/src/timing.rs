//! Timing calculus of the practical deterministic protocol.
//!
//! Alice emits qubit `i` at `t_q`, discloses its basis at `t_q + τ + Δ`, and Bob
//! must see that basis bit at `t_q + 2τ + Δ + δ`. An eavesdropper who wants the
//! basis before measuring has to hold the qubit past `t_q + τ + Δ`, yet the
//! qubit must enter Bob's station by `t_q + τ` to leave his timing signature
//! untouched. All times are integer nanoseconds.

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TimingParams {
    /// One-way travel time τ between Alice and Bob.
    pub tau: u64,
    /// Security parameter Δ.
    pub delta_cap: u64,
    /// Electronics delay δ on Bob's basis receiver.
    pub delta: u64,
    /// Measurement delay δ′ after the basis bit is available.
    pub delta_prime: u64,
    /// Detector gate half-width ε, also the arrival-check tolerance.
    pub epsilon: u64,
}

impl TimingParams {
    pub fn validate(&self) -> Result<()> {
        if self.delta_cap == 0 {
            return Err(Error::invalid("timing.delta_cap_ns", "must be > 0"));
        }
        if self.epsilon >= self.delta_cap {
            return Err(Error::invalid(
                "timing.delta_cap_ns",
                format!(
                    "gate window epsilon = {} ns must be smaller than delta_cap = {} ns",
                    self.epsilon, self.delta_cap
                ),
            ));
        }
        if self.delta_prime < self.delta {
            return Err(Error::invalid(
                "timing.delta_prime_ns",
                format!("must be >= delta = {} ns", self.delta),
            ));
        }
        Ok(())
    }

    /// Time Bob holds a qubit between entering his station and release.
    pub fn storage_duration(&self) -> u64 {
        self.tau + self.delta_cap
    }
}

/// t^b_i = t_q + τ + Δ.
pub fn basis_send_time(t_q: u64, p: &TimingParams) -> u64 {
    t_q + p.tau + p.delta_cap
}

/// T_i = t_q + 2τ + Δ + δ.
pub fn expected_arrival(t_q: u64, p: &TimingParams) -> u64 {
    t_q + 2 * p.tau + p.delta_cap + p.delta
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ArrivalVerdict {
    Pass,
    Fail,
}

impl ArrivalVerdict {
    pub fn passed(self) -> bool {
        self == ArrivalVerdict::Pass
    }
}

/// Passes iff the observed basis arrival is within ±ε of the schedule.
pub fn verify_arrival(observed: u64, t_q: u64, p: &TimingParams) -> ArrivalVerdict {
    if observed.abs_diff(expected_arrival(t_q, p)) <= p.epsilon {
        ArrivalVerdict::Pass
    } else {
        ArrivalVerdict::Fail
    }
}

/// Latest time a qubit may enter Bob's station without shifting T_i, given a
/// storage time of τ + Δ.
pub fn eve_latest_undetected_entry(t_q: u64, p: &TimingParams) -> u64 {
    t_q + p.tau
}
