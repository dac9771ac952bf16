//! Executable protocol sessions.
//!
//! Three variants share one event loop:
//!
//! - [`Variant::Bb84`]: Bob measures each pulse on arrival in a random basis,
//!   bases are compared afterwards and mismatches discarded.
//! - [`Variant::DetBasic`]: Bob stores every qubit, sends a receipt the moment
//!   it enters his station, and Alice discloses the basis only after the
//!   receipt is back. Storage lasts 2τ.
//! - [`Variant::DetPractical`]: no receipt. Alice discloses basis bit `i` at
//!   `t_q + τ + Δ` and Bob stores for τ + Δ; arrival times of the basis bits
//!   are audited afterwards.

mod checks;
mod export;
mod session;

pub use checks::{estimate_qber, select_check_bits, sift, verify_checks, SiftedKey};
pub use export::{write_transcript, TRANSCRIPT_HEADER};
pub use session::run_session;

use std::fmt;
use std::str::FromStr;

use crate::model::Basis;
use crate::timing::TimingParams;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    Bb84,
    DetBasic,
    DetPractical,
}

impl Variant {
    pub fn is_deterministic(self) -> bool {
        !matches!(self, Variant::Bb84)
    }

    /// The schedule this variant actually runs. The basic variant waits for
    /// Bob's receipt, so its basis leaves Alice at t_q + 2τ: the practical
    /// schedule with Δ = τ.
    pub fn effective_timing(self, timing: &TimingParams) -> TimingParams {
        match self {
            Variant::DetBasic => TimingParams {
                delta_cap: timing.tau,
                ..*timing
            },
            _ => *timing,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Variant::Bb84 => "bb84",
            Variant::DetBasic => "det_basic",
            Variant::DetPractical => "det_practical",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "bb84" => Ok(Variant::Bb84),
            "det_basic" | "basic" => Ok(Variant::DetBasic),
            "det_practical" | "det" | "practical" => Ok(Variant::DetPractical),
            other => Err(format!("unknown protocol variant `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SessionConfig {
    /// N: half the number of check bits.
    pub n_target: usize,
    /// Oversampling allowance for channel loss.
    pub eta_c: f64,
    /// Oversampling allowance for memory loss.
    pub eta_m: f64,
    pub variant: Variant,
    pub qber_abort_threshold: f64,
    /// Spacing between Alice's emissions, ns.
    pub pulse_period: u64,
    /// Explicit pulse count, replacing (4 + η_c + η_m)·N when set.
    pub pulses: Option<usize>,
    pub f_casc: f64,
}

impl Default for SessionConfig {
    fn default() -> Self {
        Self {
            n_target: 500,
            eta_c: 2000.0,
            eta_m: 0.0,
            variant: Variant::DetPractical,
            qber_abort_threshold: 0.11,
            pulse_period: 200,
            pulses: None,
            f_casc: 1.0,
        }
    }
}

impl SessionConfig {
    /// W = ⌈(4 + η_c + η_m)·N⌉ unless overridden.
    pub fn pulse_count(&self) -> usize {
        self.pulses.unwrap_or_else(|| {
            let w = (4.0 + self.eta_c + self.eta_m) * self.n_target as f64;
            // Shave float noise so that exact products are not bumped up.
            (w - 1e-9 * w).ceil() as usize
        })
    }

    pub fn check_count(&self) -> usize {
        2 * self.n_target
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_target == 0 {
            return Err(Error::invalid("session.n_target", "must be >= 1"));
        }
        for (name, v) in [("session.eta_c", self.eta_c), ("session.eta_m", self.eta_m)] {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(name, format!("must be >= 0, got {v}")));
            }
        }
        if !(self.qber_abort_threshold > 0.0 && self.qber_abort_threshold < 0.5) {
            return Err(Error::invalid(
                "session.qber_abort_threshold",
                format!("must lie in (0, 0.5), got {}", self.qber_abort_threshold),
            ));
        }
        if self.pulse_period == 0 {
            return Err(Error::invalid("session.pulse_period_ns", "must be > 0"));
        }
        if self.pulses == Some(0) {
            return Err(Error::invalid("session.pulses", "must be >= 1"));
        }
        if !(self.f_casc.is_finite() && self.f_casc >= 0.0) {
            return Err(Error::invalid("session.f_casc", "must be >= 0"));
        }
        Ok(())
    }
}

/// Everything recorded about one pulse, from both sides.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PulseRecord {
    pub index: usize,
    pub alice_bit: bool,
    pub alice_basis: Basis,
    pub photons_sent: u32,
    /// t^q_i
    pub emission_time: u64,
    pub attacked: bool,
    /// When the pulse slot reached Bob's station.
    pub qubit_entry_time: Option<u64>,
    /// End of storage in Bob's memory (deterministic variants).
    pub storage_release_time: Option<u64>,
    /// t^b_i
    pub basis_sent_time: Option<u64>,
    /// B_i
    pub bob_basis_received: Option<Basis>,
    /// T_i
    pub basis_arrival: Option<u64>,
    /// Basis Bob measured in: B_i for deterministic variants, his own coin in BB84.
    pub bob_measure_basis: Option<Basis>,
    pub bob_click: bool,
    /// D_i
    pub bob_bit: Option<bool>,
    pub measurement_time: Option<u64>,
}

impl PulseRecord {
    pub fn storage_duration(&self) -> Option<u64> {
        Some(self.storage_release_time? - self.qubit_entry_time?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AbortReason {
    BasisMismatch,
    TimingViolation,
    QberExceeded,
    InsufficientBits,
    SecurityMarginExhausted,
}

impl fmt::Display for AbortReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            AbortReason::BasisMismatch => "BasisMismatch",
            AbortReason::TimingViolation => "TimingViolation",
            AbortReason::QberExceeded => "QberExceeded",
            AbortReason::InsufficientBits => "InsufficientBits",
            AbortReason::SecurityMarginExhausted => "SecurityMarginExhausted",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionTranscript {
    pub variant: Variant,
    pub records: Vec<PulseRecord>,
    pub sifted: SiftedKey,
    /// Pulse indices of the check bits, ascending.
    pub check_indices: Vec<usize>,
    /// Pulse indices feeding reconciliation, ascending.
    pub key_indices: Vec<usize>,
    /// QBER measured on the check bits (recorded even if an earlier check aborts).
    pub check_qber: Option<f64>,
    /// Single-photon fraction estimated from the observed click rate.
    pub beta_estimate: Option<f64>,
    pub abort: Option<AbortReason>,
    pub leaked_bits: usize,
    /// Errors left in Bob's key after reconciliation.
    pub residual_errors: usize,
    pub final_key_alice: Option<Vec<bool>>,
    pub final_key_bob: Option<Vec<bool>>,
}

impl SessionTranscript {
    pub fn pulses(&self) -> usize {
        self.records.len()
    }

    pub fn clicks(&self) -> usize {
        self.records.iter().filter(|r| r.bob_click).count()
    }

    /// Clicked pulses dropped at sifting.
    pub fn discarded(&self) -> usize {
        self.clicks() - self.sifted.len()
    }

    pub fn final_key_length(&self) -> usize {
        self.final_key_alice.as_ref().map_or(0, Vec::len)
    }

    /// Line-oriented plain-text summary.
    pub fn summary(&self) -> String {
        let qber = self
            .check_qber
            .map_or_else(|| "-".to_string(), |q| format!("{q:.6}"));
        let abort = self
            .abort
            .map_or_else(|| "none".to_string(), |a| a.to_string());
        format!(
            "variant={}\npulses={}\nclicks={}\nsifted={}\ndiscarded={}\nchecked={}\ncheck_qber={}\nabort={}\nleaked_bits={}\nresidual_errors={}\nfinal_key_length={}\nkeys_match={}\n",
            self.variant,
            self.pulses(),
            self.clicks(),
            self.sifted.len(),
            self.discarded(),
            self.check_indices.len(),
            qber,
            abort,
            self.leaked_bits,
            self.residual_errors,
            self.final_key_length(),
            self.final_key_alice == self.final_key_bob,
        )
    }
}
