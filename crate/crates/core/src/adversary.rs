//! Eavesdropping strategies.
//!
//! Both attacks act on a pulse as it reaches Bob's station. Intercept-resend is
//! the ordinary BB84 baseline; delay-for-basis is the attack the timing check
//! is there to catch: Eve holds the qubit until the basis is public, measures
//! without disturbance and forwards it, along with the basis bit, late.

use rand::Rng;

use crate::model::{encode, measure_state, Basis, QubitSignal};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AttackKind {
    None,
    InterceptResend,
    DelayForBasis,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AttackStrategy {
    pub kind: AttackKind,
    /// Fraction of non-vacuum pulses Eve attacks.
    pub fraction: f64,
    /// Forwarding delay from Eve to Bob's station for delay-for-basis, ns.
    /// Zero puts Eve right at Bob's door.
    pub eve_to_bob_delay: u64,
}

impl Default for AttackStrategy {
    fn default() -> Self {
        Self::none()
    }
}

impl AttackStrategy {
    pub fn none() -> Self {
        Self {
            kind: AttackKind::None,
            fraction: 0.0,
            eve_to_bob_delay: 0,
        }
    }

    pub fn intercept_resend(fraction: f64) -> Self {
        Self {
            kind: AttackKind::InterceptResend,
            fraction,
            eve_to_bob_delay: 0,
        }
    }

    pub fn delay_for_basis(fraction: f64) -> Self {
        Self {
            kind: AttackKind::DelayForBasis,
            fraction,
            eve_to_bob_delay: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.fraction) {
            return Err(Error::invalid(
                "attack.fraction",
                format!("must lie in [0, 1], got {}", self.fraction),
            ));
        }
        Ok(())
    }

    /// Draws whether this pulse is attacked. Vacuum pulses carry nothing to attack.
    pub fn targets<R: Rng + ?Sized>(&self, signal: &QubitSignal, rng: &mut R) -> bool {
        self.kind != AttackKind::None && !signal.is_vacuum() && rng.random_bool(self.fraction)
    }
}

/// What Eve learned from one intercepted pulse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Interception {
    pub eve_basis: Basis,
    pub eve_bit: bool,
    pub resent: QubitSignal,
}

/// Measures in a uniformly random basis and resends the state matching the
/// outcome, with the same photon number and timing.
pub fn intercept_resend<R: Rng + ?Sized>(signal: QubitSignal, rng: &mut R) -> Interception {
    let eve_basis = Basis::random(rng);
    let eve_bit = measure_state(signal.state, eve_basis, rng);
    Interception {
        eve_basis,
        eve_bit,
        resent: QubitSignal {
            state: encode(eve_bit, eve_basis),
            ..signal
        },
    }
}

/// Holds the qubit until the basis is disclosed, measures in that basis and
/// forwards the result. The pulse reaches Bob at
/// `basis_disclosure_time + eve_to_bob_delay`.
pub fn delay_for_basis<R: Rng + ?Sized>(
    signal: QubitSignal,
    disclosed_basis: Basis,
    basis_disclosure_time: u64,
    eve_to_bob_delay: u64,
    rng: &mut R,
) -> Interception {
    let eve_bit = measure_state(signal.state, disclosed_basis, rng);
    Interception {
        eve_basis: disclosed_basis,
        eve_bit,
        resent: QubitSignal {
            state: encode(eve_bit, disclosed_basis),
            time: signal.time.max(basis_disclosure_time + eve_to_bob_delay),
            ..signal
        },
    }
}
