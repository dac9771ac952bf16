//! BB84 state space: bases, the four state labels, weak-pulse sources and the
//! single-qubit measurement rule.

use std::fmt;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::{Error, Result};

/// Preparation / measurement basis. A basis bit of 0 selects `Z`, 1 selects `X`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    pub fn from_bit(bit: bool) -> Self {
        if bit {
            Basis::X
        } else {
            Basis::Z
        }
    }

    pub fn as_bit(self) -> bool {
        matches!(self, Basis::X)
    }

    pub fn conjugate(self) -> Self {
        match self {
            Basis::Z => Basis::X,
            Basis::X => Basis::Z,
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        Basis::from_bit(rng.random())
    }

    pub fn symbol(self) -> char {
        match self {
            Basis::Z => 'Z',
            Basis::X => 'X',
        }
    }
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.symbol())
    }
}

/// Abstract label of one of the four BB84 states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StateLabel {
    Zero,
    One,
    Plus,
    Minus,
}

impl StateLabel {
    pub const ALL: [StateLabel; 4] = [
        StateLabel::Zero,
        StateLabel::One,
        StateLabel::Plus,
        StateLabel::Minus,
    ];

    pub fn basis(self) -> Basis {
        match self {
            StateLabel::Zero | StateLabel::One => Basis::Z,
            StateLabel::Plus | StateLabel::Minus => Basis::X,
        }
    }

    pub fn bit(self) -> bool {
        matches!(self, StateLabel::One | StateLabel::Minus)
    }
}

impl fmt::Display for StateLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StateLabel::Zero => "|0⟩",
            StateLabel::One => "|1⟩",
            StateLabel::Plus => "|+⟩",
            StateLabel::Minus => "|−⟩",
        };
        f.write_str(s)
    }
}

pub fn encode(bit: bool, basis: Basis) -> StateLabel {
    match (bit, basis) {
        (false, Basis::Z) => StateLabel::Zero,
        (true, Basis::Z) => StateLabel::One,
        (false, Basis::X) => StateLabel::Plus,
        (true, Basis::X) => StateLabel::Minus,
    }
}

/// Reads a label back in `basis`. Returns `None` when the basis is conjugate
/// to the preparation basis, where the outcome carries no information.
pub fn decode(state: StateLabel, basis: Basis) -> Option<bool> {
    (state.basis() == basis).then_some(state.bit())
}

/// A light pulse on the quantum channel. Every photon carries the same state.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QubitSignal {
    pub state: StateLabel,
    pub photon_count: u32,
    /// Alice's emission time t^q_i in ns.
    pub emission_time: u64,
    /// Time at which the pulse reaches its current location, in ns.
    pub time: u64,
}

impl QubitSignal {
    pub fn new(bit: bool, basis: Basis, photon_count: u32, emission_time: u64) -> Self {
        Self {
            state: encode(bit, basis),
            photon_count,
            emission_time,
            time: emission_time,
        }
    }

    pub fn encoded_bit(&self) -> bool {
        self.state.bit()
    }

    pub fn encoded_basis(&self) -> Basis {
        self.state.basis()
    }

    pub fn is_vacuum(&self) -> bool {
        self.photon_count == 0
    }
}

/// Measures a non-vacuum signal in `basis`. Returns `None` for a vacuum pulse,
/// which cannot produce a signal click.
pub fn measure<R: Rng + ?Sized>(signal: &QubitSignal, basis: Basis, rng: &mut R) -> Option<bool> {
    if signal.is_vacuum() {
        return None;
    }
    Some(measure_state(signal.state, basis, rng))
}

pub(crate) fn measure_state<R: Rng + ?Sized>(state: StateLabel, basis: Basis, rng: &mut R) -> bool {
    match decode(state, basis) {
        Some(bit) => bit,
        None => rng.random(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhotonStatistics {
    /// Attenuated laser: Poisson photon number with mean `mu`.
    Poisson,
    /// Ideal single-photon source; `mu` is ignored.
    SinglePhoton,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceModel {
    pub mu: f64,
    pub statistics: PhotonStatistics,
}

impl SourceModel {
    pub fn poisson(mu: f64) -> Result<Self> {
        let source = Self {
            mu,
            statistics: PhotonStatistics::Poisson,
        };
        source.validate()?;
        Ok(source)
    }

    pub fn single_photon() -> Self {
        Self {
            mu: 1.0,
            statistics: PhotonStatistics::SinglePhoton,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return Err(Error::invalid(
                "source.mu",
                format!("must be > 0, got {}", self.mu),
            ));
        }
        Ok(())
    }

    /// Probability that a pulse is empty.
    pub fn vacuum_probability(&self) -> f64 {
        match self.statistics {
            PhotonStatistics::Poisson => (-self.mu).exp(),
            PhotonStatistics::SinglePhoton => 0.0,
        }
    }

    /// Probability S_m that a pulse holds more than one photon.
    pub fn multiphoton_probability(&self) -> f64 {
        match self.statistics {
            PhotonStatistics::Poisson => multiphoton_probability(self.mu),
            PhotonStatistics::SinglePhoton => 0.0,
        }
    }

    pub fn sample_photon_number<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        match self.statistics {
            PhotonStatistics::Poisson => {
                // mu > 0 is checked by validate(); Poisson::new only rejects that.
                let poisson = Poisson::new(self.mu).expect("validated mean photon number");
                poisson.sample(rng) as u32
            }
            PhotonStatistics::SinglePhoton => 1,
        }
    }
}

/// S_m(μ) = 1 − e^{−μ}(1 + μ) for Poisson statistics.
pub fn multiphoton_probability(mu: f64) -> f64 {
    if mu >= 1.0 {
        return 1.0 - (-mu).exp() * (1.0 + mu);
    }
    // e^{−μ} Σ_{k≥2} μ^k/k! avoids the cancellation of the closed form at small μ.
    let mut term = mu * mu / 2.0;
    let mut tail = 0.0;
    let mut k = 2.0;
    while term > tail * f64::EPSILON {
        tail += term;
        k += 1.0;
        term *= mu / k;
    }
    (-mu).exp() * tail
}
