//! Fiber quantum channel, gated detectors and the ideal classical channel.

use rand::Rng;

use crate::model::{measure, Basis, QubitSignal};
use crate::{Error, Result};

/// Vacuum speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberParams {
    pub alpha_db_per_km: f64,
    pub length_km: f64,
    /// Fixed loss L_c at the receiver, dB.
    pub receiver_loss_db: f64,
    pub refractive_index: f64,
}

impl FiberParams {
    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            ("fiber.alpha_db_per_km", self.alpha_db_per_km),
            ("fiber.length_km", self.length_km),
            ("fiber.receiver_loss_db", self.receiver_loss_db),
        ];
        for (name, value) in non_negative {
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::invalid(name, format!("must be >= 0, got {value}")));
            }
        }
        if !(self.refractive_index.is_finite() && self.refractive_index >= 1.0) {
            return Err(Error::invalid(
                "fiber.refractive_index",
                format!("must be >= 1, got {}", self.refractive_index),
            ));
        }
        Ok(())
    }

    pub fn with_length(self, length_km: f64) -> Self {
        Self { length_km, ..self }
    }

    /// One-way propagation time over this fiber, ns.
    pub fn propagation_delay(&self) -> u64 {
        propagation_delay(self.length_km, self.refractive_index)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorParams {
    /// Quantum efficiency η_B.
    pub efficiency: f64,
    /// Dark-count probability per gate.
    pub dark_prob: f64,
    /// Probability that a signal click reports the wrong bit (optical misalignment).
    pub misalignment: f64,
    /// Gate half-width ε in ns.
    pub gate_window: u64,
}

impl DetectorParams {
    pub fn ideal(gate_window: u64) -> Self {
        Self {
            efficiency: 1.0,
            dark_prob: 0.0,
            misalignment: 0.0,
            gate_window,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let probabilities = [
            ("detector.efficiency", self.efficiency),
            ("detector.dark_prob", self.dark_prob),
            ("detector.misalignment", self.misalignment),
        ];
        for (name, value) in probabilities {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::invalid(
                    name,
                    format!("must lie in [0, 1], got {value}"),
                ));
            }
        }
        Ok(())
    }
}

fn db_to_transmission(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

/// η_T = 10^{−(αL + L_c)/10}.
pub fn transmission_probability(fiber: &FiberParams) -> f64 {
    db_to_transmission(fiber.alpha_db_per_km * fiber.length_km + fiber.receiver_loss_db)
}

/// η_T′ = 10^{−(α(2L + Λ) + L_c)/10}: the link followed by a storage loop of
/// length L + Λ at Bob's station.
pub fn transmission_probability_det(fiber: &FiberParams, storage_loop_km: f64) -> f64 {
    db_to_transmission(
        fiber.alpha_db_per_km * (2.0 * fiber.length_km + storage_loop_km) + fiber.receiver_loss_db,
    )
}

/// n·L/c in ns, rounded to the nearest nanosecond.
pub fn propagation_delay(length_km: f64, refractive_index: f64) -> u64 {
    (propagation_delay_exact(length_km, refractive_index)).round() as u64
}

pub fn propagation_delay_exact(length_km: f64, refractive_index: f64) -> f64 {
    refractive_index * length_km * 1e3 / SPEED_OF_LIGHT * 1e9
}

/// Fiber length light covers in `duration_ns`, km.
pub fn length_for_delay(duration_ns: f64, refractive_index: f64) -> f64 {
    duration_ns * 1e-9 * SPEED_OF_LIGHT / refractive_index / 1e3
}

/// Keeps each photon independently with probability `survival`.
pub fn attenuate<R: Rng + ?Sized>(signal: QubitSignal, survival: f64, rng: &mut R) -> QubitSignal {
    let photon_count = if survival >= 1.0 {
        signal.photon_count
    } else {
        (0..signal.photon_count)
            .filter(|_| rng.random_bool(survival.max(0.0)))
            .count() as u32
    };
    QubitSignal {
        photon_count,
        ..signal
    }
}

/// Sends a pulse through the fiber: per-photon survival with probability η_T,
/// arrival delayed by the propagation time.
pub fn transmit<R: Rng + ?Sized>(
    signal: QubitSignal,
    fiber: &FiberParams,
    rng: &mut R,
) -> QubitSignal {
    let mut out = attenuate(signal, transmission_probability(fiber), rng);
    out.time = signal.time + fiber.propagation_delay();
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detection {
    NoClick,
    Click { bit: bool, dark_only: bool },
}

impl Detection {
    pub fn bit(self) -> Option<bool> {
        match self {
            Detection::Click { bit, .. } => Some(bit),
            Detection::NoClick => None,
        }
    }
}

/// One detector gate. A signal click happens with probability 1 − (1 − η_B)^k
/// and reports the measured bit (flipped with the misalignment probability);
/// a dark count fires independently and, alone, yields a uniformly random bit.
pub fn detect<R: Rng + ?Sized>(
    signal: &QubitSignal,
    basis: Basis,
    det: &DetectorParams,
    rng: &mut R,
) -> Detection {
    let p_signal = 1.0 - (1.0 - det.efficiency).powi(signal.photon_count as i32);
    let signal_click = signal.photon_count > 0 && rng.random_bool(p_signal.clamp(0.0, 1.0));
    let dark_click = rng.random_bool(det.dark_prob);
    if signal_click {
        let measured = measure(signal, basis, rng).expect("non-vacuum signal");
        let flipped = det.misalignment > 0.0 && rng.random_bool(det.misalignment);
        Detection::Click {
            bit: measured ^ flipped,
            dark_only: false,
        }
    } else if dark_click {
        Detection::Click {
            bit: rng.random(),
            dark_only: true,
        }
    } else {
        Detection::NoClick
    }
}

/// A message on the authenticated, error-free classical channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Delivery<T> {
    pub payload: T,
    pub sent_at: u64,
    pub delivered_at: u64,
}

pub fn classical_send<T>(payload: T, send_time: u64, tau: u64) -> Delivery<T> {
    Delivery {
        payload,
        sent_at: send_time,
        delivered_at: send_time + tau,
    }
}
