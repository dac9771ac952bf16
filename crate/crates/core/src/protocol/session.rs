//! The session event loop.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::Rng;

use super::checks::{estimate_qber, select_check_bits, sift, verify_checks, SiftedKey};
use super::{AbortReason, PulseRecord, SessionConfig, SessionTranscript, Variant};
use crate::adversary::{delay_for_basis, intercept_resend, AttackKind, AttackStrategy};
use crate::channel::{
    attenuate, classical_send, detect, length_for_delay, transmit, DetectorParams, FiberParams,
};
use crate::model::{Basis, QubitSignal, SourceModel};
use crate::postprocess::{error_correct, final_key_length, hamming_distance, privacy_amplify};
use crate::timing::{basis_send_time, TimingParams};
use crate::{rng_stream, Error, Result, SimRng};

// Event kinds, in tie-break order after time and pulse index.
const EMIT: u8 = 0;
const QUBIT_ENTER: u8 = 1;
const RECEIPT: u8 = 2;
const BASIS_SEND: u8 = 3;
const BASIS_ARRIVE: u8 = 4;
const MEASURE: u8 = 5;

struct Streams {
    alice: SimRng,
    source: SimRng,
    channel: SimRng,
    eve: SimRng,
    bob: SimRng,
    post: SimRng,
}

impl Streams {
    fn new(seed: u64) -> Self {
        Self {
            alice: rng_stream(seed, 1),
            source: rng_stream(seed, 2),
            channel: rng_stream(seed, 3),
            eve: rng_stream(seed, 4),
            bob: rng_stream(seed, 5),
            post: rng_stream(seed, 6),
        }
    }
}

/// Per-pulse physical state that does not belong in the transcript.
#[derive(Clone, Copy)]
struct InFlight {
    signal: QubitSignal,
    /// When the photons reach Bob's detector.
    at_detector: u64,
    /// Extra delay Eve imposes on the basis bit to keep the pulse in Bob's gate.
    basis_lateness: u64,
}

struct Session<'a> {
    cfg: &'a SessionConfig,
    fiber: &'a FiberParams,
    det: &'a DetectorParams,
    /// The schedule Alice runs (Δ = τ for the basic variant).
    timing: TimingParams,
    source: &'a SourceModel,
    attack: &'a AttackStrategy,
    /// Physical one-way delay of both channels.
    link_delay: u64,
    /// Loss in Bob's storage loop, as a survival probability.
    memory_survival: f64,
    rng: Streams,
    queue: BinaryHeap<Reverse<(u64, usize, u8)>>,
    records: Vec<PulseRecord>,
    flight: Vec<InFlight>,
}

/// Runs one complete session and returns its transcript. Protocol aborts are
/// reported in [`SessionTranscript::abort`]; `Err` means invalid parameters.
pub fn run_session(
    cfg: &SessionConfig,
    fiber: &FiberParams,
    det: &DetectorParams,
    timing: &TimingParams,
    source: &SourceModel,
    attack: &AttackStrategy,
    seed: u64,
) -> Result<SessionTranscript> {
    cfg.validate()?;
    fiber.validate()?;
    det.validate()?;
    timing.validate()?;
    source.validate()?;
    attack.validate()?;
    if cfg.variant == Variant::DetBasic && attack.kind == AttackKind::DelayForBasis {
        return Err(Error::Unsupported(
            "delay-for-basis needs a basis schedule independent of Bob's receipt".into(),
        ));
    }

    let effective = cfg.variant.effective_timing(timing);
    let memory_km = match cfg.variant {
        Variant::Bb84 => 0.0,
        Variant::DetBasic => 2.0 * fiber.length_km,
        Variant::DetPractical => {
            fiber.length_km + length_for_delay(timing.delta_cap as f64, fiber.refractive_index)
        }
    };
    let memory_survival = 10f64.powf(-fiber.alpha_db_per_km * memory_km / 10.0);

    let mut session = Session {
        cfg,
        fiber,
        det,
        timing: effective,
        source,
        attack,
        link_delay: fiber.propagation_delay(),
        memory_survival,
        rng: Streams::new(seed),
        queue: BinaryHeap::new(),
        records: Vec::with_capacity(cfg.pulse_count()),
        flight: Vec::with_capacity(cfg.pulse_count()),
    };
    session.run_quantum_phase();
    Ok(session.finish())
}

impl Session<'_> {
    fn push(&mut self, time: u64, index: usize, kind: u8) {
        self.queue.push(Reverse((time, index, kind)));
    }

    fn run_quantum_phase(&mut self) {
        if self.cfg.pulse_count() > 0 {
            self.push(0, 0, EMIT);
        }
        while let Some(Reverse((time, index, kind))) = self.queue.pop() {
            match kind {
                EMIT => self.emit(time, index),
                QUBIT_ENTER => self.qubit_enter(time, index),
                RECEIPT | BASIS_SEND => self.send_basis(time, index),
                BASIS_ARRIVE => self.basis_arrive(time, index),
                MEASURE => self.measure(time, index),
                _ => unreachable!("unknown event kind {kind}"),
            }
        }
    }

    /// Alice prepares and launches pulse `index`.
    fn emit(&mut self, t_q: u64, index: usize) {
        debug_assert_eq!(index, self.records.len());
        let bit: bool = self.rng.alice.random();
        let basis = Basis::random(&mut self.rng.alice);
        let photons = self.source.sample_photon_number(&mut self.rng.source);
        let sent = QubitSignal::new(bit, basis, photons, t_q);

        let mut arriving = transmit(sent, self.fiber, &mut self.rng.channel);
        arriving.time = t_q + self.link_delay;
        let mut basis_lateness = 0;
        let attacked = self.attack.targets(&arriving, &mut self.rng.eve);
        if attacked {
            match self.attack.kind {
                AttackKind::InterceptResend => {
                    arriving = intercept_resend(arriving, &mut self.rng.eve).resent;
                }
                AttackKind::DelayForBasis => {
                    let honest_entry = arriving.time;
                    let disclosure = basis_send_time(t_q, &self.timing);
                    arriving = delay_for_basis(
                        arriving,
                        basis,
                        disclosure,
                        self.attack.eve_to_bob_delay,
                        &mut self.rng.eve,
                    )
                    .resent;
                    basis_lateness = arriving.time - honest_entry;
                }
                AttackKind::None => {}
            }
        }

        self.records.push(PulseRecord {
            index,
            alice_bit: bit,
            alice_basis: basis,
            photons_sent: photons,
            emission_time: t_q,
            attacked,
            qubit_entry_time: None,
            storage_release_time: None,
            basis_sent_time: None,
            bob_basis_received: None,
            basis_arrival: None,
            bob_measure_basis: None,
            bob_click: false,
            bob_bit: None,
            measurement_time: None,
        });
        self.flight.push(InFlight {
            signal: arriving,
            at_detector: arriving.time,
            basis_lateness,
        });

        self.push(arriving.time, index, QUBIT_ENTER);
        if self.cfg.variant != Variant::DetBasic {
            self.push(basis_send_time(t_q, &self.timing), index, BASIS_SEND);
        }
        if index + 1 < self.cfg.pulse_count() {
            self.push(t_q + self.cfg.pulse_period, index + 1, EMIT);
        }
    }

    fn qubit_enter(&mut self, now: u64, index: usize) {
        self.records[index].qubit_entry_time = Some(now);
        match self.cfg.variant {
            Variant::Bb84 => {
                // Bob's gate opens when the pulse is due; he picks his basis by coin.
                let gate = self.records[index].emission_time + self.timing.tau;
                self.records[index].bob_measure_basis = Some(Basis::random(&mut self.rng.bob));
                self.push(gate.max(now), index, MEASURE);
            }
            Variant::DetBasic | Variant::DetPractical => {
                let release = now + self.timing.storage_duration();
                let flight = &mut self.flight[index];
                flight.signal =
                    attenuate(flight.signal, self.memory_survival, &mut self.rng.channel);
                // Fixed optical delay aligns the released photon with the gate at T_i + δ′.
                flight.at_detector = release + self.timing.delta + self.timing.delta_prime;
                self.records[index].storage_release_time = Some(release);
                if self.cfg.variant == Variant::DetBasic {
                    self.push(now + self.link_delay, index, RECEIPT);
                }
            }
        }
    }

    /// Alice puts b_i on the classical channel: on schedule, or on Bob's
    /// receipt in the basic variant.
    fn send_basis(&mut self, now: u64, index: usize) {
        let record = &mut self.records[index];
        record.basis_sent_time = Some(now);
        let delivery = classical_send(record.alice_basis, now, self.link_delay);
        let arrival = delivery.delivered_at + self.timing.delta + self.flight[index].basis_lateness;
        self.push(arrival, index, BASIS_ARRIVE);
    }

    /// Bob logs B_i and T_i and schedules his measurement.
    fn basis_arrive(&mut self, now: u64, index: usize) {
        let basis = self.records[index].alice_basis;
        let record = &mut self.records[index];
        record.bob_basis_received = Some(basis);
        record.basis_arrival = Some(now);
        if self.cfg.variant.is_deterministic() {
            record.bob_measure_basis = Some(basis);
            self.push(now + self.timing.delta_prime, index, MEASURE);
        }
    }

    fn measure(&mut self, gate: u64, index: usize) {
        let flight = self.flight[index];
        let basis = self.records[index]
            .bob_measure_basis
            .expect("measurement basis fixed before the gate");
        let mut signal = flight.signal;
        if flight.at_detector.abs_diff(gate) > self.det.gate_window {
            signal.photon_count = 0;
        }
        let outcome = detect(&signal, basis, self.det, &mut self.rng.bob);
        let record = &mut self.records[index];
        record.measurement_time = Some(gate);
        record.bob_bit = outcome.bit();
        record.bob_click = record.bob_bit.is_some();
    }

    /// Loss announcement, check selection, verification,
    /// reconciliation and privacy amplification.
    fn finish(mut self) -> SessionTranscript {
        let sifted = sift(&self.records, self.cfg.variant);
        let mut transcript = SessionTranscript {
            variant: self.cfg.variant,
            records: std::mem::take(&mut self.records),
            sifted,
            check_indices: Vec::new(),
            key_indices: Vec::new(),
            check_qber: None,
            beta_estimate: None,
            abort: None,
            leaked_bits: 0,
            residual_errors: 0,
            final_key_alice: None,
            final_key_bob: None,
        };

        let positions = match select_check_bits(
            transcript.sifted.len(),
            self.cfg.check_count(),
            &mut self.rng.post,
        ) {
            Ok(p) => p,
            Err(reason) => {
                transcript.abort = Some(reason);
                return transcript;
            }
        };
        let (check, key) = split(&transcript.sifted, &positions);
        transcript.check_qber = estimate_qber(&check.alice, &check.bob).ok();
        transcript.check_indices = check.indices;
        transcript.key_indices = key.indices.clone();

        if let Err(reason) = verify_checks(&transcript, &self.timing, self.cfg.qber_abort_threshold)
        {
            transcript.abort = Some(reason);
            return transcript;
        }

        let qber = transcript.check_qber.unwrap_or(0.0);
        let p_exp = transcript.clicks() as f64 / transcript.pulses() as f64;
        let beta = (p_exp - self.source.multiphoton_probability()) / p_exp;
        transcript.beta_estimate = Some(beta);

        let reconciled = error_correct(&key.alice, &key.bob, qber, &mut self.rng.post)
            .expect("sifted halves have equal length");
        transcript.leaked_bits = reconciled.leaked_bits;
        transcript.residual_errors = hamming_distance(&key.alice, &reconciled.corrected);

        let length = match final_key_length(key.len(), qber, beta.min(1.0), self.cfg.f_casc) {
            Ok(n) => n,
            Err(_) => {
                transcript.abort = Some(AbortReason::SecurityMarginExhausted);
                return transcript;
            }
        };
        let hash_seed: u64 = self.rng.post.random();
        transcript.final_key_alice =
            Some(privacy_amplify(&key.alice, length, hash_seed).expect("length <= key"));
        transcript.final_key_bob =
            Some(privacy_amplify(&reconciled.corrected, length, hash_seed).expect("length <= key"));
        transcript
    }
}

/// Splits the sifted key into check and key parts by sorted positions.
fn split(sifted: &SiftedKey, check_positions: &[usize]) -> (SiftedKey, SiftedKey) {
    let mut check = SiftedKey::default();
    let mut key = SiftedKey::default();
    let mut next = check_positions.iter().peekable();
    for pos in 0..sifted.len() {
        let target = if next.peek() == Some(&&pos) {
            next.next();
            &mut check
        } else {
            &mut key
        };
        target.indices.push(sifted.indices[pos]);
        target.alice.push(sifted.alice[pos]);
        target.bob.push(sifted.bob[pos]);
    }
    (check, key)
}
