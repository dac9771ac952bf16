//! Sifting, check-bit selection and the three-way verification.

use rand::seq::index;
use rand::Rng;

use super::{AbortReason, PulseRecord, SessionTranscript, Variant};
use crate::postprocess::hamming_distance;
use crate::timing::{verify_arrival, TimingParams};
use crate::{Error, Result};

/// Clicked pulses kept after basis reconciliation, in pulse order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SiftedKey {
    pub indices: Vec<usize>,
    pub alice: Vec<bool>,
    pub bob: Vec<bool>,
}

impl SiftedKey {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// BB84 keeps clicks measured in Alice's basis; the deterministic variants
/// keep every click.
pub fn sift(records: &[PulseRecord], variant: Variant) -> SiftedKey {
    let mut out = SiftedKey::default();
    for r in records {
        let Some(bob_bit) = r.bob_bit.filter(|_| r.bob_click) else {
            continue;
        };
        let keep = variant.is_deterministic() || r.bob_measure_basis == Some(r.alice_basis);
        if keep {
            out.indices.push(r.index);
            out.alice.push(r.alice_bit);
            out.bob.push(bob_bit);
        }
    }
    out
}

/// Picks `check_count` distinct positions of the sifted key uniformly at
/// random, ascending. At least twice that many sifted bits are required.
pub fn select_check_bits<R: Rng + ?Sized>(
    sifted_len: usize,
    check_count: usize,
    rng: &mut R,
) -> std::result::Result<Vec<usize>, AbortReason> {
    if sifted_len < 2 * check_count {
        return Err(AbortReason::InsufficientBits);
    }
    let mut picked = index::sample(rng, sifted_len, check_count).into_vec();
    picked.sort_unstable();
    Ok(picked)
}

pub fn estimate_qber(alice: &[bool], bob: &[bool]) -> Result<f64> {
    if alice.len() != bob.len() {
        return Err(Error::LengthMismatch {
            left: alice.len(),
            right: bob.len(),
        });
    }
    if alice.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(hamming_distance(alice, bob) as f64 / alice.len() as f64)
}

/// Runs, in order, (i) basis-value comparison, (ii) basis arrival-time audit
/// and (iii) the QBER threshold on the checked pulses. The first failure is
/// returned. `timing` is the schedule the variant ran.
pub fn verify_checks(
    transcript: &SessionTranscript,
    timing: &TimingParams,
    qber_abort_threshold: f64,
) -> std::result::Result<(), AbortReason> {
    let checked: Vec<&PulseRecord> = transcript
        .check_indices
        .iter()
        .map(|&i| &transcript.records[i])
        .collect();
    if checked.is_empty() {
        return Err(AbortReason::InsufficientBits);
    }

    if checked
        .iter()
        .any(|r| r.bob_basis_received != Some(r.alice_basis))
    {
        return Err(AbortReason::BasisMismatch);
    }

    let on_time = |r: &&PulseRecord| {
        r.basis_arrival
            .is_some_and(|t| verify_arrival(t, r.emission_time, timing).passed())
    };
    if !checked.iter().all(on_time) {
        return Err(AbortReason::TimingViolation);
    }

    let (alice, bob): (Vec<bool>, Vec<bool>) = checked
        .iter()
        .map(|r| (r.alice_bit, r.bob_bit.unwrap_or(!r.alice_bit)))
        .unzip();
    let qber = estimate_qber(&alice, &bob).map_err(|_| AbortReason::InsufficientBits)?;
    if qber > qber_abort_threshold {
        return Err(AbortReason::QberExceeded);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Basis;
    use crate::rng_stream;
    use crate::timing::expected_arrival;

    fn timing() -> TimingParams {
        TimingParams {
            tau: 1000,
            delta_cap: 100,
            delta: 10,
            delta_prime: 10,
            epsilon: 10,
        }
    }

    fn honest_record(index: usize, bit: bool, basis: Basis) -> PulseRecord {
        let t_q = index as u64 * 200;
        let arrival = expected_arrival(t_q, &timing());
        PulseRecord {
            index,
            alice_bit: bit,
            alice_basis: basis,
            photons_sent: 1,
            emission_time: t_q,
            attacked: false,
            qubit_entry_time: Some(t_q + 1000),
            storage_release_time: Some(t_q + 2100),
            basis_sent_time: Some(t_q + 1100),
            bob_basis_received: Some(basis),
            basis_arrival: Some(arrival),
            bob_measure_basis: Some(basis),
            bob_click: true,
            bob_bit: Some(bit),
            measurement_time: Some(arrival + 10),
        }
    }

    fn transcript(records: Vec<PulseRecord>, checks: Vec<usize>) -> SessionTranscript {
        SessionTranscript {
            variant: Variant::DetPractical,
            sifted: sift(&records, Variant::DetPractical),
            records,
            check_indices: checks,
            key_indices: vec![],
            check_qber: None,
            beta_estimate: None,
            abort: None,
            leaked_bits: 0,
            residual_errors: 0,
            final_key_alice: None,
            final_key_bob: None,
        }
    }

    fn honest(n: usize) -> Vec<PulseRecord> {
        let mut rng = rng_stream(1, 0);
        (0..n)
            .map(|i| honest_record(i, rng.random(), Basis::random(&mut rng)))
            .collect()
    }

    #[test]
    fn deterministic_sift_keeps_every_click() {
        let records = honest(1000);
        assert_eq!(sift(&records, Variant::DetPractical).len(), 1000);
    }

    #[test]
    fn bb84_sift_keeps_about_half() {
        let mut rng = rng_stream(2, 0);
        let records: Vec<PulseRecord> = (0..100_000)
            .map(|i| {
                let mut r = honest_record(i, rng.random(), Basis::random(&mut rng));
                r.bob_measure_basis = Some(Basis::random(&mut rng));
                r
            })
            .collect();
        let kept = sift(&records, Variant::Bb84).len() as f64 / 100_000.0;
        assert!((0.4950..=0.5050).contains(&kept), "{kept}");
    }

    #[test]
    fn sift_skips_no_clicks() {
        let mut records = honest(10);
        for r in &mut records {
            r.bob_click = false;
            r.bob_bit = None;
        }
        assert!(sift(&records, Variant::DetPractical).is_empty());
    }

    #[test]
    fn check_selection_cardinality() {
        let mut rng = rng_stream(3, 0);
        let picked = select_check_bits(4000, 2000, &mut rng).unwrap();
        assert_eq!(picked.len(), 2000);
        assert!(picked.windows(2).all(|w| w[0] < w[1]));
        assert!(picked.iter().all(|&i| i < 4000));
        assert_eq!(
            select_check_bits(3999, 2000, &mut rng),
            Err(AbortReason::InsufficientBits)
        );
    }

    #[test]
    fn check_selection_depends_on_seed() {
        let a = select_check_bits(4000, 2000, &mut rng_stream(10, 0)).unwrap();
        let b = select_check_bits(4000, 2000, &mut rng_stream(11, 0)).unwrap();
        assert_ne!(a, b);
    }

    #[test]
    fn qber_estimates() {
        let a = vec![true, false, true, true];
        assert_eq!(estimate_qber(&a, &a).unwrap(), 0.0);
        let c: Vec<bool> = a.iter().map(|b| !b).collect();
        assert_eq!(estimate_qber(&a, &c).unwrap(), 1.0);
        let mut rng = rng_stream(4, 0);
        let x: Vec<bool> = (0..2000).map(|_| rng.random()).collect();
        let mut y = x.clone();
        for i in 0..50 {
            y[i * 40] = !y[i * 40];
        }
        assert_eq!(estimate_qber(&x, &y).unwrap(), 0.025);
        assert_eq!(estimate_qber(&[], &[]), Err(Error::EmptySample));
    }

    #[test]
    fn honest_checks_pass() {
        let t = transcript(honest(100), (0..50).collect());
        assert_eq!(verify_checks(&t, &timing(), 0.11), Ok(()));
    }

    #[test]
    fn flipped_basis_aborts_first() {
        let mut records = honest(100);
        records[7].bob_basis_received = Some(records[7].alice_basis.conjugate());
        // Also late and wrong: basis mismatch still wins.
        records[8].basis_arrival = records[8].basis_arrival.map(|t| t + 100);
        let t = transcript(records, (0..50).collect());
        assert_eq!(
            verify_checks(&t, &timing(), 0.11),
            Err(AbortReason::BasisMismatch)
        );
    }

    #[test]
    fn late_basis_aborts() {
        let mut records = honest(100);
        records[9].basis_arrival = records[9].basis_arrival.map(|t| t + 11);
        let t = transcript(records, (0..50).collect());
        assert_eq!(
            verify_checks(&t, &timing(), 0.11),
            Err(AbortReason::TimingViolation)
        );
    }

    #[test]
    fn unchecked_pulses_are_not_audited() {
        let mut records = honest(100);
        records[90].basis_arrival = records[90].basis_arrival.map(|t| t + 500);
        let t = transcript(records, (0..50).collect());
        assert_eq!(verify_checks(&t, &timing(), 0.11), Ok(()));
    }

    #[test]
    fn noisy_checks_abort() {
        let mut records = honest(400);
        for r in records.iter_mut().step_by(4) {
            r.bob_bit = r.bob_bit.map(|b| !b);
        }
        let t = transcript(records, (0..400).collect());
        assert_eq!(
            verify_checks(&t, &timing(), 0.11),
            Err(AbortReason::QberExceeded)
        );
    }
}
