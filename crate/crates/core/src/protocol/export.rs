//! Line-delimited transcript export.
//!
//! One header line, then one comma-separated line per pulse in index order.
//! Bits are `0`/`1`, bases `Z`/`X`, flags `0`/`1`, times integer nanoseconds,
//! and an absent value is an empty field.

use std::io::{self, Write};

use super::{PulseRecord, SessionTranscript};
use crate::model::Basis;

pub const TRANSCRIPT_HEADER: &str = "index,alice_bit,alice_basis,photons_sent,emission_ns,attacked,qubit_entry_ns,storage_release_ns,basis_sent_ns,basis_received,basis_arrival_ns,bob_basis,click,bob_bit,measurement_ns,role";

fn bit(b: bool) -> char {
    if b {
        '1'
    } else {
        '0'
    }
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn basis(b: Option<Basis>) -> String {
    opt(b.map(Basis::symbol))
}

/// Writes the transcript. The `role` column marks pulses used as check bits
/// (`check`), as key material (`key`), or neither (empty).
pub fn write_transcript<W: Write>(transcript: &SessionTranscript, mut out: W) -> io::Result<()> {
    writeln!(out, "{TRANSCRIPT_HEADER}")?;
    let mut checks = transcript.check_indices.iter().peekable();
    let mut keys = transcript.key_indices.iter().peekable();
    for r in &transcript.records {
        let role = if checks.next_if_eq(&&r.index).is_some() {
            "check"
        } else if keys.next_if_eq(&&r.index).is_some() {
            "key"
        } else {
            ""
        };
        write_record(&mut out, r, role)?;
    }
    out.flush()
}

fn write_record<W: Write>(out: &mut W, r: &PulseRecord, role: &str) -> io::Result<()> {
    writeln!(
        out,
        "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        r.index,
        bit(r.alice_bit),
        r.alice_basis.symbol(),
        r.photons_sent,
        r.emission_time,
        bit(r.attacked),
        opt(r.qubit_entry_time),
        opt(r.storage_release_time),
        opt(r.basis_sent_time),
        basis(r.bob_basis_received),
        opt(r.basis_arrival),
        basis(r.bob_measure_basis),
        bit(r.bob_click),
        opt(r.bob_bit.map(bit)),
        opt(r.measurement_time),
        role,
    )
}
