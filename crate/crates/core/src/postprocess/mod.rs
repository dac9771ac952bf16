//! Classical post-processing: entropy bookkeeping, reconciliation and privacy
//! amplification.

mod cascade;
mod entropy;
mod toeplitz;

pub use cascade::{error_correct, Reconciliation};
pub use entropy::{binary_entropy, final_key_length, tau_fraction};
pub use toeplitz::privacy_amplify;

/// Outcome of reconciling and compressing one sifted key pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PostprocResult {
    /// Bob's key after error correction.
    pub corrected_key: Vec<bool>,
    pub leaked_bits: usize,
    pub final_key_alice: Vec<bool>,
    pub final_key_bob: Vec<bool>,
    pub final_length: usize,
}

/// Counts positions where the two strings differ.
pub fn hamming_distance(a: &[bool], b: &[bool]) -> usize {
    a.iter().zip(b).filter(|(x, y)| x != y).count()
}
