//! Cascade-style interactive reconciliation.
//!
//! Four passes over the key. Pass one uses contiguous blocks of about 0.73/e
//! bits; every later pass doubles the block size and works on a fresh random
//! permutation. A block whose parities disagree is bisected down to a single
//! bit, and each corrected bit re-opens the blocks that contain it in every
//! pass already run, so errors hidden in pairs are flushed out in cascade.
//! Every parity Alice discloses is counted in `leaked_bits`.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::{Error, Result};

const PASSES: usize = 4;
const FIRST_BLOCK_FACTOR: f64 = 0.73;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reconciliation {
    pub corrected: Vec<bool>,
    pub leaked_bits: usize,
    /// Number of bits Bob flipped.
    pub flips: usize,
}

struct Pass {
    block: usize,
    /// order[position] = key index
    order: Vec<usize>,
    /// position_of[key index] = position
    position_of: Vec<usize>,
    alice_parity: Vec<bool>,
}

impl Pass {
    fn new(order: Vec<usize>, block: usize, alice: &[bool]) -> Self {
        let mut position_of = vec![0; order.len()];
        for (pos, &idx) in order.iter().enumerate() {
            position_of[idx] = pos;
        }
        let alice_parity = order
            .chunks(block)
            .map(|chunk| parity(alice, chunk))
            .collect();
        Self {
            block,
            order,
            position_of,
            alice_parity,
        }
    }

    fn block_of(&self, idx: usize) -> usize {
        self.position_of[idx] / self.block
    }

    fn members(&self, block: usize) -> &[usize] {
        let start = block * self.block;
        let end = (start + self.block).min(self.order.len());
        &self.order[start..end]
    }
}

fn parity(key: &[bool], indices: &[usize]) -> bool {
    indices.iter().fold(false, |acc, &i| acc ^ key[i])
}

/// Initial block size for an expected error rate `e`.
pub(crate) fn first_block_size(n: usize, e: f64) -> usize {
    if n == 0 {
        return 1;
    }
    if e.is_nan() || e <= 0.0 {
        return n;
    }
    ((FIRST_BLOCK_FACTOR / e).ceil() as usize).clamp(1, n)
}

/// Bisects a block whose parity is known to disagree; returns the key index of
/// the located error and the number of parities disclosed on the way.
fn bisect(alice: &[bool], bob: &[bool], members: &[usize]) -> (usize, usize) {
    let mut span = members;
    let mut leaked = 0;
    while span.len() > 1 {
        let (left, right) = span.split_at(span.len() / 2);
        leaked += 1;
        span = if parity(alice, left) != parity(bob, left) {
            left
        } else {
            right
        };
    }
    (span[0], leaked)
}

/// Reconciles Bob's key to Alice's. `estimated_qber` sets the block schedule;
/// `rng` drives the permutations, which are public.
pub fn error_correct<R: Rng + ?Sized>(
    alice: &[bool],
    bob: &[bool],
    estimated_qber: f64,
    rng: &mut R,
) -> Result<Reconciliation> {
    if alice.len() != bob.len() {
        return Err(Error::LengthMismatch {
            left: alice.len(),
            right: bob.len(),
        });
    }
    let n = alice.len();
    let mut bob = bob.to_vec();
    let mut leaked = 0;
    let mut flips = 0;
    if n == 0 {
        return Ok(Reconciliation {
            corrected: bob,
            leaked_bits: 0,
            flips: 0,
        });
    }

    let mut passes: Vec<Pass> = Vec::with_capacity(PASSES);
    let mut block = first_block_size(n, estimated_qber);
    for pass_index in 0..PASSES {
        let mut order: Vec<usize> = (0..n).collect();
        if pass_index > 0 {
            order.shuffle(rng);
        }
        let pass = Pass::new(order, block, alice);
        leaked += pass.alice_parity.len();
        passes.push(pass);

        let current = passes.len() - 1;
        let mut pending: Vec<(usize, usize)> = (0..passes[current].alice_parity.len())
            .map(|b| (current, b))
            .collect();
        pending.reverse();
        while let Some((p, b)) = pending.pop() {
            let pass = &passes[p];
            let members = pass.members(b);
            if parity(&bob, members) == pass.alice_parity[b] {
                continue;
            }
            let (idx, cost) = bisect(alice, &bob, members);
            leaked += cost;
            bob[idx] = !bob[idx];
            flips += 1;
            for (q, other) in passes.iter().enumerate() {
                if q != p {
                    pending.push((q, other.block_of(idx)));
                }
            }
        }
        block = (block * 2).min(n);
    }

    Ok(Reconciliation {
        corrected: bob,
        leaked_bits: leaked,
        flips,
    })
}
