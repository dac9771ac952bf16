//! Privacy amplification by a seeded random binary Toeplitz matrix.
//!
//! For an `n`-bit input and `m` output bits the matrix is fixed by `m + n − 1`
//! seed bits `s`, with entry `T[j][i] = s[j − i + n − 1]`. The product is the
//! middle of the convolution `s * x`, taken mod 2; large inputs go through an
//! FFT, small ones are multiplied directly.

use rand::Rng;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::{rng_stream, Error, Result};

/// Above this many matrix entries the FFT route is used.
const DIRECT_LIMIT: usize = 1 << 20;

pub(crate) fn seed_bits(seed: u64, len: usize) -> Vec<bool> {
    let mut rng = rng_stream(seed, 0x7065);
    (0..len).map(|_| rng.random()).collect()
}

/// Compresses `key` to `final_length` bits with the Toeplitz hash selected by `seed`.
pub fn privacy_amplify(key: &[bool], final_length: usize, seed: u64) -> Result<Vec<bool>> {
    let n = key.len();
    if final_length > n {
        return Err(Error::OutputTooLong {
            requested: final_length,
            available: n,
        });
    }
    if final_length == 0 {
        return Ok(Vec::new());
    }
    let s = seed_bits(seed, final_length + n - 1);
    if final_length.saturating_mul(n) <= DIRECT_LIMIT {
        Ok(multiply_direct(&s, key, final_length))
    } else {
        Ok(multiply_fft(&s, key, final_length))
    }
}

fn multiply_direct(s: &[bool], x: &[bool], m: usize) -> Vec<bool> {
    let n = x.len();
    let ones: Vec<usize> = (0..n).filter(|&i| x[i]).collect();
    (0..m)
        .map(|j| ones.iter().fold(false, |acc, &i| acc ^ s[j + n - 1 - i]))
        .collect()
}

fn multiply_fft(s: &[bool], x: &[bool], m: usize) -> Vec<bool> {
    let n = x.len();
    let size = (s.len() + n - 1).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let forward = planner.plan_fft_forward(size);
    let inverse = planner.plan_fft_inverse(size);

    let as_signal = |bits: &[bool]| {
        let mut buf = vec![Complex::new(0.0, 0.0); size];
        for (slot, &b) in buf.iter_mut().zip(bits) {
            slot.re = f64::from(u8::from(b));
        }
        buf
    };
    let mut a = as_signal(s);
    let mut b = as_signal(x);
    forward.process(&mut a);
    forward.process(&mut b);
    for (u, v) in a.iter_mut().zip(&b) {
        *u *= v;
    }
    inverse.process(&mut a);

    let scale = size as f64;
    (0..m)
        .map(|j| {
            let value = a[j + n - 1].re / scale;
            let count = value.round();
            debug_assert!((value - count).abs() < 0.25, "FFT rounding drift {value}");
            (count as u64) & 1 == 1
        })
        .collect()
}
