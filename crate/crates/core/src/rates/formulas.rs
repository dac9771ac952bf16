//! Per-pulse detection probabilities and the single-photon fraction.

use crate::{Error, Result};

/// Probability that a signal photon is detected: 1 − exp(−η_B·η_T·μ).
pub fn p_signal(eta_b: f64, eta_t: f64, mu: f64) -> f64 {
    -(-eta_b * eta_t * mu).exp_m1()
}

/// Total click probability, signal or dark count.
pub fn p_exp(p_sig: f64, p_dark: f64) -> f64 {
    p_sig + p_dark - p_sig * p_dark
}

/// Single-photon fraction β = (p_exp − S_m)/p_exp. Negative values mean the
/// multiphoton pulses alone could explain every click.
pub fn beta(p_exp_val: f64, s_m: f64) -> Result<f64> {
    if p_exp_val.is_nan() || p_exp_val <= 0.0 {
        return Err(Error::Domain {
            function: "beta",
            value: p_exp_val,
        });
    }
    Ok((p_exp_val - s_m) / p_exp_val)
}

/// QBER of the detected pulses: misalignment errors on signal clicks plus
/// random bits from dark counts.
pub fn qber_model(p_sig: f64, p_dark: f64, e_det: f64) -> Result<f64> {
    let total = p_exp(p_sig, p_dark);
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Domain {
            function: "qber_model",
            value: total,
        });
    }
    Ok((e_det * p_sig + 0.5 * p_dark) / total)
}
