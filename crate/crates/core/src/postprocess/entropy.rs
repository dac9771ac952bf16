use crate::{Error, Result};

fn check_fraction(function: &'static str, e: f64) -> Result<()> {
    if (0.0..=1.0).contains(&e) {
        Ok(())
    } else {
        Err(Error::Domain { function, value: e })
    }
}

/// Shannon entropy of a binary source, h(0) = h(1) = 0.
pub fn binary_entropy(e: f64) -> Result<f64> {
    check_fraction("binary_entropy", e)?;
    if e == 0.0 || e == 1.0 {
        return Ok(0.0);
    }
    Ok(-e * e.log2() - (1.0 - e) * (1.0 - e).log2())
}

/// Fraction of the corrected key sacrificed to privacy amplification when
/// only single-photon pulses are considered: log₂(1 + 4e − 4e²) up to e = ½,
/// then 1.
pub fn tau_fraction(e: f64) -> Result<f64> {
    check_fraction("tau_fraction", e)?;
    if e > 0.5 {
        return Ok(1.0);
    }
    Ok((4.0 * e * (1.0 - e)).ln_1p() / std::f64::consts::LN_2)
}

/// Number of secret bits left from `n` corrected bits:
/// ⌊n · max(0, β[1 − τ(e/β)] − f·h(e))⌋.
///
/// An error rate above the single-photon fraction β leaves no margin at all and
/// is reported as [`Error::SecurityMarginExhausted`].
pub fn final_key_length(n: usize, e: f64, beta: f64, f_casc: f64) -> Result<usize> {
    check_fraction("final_key_length", e)?;
    if beta.is_nan() || beta > 1.0 {
        return Err(Error::invalid(
            "beta",
            format!("must lie in (0, 1], got {beta}"),
        ));
    }
    if beta <= 0.0 || e > beta {
        return Err(Error::SecurityMarginExhausted { qber: e, beta });
    }
    let gain = beta * (1.0 - tau_fraction(e / beta)?) - f_casc * binary_entropy(e)?;
    Ok((n as f64 * gain.max(0.0)).floor() as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn entropy_spot_values() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.5).unwrap() - 1.0).abs() < 1e-15);
        // high-precision value 0.499915958164528
        assert!((binary_entropy(0.11).unwrap() - 0.499_915_958_164_528).abs() < 1e-13);
        assert!(binary_entropy(-0.01).is_err());
        assert!(binary_entropy(1.01).is_err());
    }

    #[test]
    fn tau_spot_values() {
        assert_eq!(tau_fraction(0.0).unwrap(), 0.0);
        assert!((tau_fraction(0.5).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(tau_fraction(0.75).unwrap(), 1.0);
        // log2(1.36) = 0.443606651475615
        assert!((tau_fraction(0.1).unwrap() - 0.443_606_651_475_615).abs() < 1e-13);
        assert!(tau_fraction(1.5).is_err());
    }

    #[test]
    fn key_length_examples() {
        assert_eq!(final_key_length(1000, 0.0, 1.0, 1.0).unwrap(), 1000);
        for beta in [0.5, 0.75, 1.0] {
            assert_eq!(final_key_length(1000, 0.5, beta, 1.0).unwrap(), 0);
        }
        // mpmath: 1000 * (0.9 * (1 - tau(0.03/0.9)) - h(0.03)) = 548.19499616880792
        assert_eq!(final_key_length(1000, 0.03, 0.9, 1.0).unwrap(), 548);
    }

    #[test]
    fn key_length_rejects_exhausted_margin() {
        assert!(matches!(
            final_key_length(1000, 0.2, 0.1, 1.0),
            Err(Error::SecurityMarginExhausted { .. })
        ));
        assert!(matches!(
            final_key_length(1000, 0.0, -0.5, 1.0),
            Err(Error::SecurityMarginExhausted { .. })
        ));
        assert!(final_key_length(1000, 0.0, 1.5, 1.0).is_err());
    }

    #[test]
    fn key_length_grid_monotonicity() {
        let es: Vec<f64> = (0..=50).map(|i| i as f64 * 0.005).collect();
        let betas: Vec<f64> = (1..=40).map(|i| 0.25 + i as f64 * 0.01875).collect();
        for &beta in &betas {
            let mut prev = usize::MAX;
            for &e in es.iter().filter(|&&e| e <= beta) {
                let len = final_key_length(100_000, e, beta, 1.0).unwrap();
                assert!(len <= prev, "not non-increasing in e at beta={beta}, e={e}");
                prev = len;
            }
        }
        for &e in &es {
            let mut prev = 0;
            for &beta in betas.iter().filter(|&&b| b >= e) {
                let len = final_key_length(100_000, e, beta, 1.0).unwrap();
                assert!(
                    len >= prev,
                    "not non-decreasing in beta at e={e}, beta={beta}"
                );
                prev = len;
            }
        }
    }

    proptest! {
        #[test]
        fn entropy_is_symmetric(e in 0.0f64..=1.0) {
            prop_assert!((binary_entropy(e).unwrap() - binary_entropy(1.0 - e).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn tau_is_bounded_monotone_continuous(a in 0.0f64..=1.0, b in 0.0f64..=1.0) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (tl, th) = (tau_fraction(lo).unwrap(), tau_fraction(hi).unwrap());
            prop_assert!((0.0..=1.0).contains(&tl) && (0.0..=1.0).contains(&th));
            prop_assert!(tl <= th + 1e-15);
            // Lipschitz near the kink at 1/2: slope of log2(1+4e-4e^2) is at most 4/ln 2.
            prop_assert!(th - tl <= (hi - lo) * 4.0 / std::f64::consts::LN_2 + 1e-12);
        }
    }
}
