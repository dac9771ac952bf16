//! Distance sweeps and the Det/BB84 crossover.

use std::io::{self, Write};

use rayon::prelude::*;

use super::{optimize_mu, RateParams, RatePoint, RateVariant};
use crate::{Error, Result};

pub const CURVE_HEADER: &str = "variant,distance_km,mu_opt,rate,insecure_flag";

#[derive(Debug, Clone, PartialEq)]
pub struct RateCurve {
    pub variant: RateVariant,
    /// Secure points, strictly increasing in distance.
    pub points: Vec<RatePoint>,
    /// Distances with no positive rate for any μ.
    pub omitted: Vec<f64>,
}

/// `lo, lo + step, …` up to and including `hi` (within rounding).
pub fn distance_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && lo >= 0.0) {
        return Err(Error::invalid("sweep", format!("bad range {lo}:{hi}")));
    }
    if !(step.is_finite() && step > 0.0) {
        return Err(Error::invalid(
            "sweep",
            format!("step must be > 0, got {step}"),
        ));
    }
    if hi < lo {
        return Ok(Vec::new());
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| lo + k as f64 * step).collect())
}

/// Optimizes μ independently at every distance. Distances are evaluated in
/// parallel; output order follows `distances`.
pub fn sweep(p: &RateParams, distances: &[f64], variant: RateVariant) -> Result<RateCurve> {
    let results: Vec<Result<RatePoint>> = distances
        .par_iter()
        .map(|&l| optimize_mu(p, l, variant))
        .collect();
    let mut curve = RateCurve {
        variant,
        points: Vec::new(),
        omitted: Vec::new(),
    };
    for (result, &l) in results.into_iter().zip(distances) {
        match result {
            Ok(point) => curve.points.push(point),
            Err(Error::NoSecureRate { .. }) => curve.omitted.push(l),
            Err(e) => return Err(e),
        }
    }
    Ok(curve)
}

/// Writes secure points with `insecure_flag` 0 and omitted distances as rows
/// with an empty `mu_opt`, rate 0 and flag 1, in distance order per curve.
pub fn write_curves<W: Write>(curves: &[RateCurve], mut out: W) -> io::Result<()> {
    writeln!(out, "{CURVE_HEADER}")?;
    for curve in curves {
        let mut points = curve.points.iter().peekable();
        let mut omitted = curve.omitted.iter().peekable();
        loop {
            let take_point = match (points.peek(), omitted.peek()) {
                (Some(p), Some(&&l)) => p.distance_km < l,
                (Some(_), None) => true,
                (None, Some(_)) => false,
                (None, None) => break,
            };
            if take_point {
                let p = points.next().expect("peeked");
                writeln!(
                    out,
                    "{},{:?},{:?},{:?},0",
                    p.variant, p.distance_km, p.mu_opt, p.rate
                )?;
            } else {
                let l = omitted.next().expect("peeked");
                writeln!(out, "{},{:?},,0.0,1", curve.variant, l)?;
            }
        }
    }
    out.flush()
}

/// R_det/R_bb84 with μ optimized separately for each. A distance beyond the
/// reach of one protocol gives 0 or +∞.
pub fn optimized_ratio(p: &RateParams, length_km: f64) -> Result<f64> {
    let rate = |v| match optimize_mu(p, length_km, v) {
        Ok(point) => Ok(point.rate),
        Err(Error::NoSecureRate { .. }) => Ok(0.0),
        Err(e) => Err(e),
    };
    let det = rate(RateVariant::Det)?;
    let bb84 = rate(RateVariant::Bb84)?;
    Ok(match (det > 0.0, bb84 > 0.0) {
        (_, true) => det / bb84,
        (true, false) => f64::INFINITY,
        (false, false) => f64::NAN,
    })
}

/// Bisects the distance where the optimized ratio crosses 1, to 0.01 km.
pub fn crossover_distance(p: &RateParams, low_km: f64, high_km: f64) -> Result<f64> {
    let excess = |l| -> Result<f64> { Ok(optimized_ratio(p, l)? - 1.0) };
    let no_crossover = Error::NoCrossover { low_km, high_km };
    let (mut lo, mut hi) = (low_km, high_km);
    let f_lo = excess(lo)?;
    let f_hi = excess(hi)?;
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(no_crossover);
    }
    while hi - lo > 0.01 {
        let mid = 0.5 * (lo + hi);
        let f = excess(mid)?;
        if f.is_nan() {
            return Err(no_crossover);
        }
        if f > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
