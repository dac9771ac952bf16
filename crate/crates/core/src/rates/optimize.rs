//! Mean photon number optimization.

use super::{evaluate, RateParams, RatePoint, RateVariant};
use crate::{Error, Result};

pub const MU_MIN: f64 = 1e-4;
pub const MU_MAX: f64 = 1.0;

const GRID_POINTS: usize = 200;
const MU_TOLERANCE: f64 = 1e-7;

fn rate_at(p: &RateParams, variant: RateVariant, mu: f64) -> Result<f64> {
    Ok(evaluate(&p.with_mu(mu), variant)?.rate)
}

/// Maximizes the rate over μ ∈ [10⁻⁴, 1] at distance `length_km`.
///
/// A log-spaced grid locates the best bracket (the positive region shrinks
/// towards small μ at long range), then golden-section search refines it.
pub fn optimize_mu(p: &RateParams, length_km: f64, variant: RateVariant) -> Result<RatePoint> {
    let p = p.with_length(length_km);
    let ratio = (MU_MAX / MU_MIN).ln() / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS)
        .map(|i| (MU_MIN.ln() + ratio * i as f64).exp().min(MU_MAX))
        .collect();
    let mut best = 0;
    let mut best_rate = f64::NEG_INFINITY;
    for (i, &mu) in grid.iter().enumerate() {
        let r = rate_at(&p, variant, mu)?;
        if r > best_rate {
            best_rate = r;
            best = i;
        }
    }
    if best_rate <= 0.0 {
        return Err(Error::NoSecureRate {
            distance_km: length_km,
        });
    }

    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(GRID_POINTS - 1)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = rate_at(&p, variant, c)?;
    let mut fd = rate_at(&p, variant, d)?;
    while b - a > MU_TOLERANCE {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = rate_at(&p, variant, c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = rate_at(&p, variant, d)?;
        }
    }
    let mut mu_opt = 0.5 * (a + b);
    let mut rate = rate_at(&p, variant, mu_opt)?;
    // Keep the grid point if refinement landed somewhere worse.
    if rate < best_rate {
        mu_opt = grid[best];
        rate = best_rate;
    }
    Ok(RatePoint {
        variant,
        distance_km: length_km,
        mu_opt,
        rate,
    })
}
