//! Closed-form secure key rates per pulse.
//!
//! Both protocols share the bracket β[1 − τ(e/β)] − f·h(e). BB84 multiplies it
//! by ½·p_exp with the one-way link transmission η_T; the deterministic
//! protocol multiplies by p_exp with η_T′, which adds the return path and the
//! storage loop at Bob's station.

mod formulas;
mod optimize;
mod sweep;

pub use formulas::{beta, p_exp, p_signal, qber_model};
pub use optimize::{optimize_mu, MU_MAX, MU_MIN};
pub use sweep::{
    crossover_distance, distance_grid, optimized_ratio, sweep, write_curves, RateCurve,
    CURVE_HEADER,
};

use std::fmt;
use std::str::FromStr;

use crate::channel::{
    transmission_probability, transmission_probability_det, DetectorParams, FiberParams,
};
use crate::model::{multiphoton_probability, PhotonStatistics};
use crate::postprocess::{binary_entropy, tau_fraction};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum RateVariant {
    Bb84,
    Det,
}

impl RateVariant {
    pub fn name(self) -> &'static str {
        match self {
            RateVariant::Bb84 => "bb84",
            RateVariant::Det => "det",
        }
    }

    /// ½ from basis reconciliation in BB84, 1 when nothing is discarded.
    pub fn sifting_coefficient(self) -> f64 {
        match self {
            RateVariant::Bb84 => 0.5,
            RateVariant::Det => 1.0,
        }
    }
}

impl fmt::Display for RateVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RateVariant {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "bb84" => Ok(RateVariant::Bb84),
            "det" => Ok(RateVariant::Det),
            other => Err(format!("unknown rate variant `{other}`")),
        }
    }
}

/// How Bob's quantum memory is modelled in the deterministic rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DetMemory {
    /// Fiber loop of length L + Λ, so photons cross 2L + Λ of fiber.
    FiberLoop,
    /// Lossless memory: η_T′ ≡ η_T.
    Ideal,
}

impl DetMemory {
    pub fn name(self) -> &'static str {
        match self {
            DetMemory::FiberLoop => "fiber_loop",
            DetMemory::Ideal => "ideal",
        }
    }
}

impl FromStr for DetMemory {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "fiber_loop" => Ok(DetMemory::FiberLoop),
            "ideal" => Ok(DetMemory::Ideal),
            other => Err(format!("unknown memory model `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateParams {
    pub mu: f64,
    pub fiber: FiberParams,
    /// `misalignment` doubles as the intrinsic error e_det.
    pub detector: DetectorParams,
    /// Λ, the extra loop length covering Δ, km.
    pub storage_loop_km: f64,
    pub f_casc: f64,
    pub statistics: PhotonStatistics,
    pub det_memory: DetMemory,
}

impl RateParams {
    pub fn validate(&self) -> Result<()> {
        self.fiber.validate()?;
        self.detector.validate()?;
        if !(self.mu.is_finite() && self.mu >= 0.0) {
            return Err(Error::invalid(
                "source.mu",
                format!("must be >= 0, got {}", self.mu),
            ));
        }
        if self.detector.misalignment >= 0.5 {
            return Err(Error::invalid(
                "detector.misalignment",
                format!("must lie in [0, 0.5), got {}", self.detector.misalignment),
            ));
        }
        if !(self.storage_loop_km.is_finite() && self.storage_loop_km >= 0.0) {
            return Err(Error::invalid(
                "rate.storage_loop_km",
                format!("must be >= 0, got {}", self.storage_loop_km),
            ));
        }
        if !(self.f_casc.is_finite() && self.f_casc >= 0.0) {
            return Err(Error::invalid(
                "rate.f_casc",
                format!("must be >= 0, got {}", self.f_casc),
            ));
        }
        Ok(())
    }

    pub fn with_mu(self, mu: f64) -> Self {
        Self { mu, ..self }
    }

    pub fn with_length(self, length_km: f64) -> Self {
        Self {
            fiber: self.fiber.with_length(length_km),
            ..self
        }
    }

    pub fn multiphoton_probability(&self) -> f64 {
        match self.statistics {
            PhotonStatistics::Poisson => multiphoton_probability(self.mu),
            PhotonStatistics::SinglePhoton => 0.0,
        }
    }

    /// Photon survival probability from Alice to Bob's detector.
    pub fn transmission(&self, variant: RateVariant) -> f64 {
        match (variant, self.det_memory) {
            (RateVariant::Det, DetMemory::FiberLoop) => {
                transmission_probability_det(&self.fiber, self.storage_loop_km)
            }
            _ => transmission_probability(&self.fiber),
        }
    }
}

/// A rate together with the quantities it was computed from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEvaluation {
    pub rate: f64,
    pub p_exp: f64,
    pub qber: f64,
    pub beta: f64,
    /// Set when β ≤ 0, e > β or the bracket is not positive; `rate` is 0.
    pub insecure: bool,
}

pub fn evaluate(p: &RateParams, variant: RateVariant) -> Result<RateEvaluation> {
    let p_sig = p_signal(p.detector.efficiency, p.transmission(variant), p.mu);
    let p_click = p_exp(p_sig, p.detector.dark_prob);
    let b = beta(p_click, p.multiphoton_probability())?;
    let e = qber_model(p_sig, p.detector.dark_prob, p.detector.misalignment)?;
    let insecure = |beta| RateEvaluation {
        rate: 0.0,
        p_exp: p_click,
        qber: e,
        beta,
        insecure: true,
    };
    if b <= 0.0 || e > b {
        return Ok(insecure(b));
    }
    let bracket = b * (1.0 - tau_fraction(e / b)?) - p.f_casc * binary_entropy(e)?;
    if bracket <= 0.0 {
        return Ok(insecure(b));
    }
    Ok(RateEvaluation {
        rate: variant.sifting_coefficient() * p_click * bracket,
        p_exp: p_click,
        qber: e,
        beta: b,
        insecure: false,
    })
}

/// ½·p_exp·{β[1 − τ(e/β)] − f·h(e)} with η_T, clamped at 0.
pub fn secure_rate_bb84(p: &RateParams) -> Result<RateEvaluation> {
    evaluate(p, RateVariant::Bb84)
}

/// p_exp·{β[1 − τ(e/β)] − f·h(e)} with η_T′, clamped at 0.
pub fn secure_rate_det(p: &RateParams) -> Result<RateEvaluation> {
    evaluate(p, RateVariant::Det)
}

/// One optimized point of a rate curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatePoint {
    pub variant: RateVariant,
    pub distance_km: f64,
    pub mu_opt: f64,
    pub rate: f64,
}
