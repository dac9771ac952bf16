//! Flat `key=value` configuration.
//!
//! One setting per line, keys prefixed by their section
//! (`fiber.alpha_db_per_km=0.21`). Blank lines and lines starting with `#` are
//! ignored. Unknown keys are rejected; absent keys keep their defaults, which
//! form the reference calibration.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use thiserror::Error;

use crate::adversary::{AttackKind, AttackStrategy};
use crate::channel::{length_for_delay, DetectorParams, FiberParams};
use crate::model::{PhotonStatistics, SourceModel};
use crate::protocol::{SessionConfig, Variant};
use crate::rates::{DetMemory, RateParams};
use crate::timing::TimingParams;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key=value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("unknown configuration key `{0}`")]
    UnknownKey(String),
    #[error("bad value `{value}` for `{key}`: {reason}")]
    BadValue {
        key: String,
        value: String,
        reason: String,
    },
    #[error(transparent)]
    Invalid(#[from] crate::Error),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AppConfig {
    pub fiber: FiberParams,
    pub detector: DetectorParams,
    pub delta_cap_ns: u64,
    pub delta_ns: u64,
    pub delta_prime_ns: u64,
    pub epsilon_ns: u64,
    pub source: SourceModel,
    pub session: SessionConfig,
    pub attack: AttackStrategy,
    pub f_casc: f64,
    /// Λ override; derived from Δ when absent.
    pub storage_loop_km: Option<f64>,
    pub det_memory: DetMemory,
    pub master_seed: u64,
    pub output_dir: PathBuf,
}

impl Default for AppConfig {
    fn default() -> Self {
        Self {
            fiber: FiberParams {
                alpha_db_per_km: 0.21,
                length_km: 2.0,
                receiver_loss_db: 1.4,
                refractive_index: 1.468,
            },
            detector: DetectorParams {
                efficiency: 0.1,
                dark_prob: 8.5e-7,
                misalignment: 0.033,
                gate_window: 10,
            },
            delta_cap_ns: 100,
            delta_ns: 20,
            delta_prime_ns: 30,
            epsilon_ns: 10,
            source: SourceModel {
                mu: 0.04,
                statistics: PhotonStatistics::Poisson,
            },
            session: SessionConfig::default(),
            attack: AttackStrategy::none(),
            f_casc: 1.0,
            storage_loop_km: None,
            det_memory: DetMemory::FiberLoop,
            master_seed: 1,
            output_dir: PathBuf::from("out"),
        }
    }
}

fn statistics_name(s: PhotonStatistics) -> &'static str {
    match s {
        PhotonStatistics::Poisson => "poisson",
        PhotonStatistics::SinglePhoton => "single_photon",
    }
}

fn attack_name(k: AttackKind) -> &'static str {
    match k {
        AttackKind::None => "none",
        AttackKind::InterceptResend => "intercept_resend",
        AttackKind::DelayForBasis => "delay_for_basis",
    }
}

pub fn parse_attack_kind(s: &str) -> Result<AttackKind, String> {
    match s {
        "none" => Ok(AttackKind::None),
        "intercept_resend" | "ir" => Ok(AttackKind::InterceptResend),
        "delay_for_basis" | "delay" => Ok(AttackKind::DelayForBasis),
        other => Err(format!("unknown attack `{other}`")),
    }
}

fn parse_statistics(s: &str) -> Result<PhotonStatistics, String> {
    match s {
        "poisson" => Ok(PhotonStatistics::Poisson),
        "single_photon" => Ok(PhotonStatistics::SinglePhoton),
        other => Err(format!("unknown photon statistics `{other}`")),
    }
}

fn value<T>(key: &str, raw: &str) -> Result<T, ConfigError>
where
    T: FromStr,
    T::Err: ToString,
{
    raw.parse().map_err(|e: T::Err| ConfigError::BadValue {
        key: key.to_string(),
        value: raw.to_string(),
        reason: e.to_string(),
    })
}

fn named<T>(
    key: &str,
    raw: &str,
    parse: impl Fn(&str) -> Result<T, String>,
) -> Result<T, ConfigError> {
    parse(raw).map_err(|reason| ConfigError::BadValue {
        key: key.to_string(),
        value: raw.to_string(),
        reason,
    })
}

impl AppConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = AppConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, raw)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    text: line.to_string(),
                });
            };
            cfg.set(key.trim(), raw.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    /// Applies one setting without validating the whole record.
    pub fn set(&mut self, key: &str, raw: &str) -> Result<(), ConfigError> {
        match key {
            "fiber.alpha_db_per_km" => self.fiber.alpha_db_per_km = value(key, raw)?,
            "fiber.length_km" => self.fiber.length_km = value(key, raw)?,
            "fiber.receiver_loss_db" => self.fiber.receiver_loss_db = value(key, raw)?,
            "fiber.refractive_index" => self.fiber.refractive_index = value(key, raw)?,
            "detector.efficiency" => self.detector.efficiency = value(key, raw)?,
            "detector.dark_prob" => self.detector.dark_prob = value(key, raw)?,
            "detector.misalignment" => self.detector.misalignment = value(key, raw)?,
            "timing.delta_cap_ns" => self.delta_cap_ns = value(key, raw)?,
            "timing.delta_ns" => self.delta_ns = value(key, raw)?,
            "timing.delta_prime_ns" => self.delta_prime_ns = value(key, raw)?,
            "timing.epsilon_ns" => self.epsilon_ns = value(key, raw)?,
            "source.mu" => self.source.mu = value(key, raw)?,
            "source.statistics" => self.source.statistics = named(key, raw, parse_statistics)?,
            "session.variant" => self.session.variant = value::<Variant>(key, raw)?,
            "session.n_target" => self.session.n_target = value(key, raw)?,
            "session.eta_c" => self.session.eta_c = value(key, raw)?,
            "session.eta_m" => self.session.eta_m = value(key, raw)?,
            "session.qber_abort_threshold" => self.session.qber_abort_threshold = value(key, raw)?,
            "session.pulse_period_ns" => self.session.pulse_period = value(key, raw)?,
            "session.pulses" => {
                self.session.pulses = if raw.is_empty() {
                    None
                } else {
                    Some(value(key, raw)?)
                }
            }
            "attack.kind" => self.attack.kind = named(key, raw, parse_attack_kind)?,
            "attack.fraction" => self.attack.fraction = value(key, raw)?,
            "attack.eve_to_bob_delay_ns" => self.attack.eve_to_bob_delay = value(key, raw)?,
            "rate.f_casc" => self.f_casc = value(key, raw)?,
            "rate.storage_loop_km" => {
                self.storage_loop_km = if raw.is_empty() {
                    None
                } else {
                    Some(value(key, raw)?)
                }
            }
            "rate.det_memory" => self.det_memory = value::<DetMemory>(key, raw)?,
            "run.master_seed" => self.master_seed = value(key, raw)?,
            "run.output_dir" => self.output_dir = PathBuf::from(raw),
            other => return Err(ConfigError::UnknownKey(other.to_string())),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.fiber.validate()?;
        self.detector().validate()?;
        self.timing().validate()?;
        self.source.validate()?;
        self.session().validate()?;
        self.attack.validate()?;
        self.rate_params().validate()?;
        Ok(())
    }

    /// Detector with its gate half-width tied to ε.
    pub fn detector(&self) -> DetectorParams {
        DetectorParams {
            gate_window: self.epsilon_ns,
            ..self.detector
        }
    }

    /// Schedule with τ derived from the fiber length.
    pub fn timing(&self) -> TimingParams {
        TimingParams {
            tau: self.fiber.propagation_delay(),
            delta_cap: self.delta_cap_ns,
            delta: self.delta_ns,
            delta_prime: self.delta_prime_ns,
            epsilon: self.epsilon_ns,
        }
    }

    pub fn session(&self) -> SessionConfig {
        SessionConfig {
            f_casc: self.f_casc,
            ..self.session
        }
    }

    /// Λ: the configured value, or the fiber length light covers in Δ.
    pub fn storage_loop_km(&self) -> f64 {
        self.storage_loop_km.unwrap_or_else(|| {
            length_for_delay(self.delta_cap_ns as f64, self.fiber.refractive_index)
        })
    }

    pub fn rate_params(&self) -> RateParams {
        RateParams {
            mu: self.source.mu,
            fiber: self.fiber,
            detector: self.detector(),
            storage_loop_km: self.storage_loop_km(),
            f_casc: self.f_casc,
            statistics: self.source.statistics,
            det_memory: self.det_memory,
        }
    }

    /// The fully resolved configuration, in the same format `parse` reads.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(s, "{k}={v}");
        };
        put(
            "fiber.alpha_db_per_km",
            format!("{:?}", self.fiber.alpha_db_per_km),
        );
        put("fiber.length_km", format!("{:?}", self.fiber.length_km));
        put(
            "fiber.receiver_loss_db",
            format!("{:?}", self.fiber.receiver_loss_db),
        );
        put(
            "fiber.refractive_index",
            format!("{:?}", self.fiber.refractive_index),
        );
        put(
            "detector.efficiency",
            format!("{:?}", self.detector.efficiency),
        );
        put(
            "detector.dark_prob",
            format!("{:?}", self.detector.dark_prob),
        );
        put(
            "detector.misalignment",
            format!("{:?}", self.detector.misalignment),
        );
        put("timing.delta_cap_ns", self.delta_cap_ns.to_string());
        put("timing.delta_ns", self.delta_ns.to_string());
        put("timing.delta_prime_ns", self.delta_prime_ns.to_string());
        put("timing.epsilon_ns", self.epsilon_ns.to_string());
        put("source.mu", format!("{:?}", self.source.mu));
        put(
            "source.statistics",
            statistics_name(self.source.statistics).into(),
        );
        put("session.variant", self.session.variant.name().into());
        put("session.n_target", self.session.n_target.to_string());
        put("session.eta_c", format!("{:?}", self.session.eta_c));
        put("session.eta_m", format!("{:?}", self.session.eta_m));
        put(
            "session.qber_abort_threshold",
            format!("{:?}", self.session.qber_abort_threshold),
        );
        put(
            "session.pulse_period_ns",
            self.session.pulse_period.to_string(),
        );
        put(
            "session.pulses",
            self.session
                .pulses
                .map(|p| p.to_string())
                .unwrap_or_default(),
        );
        put("attack.kind", attack_name(self.attack.kind).into());
        put("attack.fraction", format!("{:?}", self.attack.fraction));
        put(
            "attack.eve_to_bob_delay_ns",
            self.attack.eve_to_bob_delay.to_string(),
        );
        put("rate.f_casc", format!("{:?}", self.f_casc));
        put(
            "rate.storage_loop_km",
            self.storage_loop_km
                .map(|l| format!("{l:?}"))
                .unwrap_or_default(),
        );
        put("rate.det_memory", self.det_memory.name().into());
        put("run.master_seed", self.master_seed.to_string());
        put("run.output_dir", self.output_dir.display().to_string());
        s
    }
}
