use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("value {value} is outside the domain of {function}")]
    Domain { function: &'static str, value: f64 },

    #[error("QBER {qber} exceeds the single-photon fraction {beta}; no key can be distilled")]
    SecurityMarginExhausted { qber: f64, beta: f64 },

    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("cannot estimate an error rate from an empty sample")]
    EmptySample,

    #[error("requested {requested} output bits from a {available}-bit key")]
    OutputTooLong { requested: usize, available: usize },

    #[error("no positive secure rate at {distance_km} km")]
    NoSecureRate { distance_km: f64 },

    #[error("rate ratio does not cross 1 between {low_km} and {high_km} km")]
    NoCrossover { low_km: f64, high_km: f64 },

    #[error("{0}")]
    Unsupported(String),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
