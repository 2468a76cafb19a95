use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numeric error: {0}")]
    Numeric(String),
    #[error("contract violation: {0}")]
    Contract(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("training diverged at step {step}: {reason}")]
    Diverged { step: usize, reason: String },
    #[error("acceptance rate {rate:e} fell below the floor {floor:e} over a window of {window} draws (after {draws} total draws)")]
    AcceptanceFloor {
        rate: f64,
        floor: f64,
        window: usize,
        draws: usize,
    },
    #[error("rejection envelope violated at sample {index}: p_d/(M p_g) = {ratio}")]
    EnvelopeViolation { index: usize, ratio: f64 },
}

impl Error {
    /// Short machine-readable tag, used in error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Numeric(_) => "numeric",
            Error::Contract(_) => "contract",
            Error::Domain(_) => "domain",
            Error::Diverged { .. } => "diverged",
            Error::AcceptanceFloor { .. } => "acceptance_floor",
            Error::EnvelopeViolation { .. } => "envelope_violation",
        }
    }
}
