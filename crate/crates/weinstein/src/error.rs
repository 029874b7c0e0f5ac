use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid under-resolves tau = {tau}: {samples_per_oscillation:.2} samples per oscillation (need 8)")]
    UnderResolved {
        tau: f64,
        samples_per_oscillation: f64,
    },
    #[error("support margin {margin:.3} of window is below the required 0.25")]
    WraparoundRisk { margin: f64 },
    #[error("all pairings vanish (below 1e-300)")]
    ZeroPairing,
    #[error("invalid input: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, Error>;
