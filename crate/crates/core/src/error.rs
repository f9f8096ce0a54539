use thiserror::Error;

/// Errors raised by the model, the integrators and the harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SitError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("no positive equilibrium: beta_e*nu*nu_e must exceed delta_f*(nu_e+delta_e)")]
    NoPositiveEquilibrium,

    #[error("non-finite state after step: {state:?}")]
    NonFiniteStep { state: [f64; 4] },

    #[error("integration blowup at t = {t} days: state {state:?}")]
    Blowup { t: f64, state: [f64; 4] },

    #[error("episode is done; call reset before stepping again")]
    EpisodeDone,

    #[error("batch failed: {failed} of {total} simulations blew up")]
    BatchFailed { failed: usize, total: usize },

    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T, E = SitError> = std::result::Result<T, E>;
