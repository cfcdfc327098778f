use crate::model::State;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("state ({x}, {z}) is not a fixed point (log residual {residual:e})")]
    NotAFixedPoint { x: f64, z: f64, residual: f64 },

    #[error("invalid integration config: {0}")]
    InvalidConfig(String),

    #[error("divergence detected at t = {t}; last finite state ({}, {})", last.x, last.z)]
    Diverged { t: f64, last: State },

    #[error("integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("trajectory lacks {0}")]
    MissingData(&'static str),

    #[error("no limit cycle reached: {0}")]
    NoLimitCycle(String),
}

pub type Result<T> = std::result::Result<T, Error>;
