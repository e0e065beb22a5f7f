use thiserror::Error;

use crate::geometry::Vec2;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point ({}, {}) lies outside the level-set grid", .0.x, .0.y)]
    OutOfDomain(Vec2),

    #[error("level-set gradient vanishes at ({}, {})", .0.x, .0.y)]
    DegenerateGradient(Vec2),

    #[error("no background cell center lies inside the domain")]
    EmptyDomain,

    #[error("relaxation diverged at step {step}: E = {energy:e} (initial {initial:e})")]
    Divergence { step: usize, energy: f64, initial: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(&'static str),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
