use std::io;

use thiserror::Error;

/// Errors produced anywhere in the model, simulator, solver or validation code.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("autonomy {a_start} is already at or below the disengagement boundary {boundary}")]
    AlreadyDisengaged { a_start: f64, boundary: f64 },

    #[error("policy returned control {u} outside [0, {u_max}] at t = {t}")]
    ControlOutOfRange { u: f64, u_max: f64, t: f64 },

    #[error("time step {dt:.3e} exceeds the explicit stability bound {bound:.3e}")]
    Stability { dt: f64, bound: f64 },

    #[error("non-finite value at t = {t}, a = {a}, i = {i}")]
    NonFinite { t: f64, a: f64, i: f64 },

    #[error("query (a = {a}, i = {i}, t = {t}) lies outside the solution grid")]
    OutOfGrid { a: f64, i: f64, t: f64 },

    #[error("incompatible grid or parameters: {0}")]
    IncompatibleGrid(String),

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },

    #[error("malformed data: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
