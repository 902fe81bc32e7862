use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,

    #[error("cannot add values carrying sqrt(pi)^{left} and sqrt(pi)^{right}")]
    PiExponentMismatch { left: i32, right: i32 },

    #[error("quadratic extensions differ: sqrt({left}) vs sqrt({right})")]
    ExtensionMismatch { left: u32, right: u32 },

    #[error("negative power on jet variable a^({order})")]
    NegativeJetPower { order: usize },

    #[error("exponent out of representable range")]
    ExponentOverflow,

    #[error("rationality violated: {0}")]
    Rationality(String),

    #[error("angle dependence survived evaluation: {0}")]
    AngleDependence(String),

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("{0}")]
    Usage(String),

    #[error("cache error: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
