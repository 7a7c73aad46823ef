use crate::Cx;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("empty sample set")]
    EmptySamples,
    #[error("coefficient of w² vanishes, map does not extend to the projective plane")]
    NotExtendible,
    #[error("root finder recovered {found} of {expected} roots")]
    ResidualRoots {
        found: usize,
        expected: usize,
        roots: Vec<Cx>,
    },
    #[error("fiber over z0 = {0} is not in the filled Julia set of the base")]
    InvalidFiber(Cx),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("root of the forcing quadratic lies on the base Julia set: {0}")]
    AmbiguousType(Cx),
    #[error("lifted loop meets a critical value (radicand modulus {min_modulus:e} at t = {t})")]
    CriticalIntersection { t: f64, min_modulus: f64 },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
