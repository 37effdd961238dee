use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid nome: |q| = {0} must be < 1")]
    InvalidNome(f64),
    #[error("truncation failure: tail bound {bound:e} still above tolerance after {terms} terms")]
    TruncationFailure { terms: usize, bound: f64 },
    #[error("pole hit: {0}")]
    PoleHit(String),
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("strip violation: |Im x| = {im} must be below Re(Q)/2 - margin = {limit}")]
    StripViolation { im: f64, limit: f64 },
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),
    #[error("no decay: {0}")]
    NoDecay(String),
    #[error("pole near contour: {0}")]
    PoleNearContour(String),
    #[error("sampler exhausted after {0} attempts")]
    SamplerExhausted(usize),
    #[error("{side} evaluation failed: {source}")]
    SideFailed { side: String, source: Box<Error> },
    #[error("form {form} is not registered for {identity}")]
    UnknownForm { identity: String, form: String },
}
