use thiserror::Error;

use crate::minkowski::LorentzClass;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("boost axis must be a unit spatial vector, got norm {0}")]
    NonUnitAxis(f64),

    #[error("not a point of the hyperboloid: x·x = {norm_sq}, x⁰ = {time}")]
    NotOnHyperboloid { norm_sq: f64, time: f64 },

    #[error("invalid point pair: -p·q = {0} < 1")]
    InvalidPointPair(f64),

    #[error("point is not in the open future cone of the tip ((y-p)² = {0})")]
    OutsideFutureCone(f64),

    #[error("not a proper orthochronous Lorentz matrix (defect {0:e})")]
    NotLorentz(f64),

    #[error("genus must be at least 2, got {0}")]
    GenusTooSmall(usize),

    #[error("expected {expected} generators, got {got}")]
    GeneratorCount { expected: usize, got: usize },

    #[error("element is not hyperbolic: {0:?}")]
    NotHyperbolic(LorentzClass),

    #[error("invalid word `{word}`: {reason}")]
    InvalidWord { word: String, reason: String },

    #[error("holonomy validation failed: {0}")]
    Validation(String),

    #[error("basepoint lies within {distance:e} of a lift of the grafting geodesic")]
    DegenerateBasepoint { distance: f64 },

    #[error("grafting lift search radius {radius} too small: relator residual {residual:e}")]
    GraftingRadiusTooSmall { radius: usize, residual: f64 },

    #[error("word {word}: {reason}")]
    Geometry { word: String, reason: String },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("ambiguous side pairing for side `{side}`: candidates {candidates:?}")]
    AmbiguousPairing { side: String, candidates: Vec<String> },

    #[error("fit failed for word {word}: residual {residual:e}")]
    FitFailure { word: String, residual: f64 },

    #[error("reconstruction failed: {0}")]
    Reconstruction(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
