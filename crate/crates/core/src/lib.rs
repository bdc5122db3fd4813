pub mod error;
pub mod group;
pub mod holonomy;
pub mod io;
pub mod lightpath;
pub mod minkowski;
pub mod reconstruct;

pub use error::{Error, Result};

use serde::{Deserialize, Serialize};

/// Numerical tolerances shared across the crate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Global ε for "within tolerance" comparisons.
    pub eps: f64,
    /// Bound on relator residuals (Lorentz and Poincaré).
    pub relator: f64,
    /// Matrix max-norm below which two ball elements are identified.
    pub dedup: f64,
    /// Margin for the basepoint/grafting-lift separation test.
    pub graft: f64,
    /// Largest relative residual accepted when fitting measurement series.
    pub fit: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            eps: minkowski::DEFAULT_EPS,
            relator: 1e-8,
            dedup: group::DEFAULT_DEDUP,
            graft: 1e-8,
            fit: 1e-7,
        }
    }
}
