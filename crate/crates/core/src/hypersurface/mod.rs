//! Rigged null hypersurfaces: frames, shape data, classification and structural residuals.

pub mod classify;
pub mod frame;
pub mod patch;
pub mod residuals;
pub mod shape;

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};

pub use classify::{classify_expansions, classify_point, classify_traces, PointClass, TrappedClass};
pub use frame::{
    build_rigged_frame, induced_metric_and_radical, FrameResiduals, RadicalReport, RiggedFramePoint, Rigging,
};
pub use patch::{EmbeddingJet, HypersurfacePatch, StepBases};
pub use residuals::{structure_residuals, structure_residuals_for, StructureResiduals};
pub use shape::{frame_derivatives, shape_data, ExactPoint, FrameDerivatives, ShapePoint};

/// Numerical thresholds shared by the whole pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Relative size below which an induced-metric eigenvalue counts as zero.
    pub null: f64,
    /// Zero band for expansions, relative to the patch curvature scale.
    pub classify: f64,
    /// Curvature-level identities (Gauss–Codazzi, Raychaudhuri, Newton trace).
    pub curvature: f64,
    /// First-order identities (metric compatibility, Killing residual).
    pub identity: f64,
    /// `dη` threshold on the screen for a leaf decomposition.
    pub integrable: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { null: 1e-8, classify: 1e-7, curvature: 1e-4, identity: 1e-6, integrable: 1e-6 }
    }
}

impl Tolerances {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("tol_null", self.null),
            ("tol_classify", self.classify),
            ("tol_curvature", self.curvature),
            ("tol_identity", self.identity),
            ("tol_integrable", self.integrable),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(GeomError::Config(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}
