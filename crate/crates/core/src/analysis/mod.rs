//! Identity checks, leaf geometry, Lie dragging and horizon classification.

pub mod drag;
pub mod horizon;
pub mod identities;
pub mod leaf;

pub use drag::{
    area_variation, expansion_variation, lie_drag, symmetric_epsilons, AreaVariation, DragResult, DraggedLeaf,
    ExpansionVariation,
};
pub use horizon::{horizon_classify, point_records, HorizonVerdict, LeafVerdict, PointRecord};
pub use identities::{
    gauss_codazzi_residuals, newton_trace_residual, parallel_mean_curvature_residual, raychaudhuri_for, raychaudhuri_residual,
    umbilic_ode_residual, umbilic_rho, GaussCodazziResiduals, RaychaudhuriReport, SecondOrderPoint, UmbilicOde,
};
pub use leaf::{leaf_curvature, leaf_gauss_residuals, rho_spread, LeafCurvature, LeafGauss, LeafPatch};
