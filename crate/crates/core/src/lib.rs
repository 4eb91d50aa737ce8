//! Numeric engine for rigged null hypersurfaces in Lorentzian spacetimes.

pub mod analysis;
pub mod catalog;
pub mod cli;
pub mod error;
pub mod expr;
pub mod grid;
pub mod hypersurface;
pub mod jets;
pub mod monge;
pub mod numeric;
pub mod rigging;
pub mod spacetime;

pub use error::{GeomError, Result};
pub use expr::Expr;
pub use hypersurface::{HypersurfacePatch, Rigging, Tolerances};
pub use jets::Jet2;
pub use spacetime::MetricSpec;
