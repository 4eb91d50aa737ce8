use thiserror::Error;

/// Errors raised anywhere in the engine.
///
/// Input-side failures (`Parse`, `UnknownVariable`, `Config`, ...) map to CLI exit
/// code 2; geometric invariant failures map to exit code 1. See
/// [`GeomError::is_input_error`].
#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeomError {
    #[error("syntax error at byte {pos}: {message}")]
    Parse { pos: usize, message: String },

    #[error("unknown identifier `{name}` (chart variables: {chart})")]
    UnknownVariable { name: String, chart: String },

    #[error("domain error in `{expr}`: {message}")]
    Domain { expr: String, message: String },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("singular metric at {point:?} (condition number {condition:.3e})")]
    SingularMetric { point: Vec<f64>, condition: f64 },

    #[error("metric is not Lorentzian at {point:?}: eigenvalues {eigenvalues:?}")]
    NotLorentzian { point: Vec<f64>, eigenvalues: Vec<f64> },

    #[error("NOT_NULL: induced metric has no null direction at {point:?} (eigenvalues {eigenvalues:?})")]
    NotNull { point: Vec<f64>, eigenvalues: Vec<f64> },

    #[error("DEGENERATE_RANK: induced metric has {count} null directions at {point:?}")]
    DegenerateRank { point: Vec<f64>, count: usize },

    #[error("embedding Jacobian is rank deficient at {point:?}")]
    RankDeficient { point: Vec<f64> },

    #[error("TANGENT_RIGGING: rigging is tangent to the hypersurface at {point:?} (<L,xi0> = {pairing:.3e})")]
    TangentRigging { point: Vec<f64>, pairing: f64 },

    #[error("finite-difference stencil leaves the domain along axis `{axis}` at {point:?}")]
    GridBoundary { axis: String, point: Vec<f64> },

    #[error("degenerate plane: area form {denominator:.3e} below tolerance")]
    DegeneratePlane { denominator: f64 },

    #[error("vector is not null: <v,v> = {norm:.3e}")]
    NonNullVector { norm: f64 },

    #[error("frame is not future-directed at {point:?}")]
    NonFutureFrame { point: Vec<f64> },

    #[error("ZERO_PHI: rescaling function vanishes at {point:?}")]
    ZeroPhi { point: Vec<f64> },

    #[error("rescaling function is negative at {point:?}; orientation-reversing changes are unsupported")]
    OrientationReversing { point: Vec<f64> },

    #[error("INADMISSIBLE_ZETA: {reason}")]
    InadmissibleZeta { reason: String },

    #[error("NOT_UMBILIC: umbilicity residual {residual:.3e} exceeds {tolerance:.1e}")]
    NotUmbilic { residual: f64, tolerance: f64 },

    #[error("ambient metric carries no constant-curvature claim")]
    NotSpaceForm,

    #[error("screen distribution is not integrable (d(eta) residual {residual:.3e})")]
    NonIntegrableScreen { residual: f64 },

    #[error("dragged surface is not spacelike at {point:?}")]
    NotSpacelike { point: Vec<f64> },

    #[error("leaf is not compact; {what} skipped")]
    NonCompactLeaf { what: String },

    #[error("patch has no leaf axis")]
    NoLeafAxis,

    #[error("rigging has no ambient extension; dragging needs one")]
    NoAmbientRigging,

    #[error("integrator failure: {0}")]
    Integrator(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("I/O error on `{path}`: {message}")]
    Io { path: String, message: String },
}

impl GeomError {
    /// True for errors caused by malformed user input rather than geometry.
    pub fn is_input_error(&self) -> bool {
        matches!(
            self,
            GeomError::Parse { .. }
                | GeomError::UnknownVariable { .. }
                | GeomError::Config(_)
                | GeomError::Io { .. }
                | GeomError::DimensionMismatch { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, GeomError>;
