use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::patch::{EmbeddingJet, HypersurfacePatch};
use super::Tolerances;
use crate::error::{GeomError, Result};
use crate::expr::Expr;
use crate::rigging::RiggingChange;

/// A transversal vector field along the patch.
#[derive(Debug, Clone)]
pub enum Rigging {
    /// Ambient components as functions of the parameters.
    Parameter(Vec<Expr>),
    /// Ambient components as functions of the ambient coordinates.
    Ambient(Vec<Expr>),
    /// `φN + ζ` relative to a base rigging.
    Changed(Box<RiggingChange>),
}

impl Rigging {
    pub fn parameter<S: AsRef<str>>(patch: &HypersurfacePatch, comps: &[S]) -> Result<Rigging> {
        Ok(Rigging::Parameter(Self::parse_all(comps, patch.chart(), patch.ambient_dim())?))
    }

    pub fn ambient<S: AsRef<str>>(patch: &HypersurfacePatch, comps: &[S]) -> Result<Rigging> {
        let chart = patch.ambient().chart().to_vec();
        Ok(Rigging::Ambient(Self::parse_all(comps, &chart, patch.ambient_dim())?))
    }

    fn parse_all<S: AsRef<str>>(comps: &[S], chart: &[String], dim: usize) -> Result<Vec<Expr>> {
        if comps.len() != dim {
            return Err(GeomError::DimensionMismatch { expected: dim, got: comps.len() });
        }
        comps.iter().map(|c| Expr::parse(c.as_ref(), chart)).collect()
    }

    /// Constant ambient vector, e.g. a timelike `∂₀`.
    pub fn constant(patch: &HypersurfacePatch, v: &[f64]) -> Result<Rigging> {
        let texts: Vec<String> = v.iter().map(|c| format!("{c}")).collect();
        Self::ambient(patch, &texts)
    }

    /// Ambient-coordinate expressions usable off the hypersurface, when available.
    pub fn ambient_extension(&self) -> Option<&[Expr]> {
        match self {
            Rigging::Ambient(e) => Some(e),
            _ => None,
        }
    }

    /// `L` at the parameter point `u`, whose image is `x`.
    pub fn at(
        &self,
        patch: &HypersurfacePatch,
        u: &[f64],
        x: &DVector<f64>,
        tol: &Tolerances,
    ) -> Result<DVector<f64>> {
        match self {
            Rigging::Parameter(e) => {
                Ok(DVector::from_vec(e.iter().map(|c| c.eval(u)).collect::<Result<Vec<_>>>()?))
            }
            Rigging::Ambient(e) => Ok(DVector::from_vec(
                e.iter().map(|c| c.eval(x.as_slice())).collect::<Result<Vec<_>>>()?,
            )),
            Rigging::Changed(c) => c.rigging_at(patch, u, tol),
        }
    }
}

/// Induced metric at a point with its spectral data.
#[derive(Debug, Clone)]
pub struct RadicalReport {
    pub induced: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    pub xi0_param: DVector<f64>,
    pub xi0_ambient: DVector<f64>,
}

/// The rigged frame `(ξ, N, E_i, η)` at one parameter point.
#[derive(Debug, Clone)]
pub struct RiggedFramePoint {
    pub u: Vec<f64>,
    pub embedding: EmbeddingJet,
    pub gbar: DMatrix<f64>,
    pub induced: DMatrix<f64>,
    pub eigenvalues: Vec<f64>,
    pub rigging: DVector<f64>,
    pub xi: DVector<f64>,
    pub xi_param: DVector<f64>,
    pub n: DVector<f64>,
    pub screen: Vec<DVector<f64>>,
    pub screen_param: Vec<DVector<f64>>,
    pub eta: DVector<f64>,
    pub future_directed: bool,
}

/// Max-norm defects of the frame's defining relations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FrameResiduals {
    pub xi_null: f64,
    pub n_null: f64,
    pub pairing: f64,
    pub screen_orthonormal: f64,
    pub screen_transverse: f64,
    pub eta_dual: f64,
    pub g_tilde_min_eigenvalue: f64,
}

impl FrameResiduals {
    pub fn max_defect(&self) -> f64 {
        [
            self.xi_null,
            self.n_null,
            self.pairing,
            self.screen_orthonormal,
            self.screen_transverse,
            self.eta_dual,
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }
}

fn null_threshold(eigenvalues: &[f64], tol_null: f64) -> f64 {
    tol_null * eigenvalues.iter().fold(1.0f64, |m, v| m.max(v.abs()))
}

pub fn induced_metric_and_radical(
    patch: &HypersurfacePatch,
    u: &[f64],
    tol: &Tolerances,
) -> Result<RadicalReport> {
    let emb = patch.embedding_jet(u)?;
    let gbar = patch.ambient().metric_at(emb.x.as_slice())?;
    radical_from(patch, u, &emb, &gbar, tol)
}

fn radical_from(
    patch: &HypersurfacePatch,
    u: &[f64],
    emb: &EmbeddingJet,
    gbar: &DMatrix<f64>,
    tol: &Tolerances,
) -> Result<RadicalReport> {
    let sv = emb.jac.clone().singular_values();
    let smax = sv.max();
    if smax == 0.0 || sv.min() < 1e-10 * smax {
        return Err(GeomError::RankDeficient { point: u.to_vec() });
    }
    let induced = patch.induced_metric(&emb.jac, gbar);
    let eig = SymmetricEigen::new(induced.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let thr = null_threshold(&eigenvalues, tol.null);
    let zero: Vec<usize> = order.iter().copied().filter(|&i| eig.eigenvalues[i].abs() <= thr).collect();
    match zero.len() {
        0 => return Err(GeomError::NotNull { point: u.to_vec(), eigenvalues }),
        1 => {}
        count => return Err(GeomError::DegenerateRank { point: u.to_vec(), count }),
    }
    let xi0_param: DVector<f64> = eig.eigenvectors.column(zero[0]).into_owned();
    let xi0_ambient = &emb.jac * &xi0_param;
    Ok(RadicalReport { induced, eigenvalues, xi0_param, xi0_ambient })
}

pub fn build_rigged_frame(
    patch: &HypersurfacePatch,
    rigging: &Rigging,
    u: &[f64],
    tol: &Tolerances,
) -> Result<RiggedFramePoint> {
    let emb = patch.embedding_jet(u)?;
    let gbar = patch.ambient().metric_at(emb.x.as_slice())?;
    let radical = radical_from(patch, u, &emb, &gbar, tol)?;
    let l = rigging.at(patch, u, &emb.x, tol)?;
    if l.len() != patch.ambient_dim() {
        return Err(GeomError::DimensionMismatch { expected: patch.ambient_dim(), got: l.len() });
    }
    let pairing = l.dot(&(&gbar * &radical.xi0_ambient));
    let scale = l.norm() * radical.xi0_ambient.norm() * gbar.amax().max(1.0);
    if pairing.abs() <= tol.null * scale.max(1e-300) {
        return Err(GeomError::TangentRigging { point: u.to_vec(), pairing });
    }
    let xi_param = &radical.xi0_param / pairing;
    let xi = &emb.jac * &xi_param;
    let ll = l.dot(&(&gbar * &l));
    let n = &l - &xi * (0.5 * ll);
    let eta = emb.jac.transpose() * (&gbar * &n);

    let m = patch.dim();
    let g = &radical.induced;
    let g_tilde = g + &eta * eta.transpose();
    let tilde_scale = g_tilde.trace() / m as f64;
    let mut screen_param: Vec<DVector<f64>> = Vec::with_capacity(m - 1);
    for a in 0..m {
        if screen_param.len() == m - 1 {
            break;
        }
        let mut v = -&xi_param * eta[a];
        v[a] += 1.0;
        let start = v.dot(&(g * &v));
        for e in &screen_param {
            let c = v.dot(&(g * e));
            v -= e * c;
        }
        let norm2 = v.dot(&(g * &v));
        if norm2 <= 1e-6 * start.max(1e-12 * tilde_scale) {
            continue;
        }
        screen_param.push(v / norm2.sqrt());
    }
    if screen_param.len() != m - 1 {
        return Err(GeomError::DegenerateRank { point: u.to_vec(), count: m - screen_param.len() });
    }
    let screen = screen_param.iter().map(|e| &emb.jac * e).collect();
    let metric = patch.ambient();
    let future_directed = metric.is_future(&n) && metric.is_future(&(-&xi));
    Ok(RiggedFramePoint {
        u: u.to_vec(),
        embedding: emb,
        gbar,
        induced: radical.induced,
        eigenvalues: radical.eigenvalues,
        rigging: l,
        xi,
        xi_param,
        n,
        screen,
        screen_param,
        eta,
        future_directed,
    })
}

impl RiggedFramePoint {
    pub fn x(&self) -> &DVector<f64> {
        &self.embedding.x
    }

    pub fn jac(&self) -> &DMatrix<f64> {
        &self.embedding.jac
    }

    pub fn dim(&self) -> usize {
        self.xi_param.len()
    }

    pub fn screen_dim(&self) -> usize {
        self.screen.len()
    }

    pub fn inner(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        a.dot(&(&self.gbar * b))
    }

    /// Parameter components of a tangent ambient vector.
    pub fn tangent_coords(&self, t: &DVector<f64>) -> DVector<f64> {
        let mut c = &self.xi_param * self.inner(t, &self.n);
        for (e, ep) in self.screen.iter().zip(&self.screen_param) {
            c += ep * self.inner(t, e);
        }
        c
    }

    /// Projection onto the screen along `ξ`, as a parameter-space matrix.
    pub fn projector(&self) -> DMatrix<f64> {
        DMatrix::identity(self.dim(), self.dim()) - &self.xi_param * self.eta.transpose()
    }

    /// `Σ e_i e_iᵀ`, the screen inverse metric in parameter components.
    pub fn screen_inverse(&self) -> DMatrix<f64> {
        let m = self.dim();
        self.screen_param.iter().fold(DMatrix::zeros(m, m), |acc, e| acc + e * e.transpose())
    }

    pub fn g_tilde(&self) -> DMatrix<f64> {
        &self.induced + &self.eta * self.eta.transpose()
    }

    /// Frame vectors `(ξ, E_1, …, E_n)` in parameter components, as columns.
    pub fn frame_param(&self) -> DMatrix<f64> {
        let mut cols = vec![self.xi_param.clone()];
        cols.extend(self.screen_param.iter().cloned());
        DMatrix::from_columns(&cols)
    }

    pub fn residuals(&self) -> FrameResiduals {
        let mut r = FrameResiduals {
            xi_null: self.inner(&self.xi, &self.xi).abs(),
            n_null: self.inner(&self.n, &self.n).abs(),
            pairing: (self.inner(&self.n, &self.xi) - 1.0).abs(),
            eta_dual: (self.eta.dot(&self.xi_param) - 1.0).abs(),
            ..Default::default()
        };
        for (i, e) in self.screen.iter().enumerate() {
            r.screen_transverse = r
                .screen_transverse
                .max(self.inner(&self.n, e).abs())
                .max(self.inner(&self.xi, e).abs());
            r.eta_dual = r.eta_dual.max(self.eta.dot(&self.screen_param[i]).abs());
            for (j, f) in self.screen.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                r.screen_orthonormal = r.screen_orthonormal.max((self.inner(e, f) - target).abs());
            }
        }
        let gt = self.g_tilde();
        r.g_tilde_min_eigenvalue =
            SymmetricEigen::new(gt).eigenvalues.iter().fold(f64::INFINITY, |m, v| m.min(*v));
        r
    }

    /// Errors unless `N` and `−ξ` are both future-directed.
    pub fn require_future(&self) -> Result<()> {
        if self.future_directed {
            Ok(())
        } else {
            Err(GeomError::NonFutureFrame { point: self.u.clone() })
        }
    }
}
