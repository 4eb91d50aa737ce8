//! Closed forms for Monge null hypersurfaces `x⁰ = F(u)` of Minkowski space.

use std::f64::consts::SQRT_2;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{GeomError, Result};
use crate::expr::Expr;
use crate::grid::Grid;
use crate::hypersurface::{classify_traces, shape_data, HypersurfacePatch, Rigging, Tolerances, TrappedClass};
use crate::jets::Jet2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NullCheck {
    /// `max |‖∇F‖² − 1|`.
    pub eikonal: f64,
    /// `max |Σ_a F_a F_ab|`.
    pub differentiated: f64,
}

impl NullCheck {
    pub fn passes(&self, tol_null: f64) -> bool {
        self.eikonal <= tol_null && self.differentiated <= tol_null
    }
}

fn gradient(j: &Jet2) -> DVector<f64> {
    DVector::from_column_slice(j.grad())
}

pub fn monge_null_check(f: &Expr, grid: &Grid) -> Result<NullCheck> {
    let mut out = NullCheck { eikonal: 0.0, differentiated: 0.0 };
    for u in grid.points() {
        let j = f.jet(&u)?;
        let g = gradient(&j);
        out.eikonal = out.eikonal.max((g.norm_squared() - 1.0).abs());
        out.differentiated = out.differentiated.max((j.hessian() * &g).amax());
    }
    Ok(out)
}

/// Errors unless `F` is eikonal on the grid.
pub fn require_null(f: &Expr, grid: &Grid, tol: &Tolerances) -> Result<NullCheck> {
    let c = monge_null_check(f, grid)?;
    if !c.passes(tol.null) {
        return Err(GeomError::Config(format!(
            "surface is not null: max |‖∇F‖² − 1| = {:.3e} on the grid",
            c.eikonal
        )));
    }
    Ok(c)
}

/// `(𝒩_F, ξ_F) = ((−1, ∇F)/√2, (1, ∇F)/√2)` in ambient components.
pub fn monge_frame(f: &Expr, u: &[f64]) -> Result<(DVector<f64>, DVector<f64>)> {
    let g = gradient(&f.jet(u)?);
    let d = g.len() + 1;
    let mut n = DVector::zeros(d);
    let mut xi = DVector::zeros(d);
    n[0] = -1.0 / SQRT_2;
    xi[0] = 1.0 / SQRT_2;
    for a in 0..g.len() {
        n[a + 1] = g[a] / SQRT_2;
        xi[a + 1] = g[a] / SQRT_2;
    }
    Ok((n, xi))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MongeShape {
    /// `Ȧ = −Hess F/√2` in parameter components.
    pub a_xi: DMatrix<f64>,
    pub laplacian: f64,
    pub theta_xi_plus: f64,
    pub theta_n_plus: f64,
}

pub fn monge_shape(f: &Expr, u: &[f64]) -> Result<MongeShape> {
    let j = f.jet(u)?;
    let h = j.hessian();
    let lap = h.trace();
    Ok(MongeShape { a_xi: -h / SQRT_2, laplacian: lap, theta_xi_plus: -lap / SQRT_2, theta_n_plus: lap / SQRT_2 })
}

/// Level set of `F` on the grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeafReport {
    pub level: f64,
    pub points: usize,
    pub max_laplacian: f64,
    pub harmonic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MongeVerdict {
    pub trapping_horizon: bool,
    pub max_laplacian: f64,
    pub leaves: Vec<LeafReport>,
}

/// Trapping horizon iff `F` is harmonic on the grid; leaves are `F`-levels binned at
/// `1e-9 · range`.
pub fn trapping_horizon_test(f: &Expr, grid: &Grid, tol: &Tolerances) -> Result<MongeVerdict> {
    require_null(f, grid, tol)?;
    let mut samples = Vec::with_capacity(grid.len());
    for u in grid.points() {
        let j = f.jet(&u)?;
        samples.push((j.value(), j.hessian().trace().abs()));
    }
    let (lo, hi) = samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), (v, _)| (l.min(*v), h.max(*v)));
    let width = 1e-9 * (hi - lo).max(f64::MIN_POSITIVE);
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut leaves: Vec<LeafReport> = Vec::new();
    let mut start = f64::NEG_INFINITY;
    for (v, lap) in &samples {
        match leaves.last_mut() {
            Some(leaf) if v - start <= width => {
                leaf.points += 1;
                leaf.max_laplacian = leaf.max_laplacian.max(*lap);
            }
            _ => {
                start = *v;
                leaves.push(LeafReport { level: *v, points: 1, max_laplacian: *lap, harmonic: false });
            }
        }
    }
    for leaf in &mut leaves {
        leaf.harmonic = leaf.max_laplacian < tol.classify;
    }
    let max_laplacian = samples.iter().fold(0.0f64, |m, (_, l)| m.max(*l));
    Ok(MongeVerdict { trapping_horizon: max_laplacian < tol.classify, max_laplacian, leaves })
}

/// Gaps between the closed forms and the general engine run with rigging `𝒩_F`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct OracleGap {
    pub frame: f64,
    pub a_xi: f64,
    pub a_n: f64,
    pub theta_xi_plus: f64,
    pub theta_n_plus: f64,
    pub tau: f64,
    pub conformal_factor: f64,
    /// `|θ_ξ⁺ + θ_N⁺|` from the engine.
    pub expansion_sum: f64,
    pub trapped: bool,
}

impl OracleGap {
    pub fn max(&self) -> f64 {
        [self.frame, self.a_xi, self.a_n, self.theta_xi_plus, self.theta_n_plus, self.tau, self.conformal_factor]
            .into_iter()
            .fold(0.0, f64::max)
    }

    pub fn merge(&mut self, o: &OracleGap) {
        self.frame = self.frame.max(o.frame);
        self.a_xi = self.a_xi.max(o.a_xi);
        self.a_n = self.a_n.max(o.a_n);
        self.theta_xi_plus = self.theta_xi_plus.max(o.theta_xi_plus);
        self.theta_n_plus = self.theta_n_plus.max(o.theta_n_plus);
        self.tau = self.tau.max(o.tau);
        self.conformal_factor = self.conformal_factor.max(o.conformal_factor);
        self.expansion_sum = self.expansion_sum.max(o.expansion_sum);
        self.trapped |= o.trapped;
    }
}

pub fn oracle_gap(
    patch: &HypersurfacePatch,
    rigging: &Rigging,
    f: &Expr,
    u: &[f64],
    tol: &Tolerances,
) -> Result<OracleGap> {
    let s = shape_data(patch, rigging, u, tol)?;
    let closed = monge_shape(f, u)?;
    let (n, xi) = monge_frame(f, u)?;
    let fr = s.frame();
    let (phi, _) = s.conformal_fit();
    let class = classify_traces(s.s1_dot, s.s1, tol.classify);
    Ok(OracleGap {
        frame: (&fr.n - n).amax().max((&fr.xi - xi).amax()),
        a_xi: (&s.a_xi - &closed.a_xi).amax(),
        a_n: (&s.a_n - &closed.a_xi).amax(),
        theta_xi_plus: (s.theta_xi_plus() - closed.theta_xi_plus).abs(),
        theta_n_plus: (s.theta_n_plus() - closed.theta_n_plus).abs(),
        tau: s.tau.amax(),
        conformal_factor: if closed.a_xi.amax() > 1e-12 { (phi - 1.0).abs() } else { 0.0 },
        expansion_sum: (s.theta_xi_plus() + s.theta_n_plus()).abs(),
        trapped: class.label == TrappedClass::Ts,
    })
}
