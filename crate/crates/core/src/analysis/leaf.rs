use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::identities::{umbilic_rho, SecondOrderPoint};
use crate::error::{GeomError, Result};
use crate::grid::Grid;
use crate::hypersurface::{shape_data, HypersurfacePatch, Rigging, Tolerances};
use crate::spacetime::{Christoffel, Riemann};

/// One leaf of the screen foliation: the parameter sub-grid at a fixed value of the leaf axis.
#[derive(Debug, Clone)]
pub struct LeafPatch {
    parent: HypersurfacePatch,
    axis: usize,
    value: f64,
    dirs: Vec<usize>,
    grid: Grid,
}

impl LeafPatch {
    pub fn new(parent: &HypersurfacePatch, value: f64) -> Result<LeafPatch> {
        let axis = parent.leaf_axis().ok_or(GeomError::NoLeafAxis)?;
        let dirs: Vec<usize> = (0..parent.dim()).filter(|&a| a != axis).collect();
        let axes = dirs.iter().map(|&a| parent.grid().axes[a].clone()).collect();
        Ok(LeafPatch { parent: parent.clone(), axis, value, dirs, grid: Grid::new(axes)? })
    }

    /// One leaf per node of the leaf axis.
    pub fn all(parent: &HypersurfacePatch) -> Result<Vec<LeafPatch>> {
        let axis = parent.leaf_axis().ok_or(GeomError::NoLeafAxis)?;
        parent.grid().axes[axis].nodes().into_iter().map(|v| LeafPatch::new(parent, v)).collect()
    }

    pub fn parent(&self) -> &HypersurfacePatch {
        &self.parent
    }

    pub fn axis(&self) -> usize {
        self.axis
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    /// Parameter axes spanning the leaf.
    pub fn directions(&self) -> &[usize] {
        &self.dirs
    }

    pub fn dim(&self) -> usize {
        self.dirs.len()
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn is_compact(&self) -> bool {
        self.grid.axes.iter().all(|a| a.is_closed())
    }

    /// Full parameter point for leaf coordinates `v`.
    pub fn lift(&self, v: &[f64]) -> Vec<f64> {
        let mut u = vec![0.0; self.parent.dim()];
        u[self.axis] = self.value;
        for (k, &a) in self.dirs.iter().enumerate() {
            u[a] = v[k];
        }
        u
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        self.grid.points().iter().map(|v| self.lift(v)).collect()
    }

    /// Tensor-product quadrature weights matching [`LeafPatch::points`].
    pub fn weights(&self) -> Vec<f64> {
        let w: Vec<Vec<f64>> = self.grid.axes.iter().map(|a| a.weights()).collect();
        (0..self.grid.len())
            .map(|flat| self.grid.multi_index(flat).iter().enumerate().map(|(k, &i)| w[k][i]).product())
            .collect()
    }

    /// Leaf metric and its exact partials along the leaf directions.
    pub fn metric_jet(&self, u: &[f64]) -> Result<(DMatrix<f64>, Vec<DMatrix<f64>>)> {
        let p = &self.parent;
        let emb = p.embedding_jet(u)?;
        let x = emb.x.as_slice();
        let gbar = p.ambient().metric_at(x)?;
        let gamma = p.ambient().christoffel(x)?;
        let n = self.dim();
        let col = |a: usize| emb.jac.column(self.dirs[a]).into_owned();
        let cov = |k: usize, a: usize| {
            let (jk, ja) = (emb.jac.column(self.dirs[k]).into_owned(), col(a));
            emb.second_at(self.dirs[k], self.dirs[a]) + gamma.contract(&jk, &ja)
        };
        let h = DMatrix::from_fn(n, n, |i, j| col(i).dot(&(&gbar * col(j))));
        let dh = (0..n)
            .map(|k| {
                DMatrix::from_fn(n, n, |i, j| cov(k, i).dot(&(&gbar * col(j))) + col(i).dot(&(&gbar * cov(k, j))))
            })
            .collect();
        Ok((h, dh))
    }

    /// Levi-Civita connection of the leaf metric, stored `Γ^i_{jk}`.
    pub fn christoffel(&self, u: &[f64]) -> Result<Christoffel> {
        let (h, dh) = self.metric_jet(u)?;
        let n = self.dim();
        let hinv = h
            .clone()
            .try_inverse()
            .ok_or_else(|| GeomError::NotSpacelike { point: u.to_vec() })?;
        Ok(Christoffel::from_fn(n, |i, j, k| {
            0.5 * (0..n).map(|l| hinv[(i, l)] * (dh[j][(l, k)] + dh[k][(l, j)] - dh[l][(j, k)])).sum::<f64>()
        }))
    }

    /// Curvature of the leaf metric by finite differences of its connection.
    pub fn riemann(&self, u: &[f64]) -> Result<Riemann> {
        let n = self.dim();
        let gamma = self.christoffel(u)?;
        let step = self.parent.inner_step(u);
        let mut dgamma = Vec::with_capacity(n);
        for &a in &self.dirs {
            let v = self.parent.partial(u, a, step, |p| Ok(self.christoffel(p)?.as_slice().to_vec()))?;
            dgamma.push(Christoffel::from_fn(n, |i, j, k| v[(i * n + j) * n + k]));
        }
        Ok(Riemann::from_connection(&gamma, &dgamma))
    }

    /// Checks that `η` vanishes on the leaf directions and the leaf metric is positive definite.
    pub fn check_point(&self, rigging: &Rigging, u: &[f64], tol: &Tolerances) -> Result<f64> {
        let s = crate::hypersurface::build_rigged_frame(&self.parent, rigging, u, tol)?;
        let eta = self.dirs.iter().fold(0.0f64, |m, &a| m.max(s.eta[a].abs()));
        let scale = s.jac().amax().max(1.0);
        if eta > tol.null * scale * 1e2 {
            return Err(GeomError::Config(format!(
                "leaf directions leave the screen at {u:?}: |η| = {eta:.3e}"
            )));
        }
        let (h, _) = self.metric_jet(u)?;
        if h.symmetric_eigenvalues().min() <= 0.0 {
            return Err(GeomError::NotSpacelike { point: u.to_vec() });
        }
        Ok(eta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeafCurvature {
    pub measured: f64,
    /// `c + 2φρ²` when the patch is umbilic and conformally rigged in a space form.
    pub predicted: Option<f64>,
}

/// Sectional curvature of the leaf plane spanned by leaf directions `i` and `j` at `u`.
pub fn leaf_curvature(
    leaf: &LeafPatch,
    rigging: &Rigging,
    plane: (usize, usize),
    u: &[f64],
    tol: &Tolerances,
) -> Result<LeafCurvature> {
    let n = leaf.dim();
    let (i, j) = plane;
    if i >= n || j >= n {
        return Err(GeomError::DimensionMismatch { expected: n, got: i.max(j) + 1 });
    }
    let (h, _) = leaf.metric_jet(u)?;
    let r = leaf.riemann(u)?;
    let mut x = DVector::zeros(n);
    let mut y = DVector::zeros(n);
    x[i] = 1.0;
    y[j] = 1.0;
    let den = h[(i, i)] * h[(j, j)] - h[(i, j)] * h[(i, j)];
    if den.abs() <= 1e-14 * h.amax().powi(2) {
        return Err(GeomError::DegeneratePlane { denominator: den });
    }
    let measured = r.apply(&x, &y, &y).dot(&(&h * &x)) / den;
    Ok(LeafCurvature { measured, predicted: predicted_curvature(leaf.parent(), rigging, u, tol)? })
}

fn predicted_curvature(
    patch: &HypersurfacePatch,
    rigging: &Rigging,
    u: &[f64],
    tol: &Tolerances,
) -> Result<Option<f64>> {
    let Some(c) = patch.ambient().claimed_curvature() else {
        return Ok(None);
    };
    let s = shape_data(patch, rigging, u, tol)?;
    let rho = umbilic_rho(&s.exact);
    let scale = s.b().amax().max(1.0);
    if (s.b() - &s.frame().induced * rho).amax() > tol.identity * scale {
        return Ok(None);
    }
    if rho.abs() <= tol.identity {
        return Ok(Some(c));
    }
    let (phi, defect) = s.conformal_fit();
    Ok((defect <= tol.identity * scale).then_some(c + 2.0 * phi * rho * rho))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LeafGauss {
    pub gauss: f64,
    pub reduced: Option<f64>,
}

/// Gauss equation of a leaf in the ambient, on leaf coordinate directions.
pub fn leaf_gauss_residuals(patch: &HypersurfacePatch, sp: &SecondOrderPoint, tol: &Tolerances) -> Result<LeafGauss> {
    let u = &sp.shape.frame().u;
    let leaf = LeafPatch::new(patch, u[patch.leaf_axis().ok_or(GeomError::NoLeafAxis)?])?;
    let f = sp.shape.frame();
    let dirs = leaf.directions();
    let n = dirs.len();
    let (h, _) = leaf.metric_jet(u)?;
    let rs = leaf.riemann(u)?;
    let b = sp.shape.b();
    let c = &sp.shape.c;
    let (phi, defect) = sp.shape.conformal_fit();
    let claim = patch.ambient().claimed_curvature();
    let sic = defect <= tol.identity * b.amax().max(1.0);
    let cols: Vec<DVector<f64>> = dirs.iter().map(|&a| f.jac().column(a).into_owned()).collect();
    let mut gauss: f64 = 0.0;
    let mut reduced: f64 = 0.0;
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            for z in 0..n {
                let rb = sp.ambient.riemann.apply(&cols[x], &cols[y], &cols[z]);
                for t in 0..n {
                    let lhs = f.inner(&rb, &cols[t]);
                    let star: f64 = (0..n).map(|a| h[(t, a)] * rs.get(a, z, x, y)).sum();
                    let (dx, dy, dz, dt) = (dirs[x], dirs[y], dirs[z], dirs[t]);
                    let rhs = star + b[(dx, dz)] * c[(dy, dt)] - b[(dy, dz)] * c[(dx, dt)] + c[(dx, dz)] * b[(dy, dt)]
                        - c[(dy, dz)] * b[(dx, dt)];
                    gauss = gauss.max((lhs - rhs).abs());
                    if let Some(k) = claim {
                        let pred = k * (h[(y, z)] * h[(x, t)] - h[(x, z)] * h[(y, t)])
                            + 2.0 * phi * (b[(dy, dz)] * b[(dx, dt)] - b[(dx, dz)] * b[(dy, dt)]);
                        reduced = reduced.max((star - pred).abs());
                    }
                }
            }
        }
    }
    Ok(LeafGauss { gauss, reduced: (claim.is_some() && sic).then_some(reduced) })
}

/// Spread `max ρ − min ρ` of the umbilic factor over the leaf grid.
pub fn rho_spread(leaf: &LeafPatch, rigging: &Rigging, tol: &Tolerances) -> Result<f64> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for u in leaf.points() {
        let r = umbilic_rho(&crate::hypersurface::ExactPoint::new(leaf.parent(), rigging, &u, tol)?);
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok(hi - lo)
}
