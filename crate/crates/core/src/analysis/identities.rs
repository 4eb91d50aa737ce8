use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{GeomError, Result};
use crate::hypersurface::{shape_data, ExactPoint, HypersurfacePatch, Rigging, ShapePoint, Tolerances};
use crate::spacetime::{Christoffel, CurvatureSample, Riemann};

/// Shape data at a point together with its parameter derivatives.
///
/// Exact quantities (`B`, induced connection, `Ṡ₁`) are differenced once at the
/// inner step; quantities that already come from finite differences (`C`, `τ`,
/// `Ȧ_ξ`, `S₁`, `H`) are differenced at the outer step.
#[derive(Debug, Clone)]
pub struct SecondOrderPoint {
    pub shape: ShapePoint,
    pub ambient: CurvatureSample,
    /// `conn[c][(a, b)] = Γ^c_{ab}` of the induced connection.
    pub conn: Vec<DMatrix<f64>>,
    /// `d_conn[e][c][(a, b)] = ∂_e Γ^c_{ab}`.
    pub d_conn: Vec<Vec<DMatrix<f64>>>,
    pub d_b: Vec<DMatrix<f64>>,
    pub d_s1_dot: DVector<f64>,
    pub d_c: Vec<DMatrix<f64>>,
    pub d_tau: Vec<DVector<f64>>,
    pub d_a_xi: Vec<DMatrix<f64>>,
    pub d_s1: DVector<f64>,
    pub d_s1_dot_fd: DVector<f64>,
    pub d_mean_curvature: Vec<DVector<f64>>,
}

impl SecondOrderPoint {
    pub fn new(patch: &HypersurfacePatch, rigging: &Rigging, u: &[f64], tol: &Tolerances) -> Result<Self> {
        let shape = shape_data(patch, rigging, u, tol)?;
        let ambient = patch.ambient().curvature(shape.frame().x().as_slice())?;
        let m = patch.dim();
        let d = patch.ambient_dim();
        let conn = shape.exact.induced_connection();

        let inner = patch.inner_step(u);
        let mut d_conn = Vec::with_capacity(m);
        let mut d_b = Vec::with_capacity(m);
        let mut d_s1_dot = DVector::zeros(m);
        for e in 0..m {
            let v = patch.partial(u, e, inner, |p| {
                let ex = ExactPoint::new(patch, rigging, p, tol)?;
                let mut out = Vec::with_capacity(m * m * (m + 1) + 1);
                for g in ex.induced_connection() {
                    out.extend(g.iter());
                }
                out.extend(ex.b.iter());
                out.push(ex.s1_dot());
                Ok(out)
            })?;
            let mm = m * m;
            d_conn.push((0..m).map(|c| DMatrix::from_column_slice(m, m, &v[c * mm..(c + 1) * mm])).collect());
            d_b.push(DMatrix::from_column_slice(m, m, &v[m * mm..(m + 1) * mm]));
            d_s1_dot[e] = v[(m + 1) * mm];
        }

        let outer = patch.outer_step(u);
        let (mut d_c, mut d_tau, mut d_a_xi, mut d_h) = (vec![], vec![], vec![], vec![]);
        let mut d_s1 = DVector::zeros(m);
        let mut d_s1_dot_fd = DVector::zeros(m);
        for e in 0..m {
            let v = patch.partial(u, e, outer, |p| {
                let s = shape_data(patch, rigging, p, tol)?;
                let mut out = Vec::with_capacity(2 * m * m + m + d + 2);
                out.extend(s.c.iter());
                out.extend(s.tau.iter());
                out.extend(s.a_xi.iter());
                out.push(s.s1);
                out.push(s.s1_dot);
                out.extend(s.mean_curvature.iter());
                Ok(out)
            })?;
            let mm = m * m;
            d_c.push(DMatrix::from_column_slice(m, m, &v[..mm]));
            d_tau.push(DVector::from_column_slice(&v[mm..mm + m]));
            d_a_xi.push(DMatrix::from_column_slice(m, m, &v[mm + m..2 * mm + m]));
            d_s1[e] = v[2 * mm + m];
            d_s1_dot_fd[e] = v[2 * mm + m + 1];
            d_h.push(DVector::from_column_slice(&v[2 * mm + m + 2..]));
        }
        Ok(SecondOrderPoint {
            shape,
            ambient,
            conn,
            d_conn,
            d_b,
            d_s1_dot,
            d_c,
            d_tau,
            d_a_xi,
            d_s1,
            d_s1_dot_fd,
            d_mean_curvature: d_h,
        })
    }

    pub fn dim(&self) -> usize {
        self.conn.len()
    }

    /// Curvature of the induced connection.
    pub fn induced_riemann(&self) -> Riemann {
        let m = self.dim();
        let gamma = Christoffel::from_fn(m, |c, a, b| self.conn[c][(a, b)]);
        let dgamma: Vec<Christoffel> =
            (0..m).map(|e| Christoffel::from_fn(m, |c, a, b| self.d_conn[e][c][(a, b)])).collect();
        Riemann::from_connection(&gamma, &dgamma)
    }

    /// `(∇_e T)_{ab}` for a covariant 2-tensor `t` with partials `dt`.
    fn cov_2(&self, t: &DMatrix<f64>, dt: &[DMatrix<f64>], e: usize, a: usize, b: usize) -> f64 {
        let mut v = dt[e][(a, b)];
        for f in 0..self.dim() {
            v -= self.conn[f][(e, a)] * t[(f, b)] + self.conn[f][(e, b)] * t[(a, f)];
        }
        v
    }

    fn jac_col(&self, a: usize) -> DVector<f64> {
        self.shape.frame().jac().column(a).into_owned()
    }

    /// `ξ·Ṡ₁` from the exact route.
    pub fn xi_s1_dot(&self) -> f64 {
        self.shape.frame().xi_param.dot(&self.d_s1_dot)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct RaychaudhuriReport {
    pub ricci_xi_xi: f64,
    pub xi_s1_dot: f64,
    pub tau_xi_s1_dot: f64,
    pub trace_a_xi_squared: f64,
    pub residual: f64,
}

/// Null Raychaudhuri equation at `u`, with `ξ·Ṡ₁` by a directional difference of the exact `Ṡ₁`.
pub fn raychaudhuri_residual(
    patch: &HypersurfacePatch,
    rigging: &Rigging,
    u: &[f64],
    tol: &Tolerances,
) -> Result<RaychaudhuriReport> {
    let s = shape_data(patch, rigging, u, tol)?;
    let f = s.frame();
    let ambient = patch.ambient().curvature(f.x().as_slice())?;
    let xs = patch.derivative(u, f.xi_param.as_slice(), patch.inner_step(u), |p| {
        Ok(vec![ExactPoint::new(patch, rigging, p, tol)?.s1_dot()])
    })?[0];
    Ok(raychaudhuri_terms(&s, &ambient, xs))
}

/// Same identity from precomputed second-order data.
pub fn raychaudhuri_for(sp: &SecondOrderPoint) -> RaychaudhuriReport {
    raychaudhuri_terms(&sp.shape, &sp.ambient, sp.xi_s1_dot())
}

fn raychaudhuri_terms(s: &ShapePoint, ambient: &CurvatureSample, xi_s1_dot: f64) -> RaychaudhuriReport {
    let f = s.frame();
    let ric = ambient.ricci_form(&f.xi, &f.xi);
    let a = s.exact.a_xi();
    let s1d = a.trace();
    let tau_xi = s.tau.dot(&f.xi_param);
    let tr2 = (&a * &a).trace();
    let rhs = xi_s1_dot + tau_xi * s1d - tr2;
    RaychaudhuriReport {
        ricci_xi_xi: ric,
        xi_s1_dot,
        tau_xi_s1_dot: tau_xi * s1d,
        trace_a_xi_squared: tr2,
        residual: (ric - rhs).abs(),
    }
}

/// Max-norm residual of each Gauss–Codazzi family at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct GaussCodazziResiduals {
    /// `⟨R̄(U,V)W,X⟩` against the induced curvature, `X` in the screen.
    pub gauss_screen: f64,
    /// `⟨R̄(U,V)W,N⟩ = η(R(U,V)W)`.
    pub gauss_transversal: f64,
    /// `⟨R̄(U,V)X,N⟩` against `∇C` and `τ`.
    pub codazzi_c: f64,
    /// `⟨R̄(U,V)W,ξ⟩` against `∇B` and `τ`.
    pub codazzi_b: f64,
    /// `⟨R̄(U,V)ξ,N⟩` against `C`, `Ȧ_ξ` and `dτ`.
    pub ricci_xi: f64,
    /// `max |C(X,Y) − C(Y,X)|` on the screen.
    pub c_screen_asymmetry: f64,
    /// Space-form reduced Gauss equation; present when the ambient claims constant curvature and `A_N = φȦ_ξ`.
    pub reduced_gauss: Option<f64>,
    /// Space-form reduced Codazzi equation.
    pub reduced_codazzi: Option<f64>,
    /// Gauss equation of the leaf in the ambient; present on patches with a leaf axis.
    pub leaf_gauss: Option<f64>,
    pub reduced_leaf_gauss: Option<f64>,
}

impl GaussCodazziResiduals {
    pub fn max(&self) -> f64 {
        [
            self.gauss_screen,
            self.gauss_transversal,
            self.codazzi_c,
            self.codazzi_b,
            self.ricci_xi,
            self.reduced_gauss.unwrap_or(0.0),
            self.reduced_codazzi.unwrap_or(0.0),
            self.leaf_gauss.unwrap_or(0.0),
            self.reduced_leaf_gauss.unwrap_or(0.0),
        ]
        .into_iter()
        .fold(0.0, f64::max)
    }

    pub fn merge(&mut self, o: &GaussCodazziResiduals) {
        let opt = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(x), Some(y)) => Some(x.max(y)),
            (x, None) => x,
            (None, y) => y,
        };
        self.gauss_screen = self.gauss_screen.max(o.gauss_screen);
        self.gauss_transversal = self.gauss_transversal.max(o.gauss_transversal);
        self.codazzi_c = self.codazzi_c.max(o.codazzi_c);
        self.codazzi_b = self.codazzi_b.max(o.codazzi_b);
        self.ricci_xi = self.ricci_xi.max(o.ricci_xi);
        self.c_screen_asymmetry = self.c_screen_asymmetry.max(o.c_screen_asymmetry);
        self.reduced_gauss = opt(self.reduced_gauss, o.reduced_gauss);
        self.reduced_codazzi = opt(self.reduced_codazzi, o.reduced_codazzi);
        self.leaf_gauss = opt(self.leaf_gauss, o.leaf_gauss);
        self.reduced_leaf_gauss = opt(self.reduced_leaf_gauss, o.reduced_leaf_gauss);
    }
}

pub fn gauss_codazzi_residuals(
    patch: &HypersurfacePatch,
    sp: &SecondOrderPoint,
    tol: &Tolerances,
) -> Result<GaussCodazziResiduals> {
    let s = &sp.shape;
    let f = s.frame();
    let m = sp.dim();
    let g = &f.induced;
    let b = s.b();
    let c = &s.c;
    let tau = &s.tau;
    let ax = &s.a_xi;
    let riem = sp.induced_riemann();
    let basis: Vec<DVector<f64>> = (0..m).map(|a| sp.jac_col(a)).collect();
    let screen = &f.screen_param;
    let unit = |a: usize| {
        let mut v = DVector::zeros(m);
        v[a] = 1.0;
        v
    };
    let bil = |t: &DMatrix<f64>, x: &DVector<f64>, y: &DVector<f64>| x.dot(&(t * y));
    let amb = |u: usize, v: usize, w: &DVector<f64>| {
        sp.ambient.riemann.apply(&basis[u], &basis[v], &(f.jac() * w))
    };

    let mut out = GaussCodazziResiduals::default();
    let mut dtau = DMatrix::zeros(m, m);
    for u in 0..m {
        for v in 0..m {
            dtau[(u, v)] = sp.d_tau[u][v] - sp.d_tau[v][u];
        }
    }
    for u in 0..m {
        for v in 0..m {
            if u == v {
                continue;
            }
            for w in 0..m {
                let rb = amb(u, v, &unit(w));
                let ri = DVector::from_fn(m, |a, _| riem.get(a, w, u, v));
                for x in screen {
                    let lhs = f.inner(&rb, &(f.jac() * x));
                    let rhs = (g * &ri).dot(x) + b[(u, w)] * bil(c, &unit(v), x) - b[(v, w)] * bil(c, &unit(u), x);
                    out.gauss_screen = out.gauss_screen.max((lhs - rhs).abs());
                }
                out.gauss_transversal = out.gauss_transversal.max((f.inner(&rb, &f.n) - f.eta.dot(&ri)).abs());

                let cb = sp.cov_2(b, &sp.d_b, u, v, w) - sp.cov_2(b, &sp.d_b, v, u, w) + b[(v, w)] * tau[u]
                    - b[(u, w)] * tau[v];
                out.codazzi_b = out.codazzi_b.max((f.inner(&rb, &f.xi) - cb).abs());
            }
            for x in screen {
                let rb = amb(u, v, x);
                let mut rhs = 0.0;
                for k in 0..m {
                    rhs += (sp.cov_2(c, &sp.d_c, u, v, k) - sp.cov_2(c, &sp.d_c, v, u, k)) * x[k];
                }
                rhs += bil(c, &unit(u), x) * tau[v] - bil(c, &unit(v), x) * tau[u];
                out.codazzi_c = out.codazzi_c.max((f.inner(&rb, &f.n) - rhs).abs());
            }
            let rb = amb(u, v, &f.xi_param);
            let p = f.projector();
            let axu = ax.column(u).into_owned();
            let pv = p.column(v).into_owned();
            let rhs = bil(c, &axu, &pv) - bil(c, &unit(u), &(ax * &pv)) - dtau[(u, v)];
            out.ricci_xi = out.ricci_xi.max((f.inner(&rb, &f.n) - rhs).abs());
        }
    }
    let cs = s.c_screen();
    out.c_screen_asymmetry = (&cs - cs.transpose()).amax();

    if let Some(kappa) = patch.ambient().claimed_curvature() {
        let mut codazzi: f64 = 0.0;
        for x in screen {
            for y in screen {
                for z in screen {
                    let cov = |p: &DVector<f64>, q: &DVector<f64>, r: &DVector<f64>| {
                        let mut acc = 0.0;
                        for e in 0..m {
                            for i in 0..m {
                                for j in 0..m {
                                    acc += p[e] * q[i] * r[j] * sp.cov_2(b, &sp.d_b, e, i, j);
                                }
                            }
                        }
                        acc
                    };
                    let lhs = cov(x, y, z) + bil(b, y, z) * tau.dot(x);
                    let rhs = cov(y, x, z) + bil(b, x, z) * tau.dot(y);
                    codazzi = codazzi.max((lhs - rhs).abs());
                }
            }
        }
        out.reduced_codazzi = Some(codazzi);
        let (phi, defect) = s.conformal_fit();
        if defect <= tol.identity.max(tol.curvature * 1e-2) {
            let mut gauss: f64 = 0.0;
            for x in screen {
                for y in screen {
                    for z in screen {
                        for t in screen {
                            let mut lhs = 0.0;
                            for (i, xi) in x.iter().enumerate() {
                                for (j, yj) in y.iter().enumerate() {
                                    for (k, zk) in z.iter().enumerate() {
                                        let w = xi * yj * zk;
                                        if w == 0.0 {
                                            continue;
                                        }
                                        let ri = DVector::from_fn(m, |a, _| riem.get(a, k, i, j));
                                        lhs += w * (g * ri).dot(t);
                                    }
                                }
                            }
                            let rhs = kappa * (bil(g, y, z) * bil(g, x, t) - bil(g, x, z) * bil(g, y, t))
                                + phi * (bil(b, y, z) * bil(b, x, t) - bil(b, x, z) * bil(b, y, t));
                            gauss = gauss.max((lhs - rhs).abs());
                        }
                    }
                }
            }
            out.reduced_gauss = Some(gauss);
        }
    }

    let in_screen = patch.leaf_axis().is_some_and(|axis| {
        let eta = (0..m).filter(|&a| a != axis).fold(0.0f64, |acc, a| acc.max(f.eta[a].abs()));
        eta <= tol.null * f.jac().amax().max(1.0) * 1e2
    });
    if in_screen {
        let leaf = super::leaf::leaf_gauss_residuals(patch, sp, tol)?;
        out.leaf_gauss = Some(leaf.gauss);
        out.reduced_leaf_gauss = leaf.reduced;
    }
    Ok(out)
}

/// `|tr(∇_U Ȧ_ξ) − U·Ṡ₁|` with `Ȧ_ξ` from the frame derivatives and `Ṡ₁` from the exact route.
pub fn newton_trace_residual(sp: &SecondOrderPoint, dir: &DVector<f64>) -> f64 {
    let m = sp.dim();
    let a = &sp.shape.a_xi;
    let mut tr = 0.0;
    for e in 0..m {
        if dir[e] == 0.0 {
            continue;
        }
        let mut t = sp.d_a_xi[e].trace();
        for cc in 0..m {
            for k in 0..m {
                t += sp.conn[cc][(e, k)] * a[(k, cc)] - a[(cc, k)] * sp.conn[k][(e, cc)];
            }
        }
        tr += dir[e] * t;
    }
    (tr - dir.dot(&sp.d_s1_dot)).abs()
}

/// Residual of the normal derivative of `H` against
/// `(dθ_N⁺ − θ_N⁺τ)ξ − (dθ_ξ⁺ + θ_ξ⁺τ)N` along screen directions.
pub fn parallel_mean_curvature_residual(sp: &SecondOrderPoint) -> f64 {
    let s = &sp.shape;
    let f = s.frame();
    let gamma = &s.exact.christoffel;
    let (th_n, th_xi) = (s.theta_n_plus(), s.theta_xi_plus());
    let mut worst: f64 = 0.0;
    for x in &f.screen_param {
        let xa = f.jac() * x;
        let mut dh = gamma.contract(&xa, &s.mean_curvature);
        for (e, xe) in x.iter().enumerate() {
            dh += &sp.d_mean_curvature[e] * *xe;
        }
        let normal = &f.xi * f.inner(&dh, &f.n) + &f.n * f.inner(&dh, &f.xi);
        let d_th_n = -sp.d_s1.dot(x);
        let d_th_xi = sp.d_s1_dot_fd.dot(x);
        let t = s.tau.dot(x);
        let predicted = &f.xi * (d_th_n - th_n * t) - &f.n * (d_th_xi + th_xi * t);
        worst = worst.max((normal - predicted).amax());
    }
    worst
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct UmbilicOde {
    pub rho: f64,
    /// `ξ(ρ) + ρτ(ξ) − ρ²`.
    pub along_xi: f64,
    /// `max_i |E_i(ρ) + ρτ(E_i)|`.
    pub along_screen: f64,
}

/// `ρ` from the exact `B` on the screen.
pub fn umbilic_rho(ex: &ExactPoint) -> f64 {
    let bf = ex.b_frame();
    let n = bf.nrows() - 1;
    (1..=n).map(|i| bf[(i, i)]).sum::<f64>() / n as f64
}

pub fn umbilic_ode_residual(
    patch: &HypersurfacePatch,
    rigging: &Rigging,
    u: &[f64],
    tol: &Tolerances,
) -> Result<UmbilicOde> {
    if patch.ambient().claimed_curvature().is_none() {
        return Err(GeomError::NotSpaceForm);
    }
    let s = shape_data(patch, rigging, u, tol)?;
    let rho = umbilic_rho(&s.exact);
    let f = s.frame();
    let residual = (s.b() - &f.induced * rho).amax();
    let allowed = tol.identity * s.b().amax().max(1.0);
    if residual > allowed {
        return Err(GeomError::NotUmbilic { residual, tolerance: allowed });
    }
    let step = patch.inner_step(u);
    let rho_at = |p: &[f64]| -> Result<Vec<f64>> { Ok(vec![umbilic_rho(&ExactPoint::new(patch, rigging, p, tol)?)]) };
    let d_xi = patch.derivative(u, f.xi_param.as_slice(), step, rho_at)?[0];
    let along_xi = (d_xi + rho * s.tau.dot(&f.xi_param) - rho * rho).abs();
    let mut along_screen: f64 = 0.0;
    for e in &f.screen_param {
        let d = patch.derivative(u, e.as_slice(), step, rho_at)?[0];
        along_screen = along_screen.max((d + rho * s.tau.dot(e)).abs());
    }
    Ok(UmbilicOde { rho, along_xi, along_screen })
}
