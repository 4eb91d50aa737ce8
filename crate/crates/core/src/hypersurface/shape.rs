use nalgebra::{DMatrix, DVector};

use super::frame::{build_rigged_frame, Rigging, RiggedFramePoint};
use super::patch::HypersurfacePatch;
use super::Tolerances;
use crate::error::Result;
use crate::spacetime::Christoffel;

/// Frame plus the pointwise-exact second fundamental form `B`.
#[derive(Debug, Clone)]
pub struct ExactPoint {
    pub frame: RiggedFramePoint,
    pub christoffel: Christoffel,
    /// `B_ab = ⟨∇̄_a∂_b, ξ⟩` on the parameter basis.
    pub b: DMatrix<f64>,
}

impl ExactPoint {
    pub fn new(
        patch: &HypersurfacePatch,
        rigging: &Rigging,
        u: &[f64],
        tol: &Tolerances,
    ) -> Result<ExactPoint> {
        let frame = build_rigged_frame(patch, rigging, u, tol)?;
        let christoffel = patch.ambient().christoffel(frame.x().as_slice())?;
        let m = frame.dim();
        let mut b = DMatrix::zeros(m, m);
        for a in 0..m {
            for c in a..m {
                let v = frame.inner(&ambient_hessian(&frame, &christoffel, a, c), &frame.xi);
                b[(a, c)] = v;
                b[(c, a)] = v;
            }
        }
        Ok(ExactPoint { frame, christoffel, b })
    }

    /// `Ȧ_ξ` recovered from `B` through the screen inverse metric.
    pub fn a_xi(&self) -> DMatrix<f64> {
        self.frame.screen_inverse() * &self.b
    }

    pub fn s1_dot(&self) -> f64 {
        self.a_xi().trace()
    }

    pub fn b_frame(&self) -> DMatrix<f64> {
        let f = self.frame.frame_param();
        f.transpose() * &self.b * f
    }

    /// Ambient `∇̄_a ∂_b ψ`.
    pub fn ambient_hessian(&self, a: usize, b: usize) -> DVector<f64> {
        ambient_hessian(&self.frame, &self.christoffel, a, b)
    }

    /// Induced connection `Γ^c_{ab}`, returned as `gamma[c][(a, b)]`.
    pub fn induced_connection(&self) -> Vec<DMatrix<f64>> {
        let m = self.frame.dim();
        let mut out = vec![DMatrix::zeros(m, m); m];
        for a in 0..m {
            for b in a..m {
                let t = self.ambient_hessian(a, b) - &self.frame.n * self.b[(a, b)];
                let coords = self.frame.tangent_coords(&t);
                for c in 0..m {
                    out[c][(a, b)] = coords[c];
                    out[c][(b, a)] = coords[c];
                }
            }
        }
        out
    }
}

fn ambient_hessian(frame: &RiggedFramePoint, gamma: &Christoffel, a: usize, b: usize) -> DVector<f64> {
    let ja = frame.jac().column(a).into_owned();
    let jb = frame.jac().column(b).into_owned();
    frame.embedding.second_at(a, b) + gamma.contract(&ja, &jb)
}

/// Parameter derivatives of the frame fields, one entry per axis.
#[derive(Debug, Clone)]
pub struct FrameDerivatives {
    pub n: Vec<DVector<f64>>,
    pub xi: Vec<DVector<f64>>,
    pub xi_param: Vec<DVector<f64>>,
    pub eta: Vec<DVector<f64>>,
}

pub fn frame_derivatives(
    patch: &HypersurfacePatch,
    rigging: &Rigging,
    u: &[f64],
    tol: &Tolerances,
) -> Result<FrameDerivatives> {
    let (d, m) = (patch.ambient_dim(), patch.dim());
    let step = patch.inner_step(u);
    let mut out = FrameDerivatives { n: vec![], xi: vec![], xi_param: vec![], eta: vec![] };
    for a in 0..m {
        let v = patch.partial(u, a, step, |p| {
            let f = build_rigged_frame(patch, rigging, p, tol)?;
            let mut packed = Vec::with_capacity(2 * d + 2 * m);
            packed.extend(f.n.iter());
            packed.extend(f.xi.iter());
            packed.extend(f.xi_param.iter());
            packed.extend(f.eta.iter());
            Ok(packed)
        })?;
        out.n.push(DVector::from_column_slice(&v[..d]));
        out.xi.push(DVector::from_column_slice(&v[d..2 * d]));
        out.xi_param.push(DVector::from_column_slice(&v[2 * d..2 * d + m]));
        out.eta.push(DVector::from_column_slice(&v[2 * d + m..]));
    }
    Ok(out)
}

/// Extrinsic data at one point.
#[derive(Debug, Clone)]
pub struct ShapePoint {
    pub exact: ExactPoint,
    pub derivs: FrameDerivatives,
    pub tau: DVector<f64>,
    /// Column `a` holds `A_N ∂_a` in parameter components.
    pub a_n: DMatrix<f64>,
    /// Column `a` holds `Ȧ_ξ ∂_a` in parameter components.
    pub a_xi: DMatrix<f64>,
    /// `C_ab = g(A_N ∂_a, ∂_b)`.
    pub c: DMatrix<f64>,
    pub s1_dot: f64,
    pub s1: f64,
    pub mean_curvature: DVector<f64>,
}

pub fn shape_data(
    patch: &HypersurfacePatch,
    rigging: &Rigging,
    u: &[f64],
    tol: &Tolerances,
) -> Result<ShapePoint> {
    let exact = ExactPoint::new(patch, rigging, u, tol)?;
    let derivs = frame_derivatives(patch, rigging, u, tol)?;
    Ok(assemble(exact, derivs))
}

fn assemble(exact: ExactPoint, derivs: FrameDerivatives) -> ShapePoint {
    let f = &exact.frame;
    let m = f.dim();
    let gamma = &exact.christoffel;
    let mut tau = DVector::zeros(m);
    let mut a_n = DMatrix::zeros(m, m);
    let mut a_xi = DMatrix::zeros(m, m);
    for a in 0..m {
        let ja = f.jac().column(a).into_owned();
        let dn = &derivs.n[a] + gamma.contract(&ja, &f.n);
        let dxi = &derivs.xi[a] + gamma.contract(&ja, &f.xi);
        tau[a] = f.inner(&dn, &f.xi);
        for (e, ep) in f.screen.iter().zip(&f.screen_param) {
            let cn = f.inner(&dn, e);
            let cx = f.inner(&dxi, e);
            for c in 0..m {
                a_n[(c, a)] -= cn * ep[c];
                a_xi[(c, a)] -= cx * ep[c];
            }
        }
    }
    let c = a_n.transpose() * &f.induced;
    let s1_dot = a_xi.trace();
    let s1 = a_n.trace();
    let mean_curvature = -(&f.xi * s1) - &f.n * s1_dot;
    ShapePoint { exact, derivs, tau, a_n, a_xi, c, s1_dot, s1, mean_curvature }
}

impl ShapePoint {
    pub fn frame(&self) -> &RiggedFramePoint {
        &self.exact.frame
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.exact.b
    }

    pub fn theta_xi_plus(&self) -> f64 {
        self.s1_dot
    }

    pub fn theta_n_plus(&self) -> f64 {
        -self.s1
    }

    /// `B` on the frame `(ξ, E_1, …, E_n)`.
    pub fn b_frame(&self) -> DMatrix<f64> {
        self.exact.b_frame()
    }

    /// `τ` on the frame `(ξ, E_1, …, E_n)`.
    pub fn tau_frame(&self) -> DVector<f64> {
        self.frame().frame_param().transpose() * &self.tau
    }

    fn screen_matrix(&self, op: &DMatrix<f64>) -> DMatrix<f64> {
        let f = self.frame();
        let s = DMatrix::from_columns(&f.screen_param);
        s.transpose() * &f.induced * op * s
    }

    /// Entry `(i, j)` is the `E_i` component of `A_N E_j`.
    pub fn a_n_screen(&self) -> DMatrix<f64> {
        self.screen_matrix(&self.a_n)
    }

    pub fn a_xi_screen(&self) -> DMatrix<f64> {
        self.screen_matrix(&self.a_xi)
    }

    /// `C(E_i, E_j)`.
    pub fn c_screen(&self) -> DMatrix<f64> {
        let s = DMatrix::from_columns(&self.frame().screen_param);
        s.transpose() * &self.c * s
    }

    /// `A_N` as an endomorphism compared against `λ P`, max-norm over the parameter basis.
    pub fn a_n_minus_multiple_of_p(&self, lambda: f64) -> f64 {
        (&self.a_n - self.frame().projector() * lambda).amax()
    }

    /// Best-fit `φ` with `A_N ≈ φ Ȧ_ξ` on the screen, and the remaining defect.
    pub fn conformal_fit(&self) -> (f64, f64) {
        let an = self.a_n_screen();
        let ax = self.a_xi_screen();
        let den = ax.norm_squared();
        let phi = if den <= 1e-24 * an.norm_squared().max(1.0) { 1.0 } else { an.dot(&ax) / den };
        (phi, (an - ax * phi).amax())
    }
}
