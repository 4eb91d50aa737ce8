use nalgebra::DMatrix;
use serde::Serialize;

use super::frame::{FrameResiduals, Rigging};
use super::patch::HypersurfacePatch;
use super::shape::{shape_data, ShapePoint};
use super::Tolerances;
use crate::error::Result;

/// Max-norm residuals of the structural identities at one point.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StructureResiduals {
    /// `L_ξ g − 2B`.
    pub killing: f64,
    /// `L_ξ g + 2B`.
    pub killing_signed: f64,
    /// `(∇g)(U,V,W) − η(V)B(U,W) − η(W)B(U,V)`.
    pub metric_compatibility: f64,
    /// Full exterior derivative of `η`.
    pub d_eta: f64,
    /// `dη` restricted to the screen (Frobenius obstruction).
    pub d_eta_screen: f64,
    pub conformal_factor: f64,
    pub conformal_residual: f64,
    pub umbilic_rho: f64,
    pub umbilic_residual: f64,
    /// `max |B|` on the frame.
    pub geodesic: f64,
    /// `B(·, ξ)` and `Ȧ_ξ ξ`.
    pub degeneracy: f64,
    /// `B(U,V) − g(Ȧ_ξ U, V)`.
    pub weingarten_b: f64,
    /// `C(U,PV)` from `∇̄ PV` against `g(A_N U, V)`.
    pub weingarten_c: f64,
    pub frame_defect: f64,
    pub g_tilde_min_eigenvalue: f64,
}

pub fn structure_residuals(
    patch: &HypersurfacePatch,
    rigging: &Rigging,
    u: &[f64],
    tol: &Tolerances,
) -> Result<StructureResiduals> {
    let shape = shape_data(patch, rigging, u, tol)?;
    structure_residuals_for(patch, &shape)
}

pub fn structure_residuals_for(
    patch: &HypersurfacePatch,
    shape: &ShapePoint,
) -> Result<StructureResiduals> {
    let f = shape.frame();
    let m = f.dim();
    let b = shape.b();
    let u = &f.u;

    let hess: Vec<Vec<_>> =
        (0..m).map(|a| (0..m).map(|c| shape.exact.ambient_hessian(a, c)).collect()).collect();
    let jcol = |a: usize| f.jac().column(a).into_owned();
    // Exact ∂_c g_ab.
    let dg_exact = |c: usize, a: usize, bb: usize| {
        f.inner(&hess[c][a], &jcol(bb)) + f.inner(&jcol(a), &hess[c][bb])
    };

    let g = &f.induced;
    let mut killing: f64 = 0.0;
    let mut killing_signed: f64 = 0.0;
    for a in 0..m {
        for bb in 0..m {
            let mut lie = 0.0;
            for c in 0..m {
                lie += f.xi_param[c] * dg_exact(c, a, bb)
                    + g[(c, bb)] * shape.derivs.xi_param[a][c]
                    + g[(a, c)] * shape.derivs.xi_param[bb][c];
            }
            killing = killing.max((lie - 2.0 * b[(a, bb)]).abs());
            killing_signed = killing_signed.max((lie + 2.0 * b[(a, bb)]).abs());
        }
    }

    let step = patch.inner_step(u);
    let mut dg_fd = Vec::with_capacity(m);
    for c in 0..m {
        let v = patch.partial(u, c, step, |p| {
            let emb = patch.embedding_jet(p)?;
            let gbar = patch.ambient().metric_at(emb.x.as_slice())?;
            Ok(patch.induced_metric(&emb.jac, &gbar).as_slice().to_vec())
        })?;
        dg_fd.push(DMatrix::from_column_slice(m, m, &v));
    }
    let conn = shape.exact.induced_connection();
    let eta = &f.eta;
    let mut compat: f64 = 0.0;
    for c in 0..m {
        for a in 0..m {
            for bb in 0..m {
                let mut cov = dg_fd[c][(a, bb)];
                for e in 0..m {
                    cov -= conn[e][(c, a)] * g[(e, bb)] + conn[e][(c, bb)] * g[(a, e)];
                }
                let predicted = eta[a] * b[(c, bb)] + eta[bb] * b[(c, a)];
                compat = compat.max((cov - predicted).abs());
            }
        }
    }

    let mut deta = DMatrix::zeros(m, m);
    for a in 0..m {
        for bb in 0..m {
            deta[(a, bb)] = shape.derivs.eta[a][bb] - shape.derivs.eta[bb][a];
        }
    }
    let mut deta_screen: f64 = 0.0;
    for ei in &f.screen_param {
        for ej in &f.screen_param {
            deta_screen = deta_screen.max((ei.transpose() * &deta * ej)[(0, 0)].abs());
        }
    }

    let (conformal_factor, conformal_residual) = shape.conformal_fit();
    let n = f.screen_dim() as f64;
    let bf = shape.b_frame();
    let rho = (1..bf.nrows()).map(|i| bf[(i, i)]).sum::<f64>() / n;
    let umbilic_residual = (b - g * rho).amax();

    let degeneracy = (b * &f.xi_param).amax().max((&shape.a_xi * &f.xi_param).amax());
    let weingarten_b = (b - shape.a_xi.transpose() * g).amax();

    let mut weingarten_c: f64 = 0.0;
    for a in 0..m {
        for bb in 0..m {
            let direct = f.inner(&hess[a][bb], &f.n) - shape.derivs.eta[a][bb] + eta[bb] * shape.tau[a];
            weingarten_c = weingarten_c.max((direct - shape.c[(a, bb)]).abs());
        }
    }

    let fr: FrameResiduals = f.residuals();
    Ok(StructureResiduals {
        killing,
        killing_signed,
        metric_compatibility: compat,
        d_eta: deta.amax(),
        d_eta_screen: deta_screen,
        conformal_factor,
        conformal_residual,
        umbilic_rho: rho,
        umbilic_residual,
        geodesic: bf.amax(),
        degeneracy,
        weingarten_b,
        weingarten_c,
        frame_defect: fr.max_defect(),
        g_tilde_min_eigenvalue: fr.g_tilde_min_eigenvalue,
    })
}
