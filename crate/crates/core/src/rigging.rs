//! Change of rigging `Ñ = φN + ζ` and the two-path check of its transformation rules.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{GeomError, Result};
use crate::expr::Expr;
use crate::hypersurface::{build_rigged_frame, shape_data, HypersurfacePatch, RiggedFramePoint, Rigging, Tolerances};

/// How the tangent part `ζ` is obtained at each point.
#[derive(Debug, Clone)]
pub enum ZetaSpec {
    Zero,
    /// Parameter components taken as given.
    Raw(Vec<Expr>),
    /// `a ξ + s P w` with `s` fixed pointwise by the null condition.
    Rescaled(Vec<Expr>),
    /// `P w − g(Pw, Pw)/(2φ) ξ`.
    NullCompleted(Vec<Expr>),
}

#[derive(Debug, Clone)]
pub struct RiggingChange {
    pub base: Rigging,
    pub phi: Expr,
    pub zeta: ZetaSpec,
}

fn eval_all(exprs: &[Expr], u: &[f64]) -> Result<DVector<f64>> {
    Ok(DVector::from_vec(exprs.iter().map(|e| e.eval(u)).collect::<Result<Vec<_>>>()?))
}

impl RiggingChange {
    pub fn identity(patch: &HypersurfacePatch, base: Rigging) -> RiggingChange {
        RiggingChange { base, phi: Expr::constant(1.0, patch.chart()), zeta: ZetaSpec::Zero }
    }

    pub fn phi_at(&self, u: &[f64]) -> Result<f64> {
        let phi = self.phi.eval(u)?;
        if phi == 0.0 {
            return Err(GeomError::ZeroPhi { point: u.to_vec() });
        }
        if phi < 0.0 {
            return Err(GeomError::OrientationReversing { point: u.to_vec() });
        }
        Ok(phi)
    }

    /// `ζ` in parameter components, given the base frame at the same point.
    pub fn zeta_at(&self, base: &RiggedFramePoint, phi: f64, tol: &Tolerances) -> Result<DVector<f64>> {
        let m = base.dim();
        let u = &base.u;
        let g = &base.induced;
        match &self.zeta {
            ZetaSpec::Zero => Ok(DVector::zeros(m)),
            ZetaSpec::Raw(e) => eval_all(e, u),
            ZetaSpec::NullCompleted(e) => {
                let pw = base.projector() * eval_all(e, u)?;
                let q = pw.dot(&(g * &pw));
                Ok(&pw - &base.xi_param * (q / (2.0 * phi)))
            }
            ZetaSpec::Rescaled(e) => {
                let w = eval_all(e, u)?;
                let a = base.eta.dot(&w);
                let pw = base.projector() * &w;
                let q = pw.dot(&(g * &pw));
                let scale = w.amax().max(1.0);
                let a_zero = a.abs() <= tol.null * scale;
                let q_zero = q.abs() <= tol.null * scale * scale;
                let s2 = match (a_zero, q_zero) {
                    (true, true) => return Ok(DVector::zeros(m)),
                    (true, false) => {
                        return Err(GeomError::InadmissibleZeta {
                            reason: format!("η(ζ) = 0 with nonzero screen part at {u:?}"),
                        })
                    }
                    (false, true) => {
                        return Err(GeomError::InadmissibleZeta {
                            reason: format!("η(ζ) = {a:e} with vanishing screen part at {u:?}"),
                        })
                    }
                    (false, false) => -2.0 * phi * a / q,
                };
                if s2 < 0.0 {
                    return Err(GeomError::InadmissibleZeta {
                        reason: format!("null condition needs s² = {s2:e} < 0 at {u:?}"),
                    });
                }
                Ok(&base.xi_param * a + pw * s2.sqrt())
            }
        }
    }

    /// `φN + ζ` built from the base frame at `u`.
    pub fn rigging_at(&self, patch: &HypersurfacePatch, u: &[f64], tol: &Tolerances) -> Result<DVector<f64>> {
        let base = build_rigged_frame(patch, &self.base, u, tol)?;
        let phi = self.phi_at(u)?;
        let zeta = self.zeta_at(&base, phi, tol)?;
        Ok(&base.n * phi + base.jac() * zeta)
    }

    /// `2φη(ζ) + g(ζ,ζ)` at `u`.
    pub fn null_defect(&self, base: &RiggedFramePoint, phi: f64, tol: &Tolerances) -> Result<f64> {
        let z = self.zeta_at(base, phi, tol)?;
        Ok(2.0 * phi * base.eta.dot(&z) + z.dot(&(&base.induced * &z)))
    }

    pub fn into_rigging(self) -> Rigging {
        Rigging::Changed(Box::new(self))
    }
}

/// Validates `φ` and `ζ` over the patch grid. With `null_required`, a raw `ζ` that breaks the
/// null condition somewhere is replaced by its screen-rescaled version, or rejected.
pub fn make_change(
    patch: &HypersurfacePatch,
    base: Rigging,
    phi: Expr,
    zeta: Option<Vec<Expr>>,
    null_required: bool,
    tol: &Tolerances,
) -> Result<RiggingChange> {
    if phi.chart() != patch.chart() {
        return Err(GeomError::Config("φ must be written over the patch chart".into()));
    }
    let zeta = match zeta {
        None => ZetaSpec::Zero,
        Some(z) => {
            if z.len() != patch.dim() {
                return Err(GeomError::DimensionMismatch { expected: patch.dim(), got: z.len() });
            }
            if z.iter().any(|e| e.chart() != patch.chart()) {
                return Err(GeomError::Config("ζ must be written over the patch chart".into()));
            }
            ZetaSpec::Raw(z)
        }
    };
    let mut change = RiggingChange { base, phi, zeta };
    let points = patch.grid().points();
    for u in &points {
        change.phi_at(u)?;
    }
    if null_required {
        if let ZetaSpec::Raw(z) = &change.zeta {
            let mut violated = false;
            for u in &points {
                let f = build_rigged_frame(patch, &change.base, u, tol)?;
                let phi = change.phi_at(u)?;
                let scale = f.n.amax().max(1.0);
                if change.null_defect(&f, phi, tol)?.abs() > tol.null * scale * scale {
                    violated = true;
                    break;
                }
            }
            if violated {
                change.zeta = ZetaSpec::Rescaled(z.clone());
                for u in &points {
                    let f = build_rigged_frame(patch, &change.base, u, tol)?;
                    let phi = change.phi_at(u)?;
                    change.zeta_at(&f, phi, tol)?;
                }
            }
        }
    }
    Ok(change)
}

/// Right-hand sides of the transformation rules, from base-rigging data only.
#[derive(Debug, Clone)]
pub struct TransformedQuantities {
    pub phi: f64,
    pub zeta: DVector<f64>,
    /// Item ❷: `2φη(ζ) + g(ζ,ζ)`.
    pub null_defect: f64,
    pub xi: DVector<f64>,
    pub b: DMatrix<f64>,
    pub projector: DMatrix<f64>,
    /// `connection[c][(a, b)]`.
    pub connection: Vec<DMatrix<f64>>,
    pub tau: DVector<f64>,
    pub a_xi: DMatrix<f64>,
    pub a_n: DMatrix<f64>,
}

fn zeta_field(
    patch: &HypersurfacePatch,
    change: &RiggingChange,
    u: &[f64],
    tol: &Tolerances,
) -> Result<Vec<f64>> {
    let f = build_rigged_frame(patch, &change.base, u, tol)?;
    let phi = change.phi_at(u)?;
    Ok(change.zeta_at(&f, phi, tol)?.as_slice().to_vec())
}

pub fn transformed_quantities(
    patch: &HypersurfacePatch,
    change: &RiggingChange,
    u: &[f64],
    tol: &Tolerances,
) -> Result<TransformedQuantities> {
    let base = shape_data(patch, &change.base, u, tol)?;
    let f = base.frame();
    let m = f.dim();
    let phi_jet = change.phi.jet(u)?;
    let phi = change.phi_at(u)?;
    let zeta = change.zeta_at(f, phi, tol)?;
    let g = &f.induced;
    let b = base.b();
    let null_defect = 2.0 * phi * f.eta.dot(&zeta) + zeta.dot(&(g * &zeta));

    let dln = DVector::from_fn(m, |a, _| phi_jet.grad()[a] / phi);
    let b_zeta = b * &zeta;
    let tau = &base.tau + &dln + &b_zeta / phi;

    let xi = &f.xi / phi;
    let projector = f.projector() - &f.xi_param * (g * &zeta).transpose() / phi;
    let mut connection = base.exact.induced_connection();
    for (c, gamma) in connection.iter_mut().enumerate() {
        *gamma -= b * (zeta[c] / phi);
    }
    let a_xi = &base.a_xi / phi - &f.xi_param * b_zeta.transpose() / (phi * phi);

    let step = patch.inner_step(u);
    let base_conn = base.exact.induced_connection();
    let mut nabla_zeta = DMatrix::zeros(m, m);
    for a in 0..m {
        let dz = patch.partial(u, a, step, |p| zeta_field(patch, change, p, tol))?;
        for c in 0..m {
            let mut v = dz[c];
            for bb in 0..m {
                v += base_conn[c][(a, bb)] * zeta[bb];
            }
            nabla_zeta[(c, a)] = v;
        }
    }
    let a_n = &base.a_n * phi - nabla_zeta + &zeta * tau.transpose();

    Ok(TransformedQuantities { phi, zeta, null_defect, xi, b: b / phi, projector, connection, tau, a_xi, a_n })
}

/// Max-norm gap per rule between the predicted value and a from-scratch rebuild with `Ñ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IdentityResiduals {
    pub items: [f64; 8],
}

impl IdentityResiduals {
    pub const NAMES: [&'static str; 8] =
        ["xi", "null_condition", "b", "projector", "connection", "tau", "a_xi", "a_n"];

    pub fn max(&self) -> f64 {
        self.items.iter().copied().fold(0.0, f64::max)
    }
}

pub fn identity_residuals(
    patch: &HypersurfacePatch,
    change: &RiggingChange,
    u: &[f64],
    tol: &Tolerances,
) -> Result<IdentityResiduals> {
    let pred = transformed_quantities(patch, change, u, tol)?;
    let rigging = change.clone().into_rigging();
    let re = shape_data(patch, &rigging, u, tol)?;
    let f = re.frame();
    let conn = re.exact.induced_connection();
    let conn_gap = conn.iter().zip(&pred.connection).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max);
    let null_gap = pred.null_defect.abs().max((&f.n - &f.rigging).amax());
    Ok(IdentityResiduals {
        items: [
            (&f.xi - &pred.xi).amax(),
            null_gap,
            (re.b() - &pred.b).amax(),
            (f.projector() - &pred.projector).amax(),
            conn_gap,
            (&re.tau - &pred.tau).amax(),
            (&re.a_xi - &pred.a_xi).amax(),
            (&re.a_n - &pred.a_n).amax(),
        ],
    })
}

/// Pseudo-random admissible changes: smooth positive `φ`, and `ζ` either zero or null-completed.
pub fn seeded_changes(patch: &HypersurfacePatch, base: &Rigging, seed: u64, count: usize) -> Vec<RiggingChange> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chart = patch.chart();
    let m = patch.dim();
    (0..count)
        .map(|k| {
            let amp: f64 = rng.gen_range(0.05..0.2);
            let mut arg = format!("{:.6}", rng.gen_range(-1.0..1.0f64));
            for v in chart {
                arg.push_str(&format!(" + {:.6}*{v}", rng.gen_range(-0.5..0.5f64)));
            }
            let phi_text = format!("{:.6} + {amp:.6}*sin({arg})", rng.gen_range(0.8..1.5f64));
            let phi = Expr::parse(&phi_text, chart).expect("generated φ parses");
            let zeta = if k == 0 {
                ZetaSpec::Zero
            } else {
                let comps = (0..m)
                    .map(|_| {
                        let text = format!("{:.6}", rng.gen_range(-0.3..0.3f64));
                        Expr::parse(&text, chart).expect("constant parses")
                    })
                    .collect();
                ZetaSpec::NullCompleted(comps)
            };
            RiggingChange { base: base.clone(), phi, zeta }
        })
        .collect()
}
