use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use super::leaf::LeafPatch;
use crate::error::{GeomError, Result};
use crate::expr::Expr;
use crate::hypersurface::{shape_data, HypersurfacePatch, Rigging, Tolerances};

/// RK4 steps per `|ε|`: the step never exceeds `|ε| / RK4_STEPS`.
pub const RK4_STEPS: usize = 64;

/// Dragged leaf geometry at one `ε`.
#[derive(Debug, Clone, Serialize)]
pub struct DraggedLeaf {
    pub epsilon: f64,
    /// Ambient positions, one per leaf grid point.
    pub points: Vec<Vec<f64>>,
    /// `θ_ξ⁺ = Ṡ₁` per point.
    pub theta_xi: Vec<f64>,
    /// `θ_N⁺ = −S₁` per point.
    pub theta_n: Vec<f64>,
    /// `√det h` per point.
    pub area_density: Vec<f64>,
    /// Quadrature area; `None` on non-compact leaves.
    pub area: Option<f64>,
}

impl DraggedLeaf {
    fn weighted_mean(&self, v: &[f64], weights: &[f64]) -> f64 {
        let (mut num, mut den) = (0.0, 0.0);
        for ((x, w), a) in v.iter().zip(weights).zip(&self.area_density) {
            num += x * w * a;
            den += w * a;
        }
        num / den
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DragResult {
    pub leaf_value: f64,
    pub weights: Vec<f64>,
    pub compact: bool,
    pub steps: Vec<DraggedLeaf>,
}

impl DragResult {
    pub fn epsilons(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.epsilon).collect()
    }

    pub fn at(&self, eps: f64) -> Option<&DraggedLeaf> {
        self.steps.iter().find(|s| (s.epsilon - eps).abs() <= 1e-14 * (1.0 + eps.abs()))
    }

    /// Area-weighted leaf means of `(θ_ξ⁺, θ_N⁺)` at each step.
    pub fn mean_expansions(&self) -> Vec<(f64, f64)> {
        self.steps
            .iter()
            .map(|s| (s.weighted_mean(&s.theta_xi, &self.weights), s.weighted_mean(&s.theta_n, &self.weights)))
            .collect()
    }

    /// CSV with header `epsilon,area,theta_out,theta_in`; areas of non-compact leaves read `skipped`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,area,theta_out,theta_in\n");
        for (s, (tx, tn)) in self.steps.iter().zip(self.mean_expansions()) {
            let area = s.area.map_or_else(|| "skipped".to_string(), |a| format!("{a:.16e}"));
            let _ = writeln!(out, "{:.16e},{area},{tx:.16e},{tn:.16e}", s.epsilon);
        }
        out
    }
}

/// `ε` list `{−h, −h/2, 0, h/2, h}` used for central differences.
pub fn symmetric_epsilons(h: f64) -> Vec<f64> {
    vec![-h, -h / 2.0, 0.0, h / 2.0, h]
}

/// Flow state: position, leaf tangents `J_i` and their second derivatives `K_ij`.
#[derive(Debug, Clone)]
struct State {
    x: DVector<f64>,
    j: Vec<DVector<f64>>,
    k: Vec<DVector<f64>>,
}

impl State {
    fn axpy(&self, h: f64, d: &State) -> State {
        State {
            x: &self.x + &d.x * h,
            j: self.j.iter().zip(&d.j).map(|(a, b)| a + b * h).collect(),
            k: self.k.iter().zip(&d.k).map(|(a, b)| a + b * h).collect(),
        }
    }
}

fn rhs(field: &[Expr], s: &State, n: usize) -> Result<State> {
    let d = s.x.len();
    let mut l = DVector::zeros(d);
    let mut dl = DMatrix::zeros(d, d);
    let mut hess = Vec::with_capacity(d);
    for (c, e) in field.iter().enumerate() {
        if e.is_constant() {
            l[c] = e.eval(s.x.as_slice())?;
            hess.push(DMatrix::zeros(d, d));
            continue;
        }
        let jet = e.jet(s.x.as_slice())?;
        l[c] = jet.value();
        for a in 0..d {
            dl[(c, a)] = jet.grad()[a];
        }
        hess.push(jet.hessian());
    }
    let j: Vec<DVector<f64>> = s.j.iter().map(|v| &dl * v).collect();
    let mut k = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            let mut v = &dl * &s.k[a * n + b];
            for c in 0..d {
                v[c] += s.j[a].dot(&(&hess[c] * &s.j[b]));
            }
            k.push(v);
        }
    }
    Ok(State { x: l, j, k })
}

fn rk4(field: &[Expr], start: &State, from: f64, to: f64, steps: usize, n: usize) -> Result<State> {
    let h = (to - from) / steps as f64;
    let mut s = start.clone();
    for _ in 0..steps {
        let k1 = rhs(field, &s, n)?;
        let k2 = rhs(field, &s.axpy(h / 2.0, &k1), n)?;
        let k3 = rhs(field, &s.axpy(h / 2.0, &k2), n)?;
        let k4 = rhs(field, &s.axpy(h, &k3), n)?;
        let mut next = s.axpy(h / 6.0, &k1);
        next = next.axpy(h / 3.0, &k2);
        next = next.axpy(h / 3.0, &k3);
        s = next.axpy(h / 6.0, &k4);
        if !s.x.iter().all(|v| v.is_finite()) {
            return Err(GeomError::Integrator(format!("non-finite state at ε = {to}")));
        }
    }
    Ok(s)
}

/// Flows `start` to every `ε` in `eps`, chaining outward from 0 on each side with
/// steps no longer than `|ε| / RK4_STEPS` for the target being approached.
fn integrate_all(field: &[Expr], start: &State, eps: &[f64], n: usize) -> Result<Vec<State>> {
    let mut out: Vec<Option<State>> = vec![None; eps.len()];
    for sign in [1.0, -1.0] {
        let mut order: Vec<usize> = (0..eps.len()).filter(|&i| eps[i] * sign > 0.0).collect();
        order.sort_by(|&a, &b| eps[a].abs().total_cmp(&eps[b].abs()));
        let (mut at, mut state) = (0.0, start.clone());
        for i in order {
            let to = eps[i];
            let steps = ((RK4_STEPS as f64) * (to - at).abs() / to.abs()).ceil().max(1.0) as usize;
            state = rk4(field, &state, at, to, steps, n)?;
            at = to;
            out[i] = Some(state.clone());
        }
    }
    Ok(out.into_iter().map(|s| s.unwrap_or_else(|| start.clone())).collect())
}

struct PointGeometry {
    theta_xi: f64,
    theta_n: f64,
    density: f64,
}

/// Re-solves the null normal pair of the dragged surface and takes traces.
fn dragged_geometry(
    patch: &HypersurfacePatch,
    field: &[Expr],
    s: &State,
    n: usize,
) -> Result<PointGeometry> {
    let x = s.x.as_slice();
    let gbar = patch.ambient().metric_at(x)?;
    let gamma = patch.ambient().christoffel(x)?;
    let d = x.len();
    let jm = DMatrix::from_columns(&s.j);
    let h = jm.transpose() * &gbar * &jm;
    let h = (&h + h.transpose()) * 0.5;
    let eig = h.clone().symmetric_eigenvalues();
    if eig.min() <= 0.0 {
        return Err(GeomError::NotSpacelike { point: x.to_vec() });
    }
    let hinv = h.clone().try_inverse().ok_or_else(|| GeomError::NotSpacelike { point: x.to_vec() })?;
    let q = DMatrix::identity(d, d) - &jm * &hinv * jm.transpose() * &gbar;
    let svd = q.clone().svd(true, false);
    let uu = svd.u.ok_or_else(|| GeomError::Integrator("normal-space SVD failed".into()))?;
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let basis = [uu.column(order[0]).into_owned(), uu.column(order[1]).into_owned()];
    let gram = DMatrix::from_fn(2, 2, |a, b| basis[a].dot(&(&gbar * &basis[b])));
    let se = SymmetricEigen::new(gram);
    let (neg, pos) = if se.eigenvalues[0] < se.eigenvalues[1] { (0, 1) } else { (1, 0) };
    if se.eigenvalues[neg] >= 0.0 || se.eigenvalues[pos] <= 0.0 {
        return Err(GeomError::NotSpacelike { point: x.to_vec() });
    }
    let comb = |k: usize| {
        let v = se.eigenvectors.column(k);
        (&basis[0] * v[0] + &basis[1] * v[1]) / se.eigenvalues[k].abs().sqrt()
    };
    let (et, es) = (comb(neg), comb(pos));
    let lp = &et + &es;
    let lm = &et - &es;
    let ip = |a: &DVector<f64>, b: &DVector<f64>| a.dot(&(&gbar * b));
    let l = DVector::from_vec(field.iter().map(|e| e.eval(x)).collect::<Result<Vec<_>>>()?);
    let ql = &q * &l;
    let pair = ip(&lp, &lm);
    let (cp, cm) = (ip(&ql, &lm) / pair, ip(&ql, &lp) / pair);
    let (nv, other) = if cp.abs() >= cm.abs() { (&lp * cp, lm) } else { (&lm * cm, lp) };
    let xi = &other / ip(&other, &nv);

    let (mut tx, mut tn) = (0.0, 0.0);
    for a in 0..n {
        for b in 0..n {
            let acc = &s.k[a * n + b] + gamma.contract(&s.j[a], &s.j[b]);
            tx += hinv[(a, b)] * ip(&acc, &xi);
            tn -= hinv[(a, b)] * ip(&acc, &nv);
        }
    }
    Ok(PointGeometry { theta_xi: tx, theta_n: tn, density: h.determinant().sqrt() })
}

/// Drags each leaf point along the ambient rigging field for every `ε` in `epsilons`.
pub fn lie_drag(leaf: &LeafPatch, rigging: &Rigging, epsilons: &[f64], tol: &Tolerances) -> Result<DragResult> {
    let field = rigging.ambient_extension().ok_or(GeomError::NoAmbientRigging)?;
    let patch = leaf.parent();
    let dirs = leaf.directions().to_vec();
    let n = dirs.len();
    let points = leaf.points();
    let starts: Vec<State> = points
        .iter()
        .map(|u| {
            let emb = patch.embedding_jet(u)?;
            let gbar = patch.ambient().metric_at(emb.x.as_slice())?;
            let l = DVector::from_vec(field.iter().map(|e| e.eval(emb.x.as_slice())).collect::<Result<Vec<_>>>()?);
            let norm = l.dot(&(&gbar * &l));
            if norm.abs() > tol.null * l.norm_squared().max(1.0) * 1e2 {
                return Err(GeomError::Config(format!(
                    "dragging needs a null rigging field; <L,L> = {norm:.3e} at {u:?}"
                )));
            }
            let j = dirs.iter().map(|&a| emb.jac.column(a).into_owned()).collect();
            let mut k = Vec::with_capacity(n * n);
            for &a in &dirs {
                for &b in &dirs {
                    k.push(emb.second_at(a, b));
                }
            }
            Ok(State { x: emb.x.clone(), j, k })
        })
        .collect::<Result<_>>()?;
    let weights = leaf.weights();
    let compact = leaf.is_compact();
    let flows: Vec<Vec<(Vec<f64>, PointGeometry)>> = starts
        .par_iter()
        .map(|s| {
            integrate_all(field, s, epsilons, n)?
                .into_iter()
                .map(|end| Ok((end.x.as_slice().to_vec(), dragged_geometry(patch, field, &end, n)?)))
                .collect()
        })
        .collect::<Result<_>>()?;
    let mut steps = Vec::with_capacity(epsilons.len());
    for (k, &eps) in epsilons.iter().enumerate() {
        let mut step = DraggedLeaf {
            epsilon: eps,
            points: Vec::with_capacity(flows.len()),
            theta_xi: Vec::with_capacity(flows.len()),
            theta_n: Vec::with_capacity(flows.len()),
            area_density: Vec::with_capacity(flows.len()),
            area: None,
        };
        for f in &flows {
            let (x, g) = &f[k];
            step.points.push(x.clone());
            step.theta_xi.push(g.theta_xi);
            step.theta_n.push(g.theta_n);
            step.area_density.push(g.density);
        }
        step.area = compact.then(|| step.area_density.iter().zip(&weights).map(|(a, w)| a * w).sum());
        steps.push(step);
    }
    Ok(DragResult { leaf_value: leaf.value(), weights, compact, steps })
}

/// Largest `h > 0` with `±h` and `±h/2` all present.
fn central_step(drag: &DragResult) -> Result<f64> {
    let eps = drag.epsilons();
    let has = |e: f64| drag.at(e).is_some();
    eps.iter()
        .copied()
        .filter(|&h| h > 0.0 && has(-h) && has(h / 2.0) && has(-h / 2.0))
        .fold(None, |m: Option<f64>, h| Some(m.map_or(h, |m| m.max(h))))
        .ok_or_else(|| GeomError::Config("ε list needs ±h and ±h/2 for a central difference".into()))
}

fn richardson(drag: &DragResult, h: f64, pick: impl Fn(&DraggedLeaf) -> Vec<f64>) -> Vec<f64> {
    let f = |e: f64| pick(drag.at(e).expect("checked by central_step"));
    let (a, b, c, d) = (f(h), f(-h), f(h / 2.0), f(-h / 2.0));
    (0..a.len())
        .map(|i| {
            let d1 = (a[i] - b[i]) / (2.0 * h);
            let d2 = (c[i] - d[i]) / h;
            (4.0 * d2 - d1) / 3.0
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct ExpansionVariation {
    pub step: f64,
    /// `δ_N θ_ξ⁺` per leaf point.
    pub theta_xi: Vec<f64>,
    /// `δ_N θ_N⁺` per leaf point.
    pub theta_n: Vec<f64>,
    pub theta_xi_max: f64,
    pub theta_xi_min: f64,
}

pub fn expansion_variation(drag: &DragResult) -> Result<ExpansionVariation> {
    let h = central_step(drag)?;
    let tx = richardson(drag, h, |s| s.theta_xi.clone());
    let tn = richardson(drag, h, |s| s.theta_n.clone());
    let max = tx.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = tx.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(ExpansionVariation { step: h, theta_xi: tx, theta_n: tn, theta_xi_max: max, theta_xi_min: min })
}

#[derive(Debug, Clone, Serialize)]
pub struct AreaVariation {
    pub d_area: f64,
    /// `∫⟨H,N⟩ dA` over the undragged leaf.
    pub integral: f64,
    pub relative_gap: f64,
    pub integral_theta_xi: f64,
    pub integral_theta_n: f64,
    /// Which expansion the integrand `⟨H,N⟩` equals: `theta_n_plus`, `theta_xi_plus`, `both` or `neither`.
    pub integrand: String,
}

pub fn area_variation(drag: &DragResult, leaf: &LeafPatch, rigging: &Rigging, tol: &Tolerances) -> Result<AreaVariation> {
    if !drag.compact {
        return Err(GeomError::NonCompactLeaf { what: "area variation".into() });
    }
    let h = central_step(drag)?;
    let d_area = richardson(drag, h, |s| vec![s.area.unwrap_or(f64::NAN)])[0];
    let patch = leaf.parent();
    let (mut integral, mut ixi, mut in_) = (0.0, 0.0, 0.0);
    let (mut dev_n, mut dev_xi): (f64, f64) = (0.0, 0.0);
    for (u, w) in leaf.points().iter().zip(leaf.weights()) {
        let s = shape_data(patch, rigging, u, tol)?;
        let f = s.frame();
        let (hm, _) = leaf.metric_jet(u)?;
        let da = hm.determinant().sqrt() * w;
        let hn = f.inner(&s.mean_curvature, &f.n);
        integral += hn * da;
        ixi += s.theta_xi_plus() * da;
        in_ += s.theta_n_plus() * da;
        dev_n = dev_n.max((hn - s.theta_n_plus()).abs());
        dev_xi = dev_xi.max((hn - s.theta_xi_plus()).abs());
    }
    let band = tol.identity;
    let integrand = match (dev_n <= band, dev_xi <= band) {
        (true, true) => "both",
        (true, false) => "theta_n_plus",
        (false, true) => "theta_xi_plus",
        (false, false) => "neither",
    };
    let relative_gap = (d_area - integral).abs() / d_area.abs().max(1e-8);
    Ok(AreaVariation {
        d_area,
        integral,
        relative_gap,
        integral_theta_xi: ixi,
        integral_theta_n: in_,
        integrand: integrand.into(),
    })
}
