use std::collections::BTreeMap;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::RunConfig;
use super::report::{Check, PointOut, Report, Status};
use crate::analysis::{
    area_variation, expansion_variation, gauss_codazzi_residuals, horizon_classify, lie_drag, newton_trace_residual,
    parallel_mean_curvature_residual, point_records, raychaudhuri_residual, rho_spread, symmetric_epsilons,
    umbilic_ode_residual, DragResult, LeafPatch, PointRecord, SecondOrderPoint,
};
use crate::catalog::{monge_catalog, CatalogPatch};
use crate::error::{GeomError, Result};
use crate::hypersurface::{classify_point, shape_data, HypersurfacePatch, Rigging, StructureResiduals, Tolerances};
use crate::monge::{oracle_gap, trapping_horizon_test};
use crate::rigging::{identity_residuals, seeded_changes, IdentityResiduals, RiggingChange, ZetaSpec};

/// Sample cap for verification suites when no `max_points` is configured.
pub const DEFAULT_VERIFY_POINTS: usize = 64;

/// Default `ε` list for `drag`.
pub const DEFAULT_EPSILONS: [f64; 5] = [-0.01, -0.005, 0.0, 0.005, 0.01];

/// Relative area-variation gap accepted by the `variation` suite.
pub const AREA_GAP: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Raychaudhuri,
    Codazzi,
    Rigging,
    Umbilic,
    MongeOracle,
    Variation,
}

/// Evenly strided subset of the grid, all points when `max ≥ len`.
pub fn sample_points(patch: &HypersurfacePatch, max: usize) -> Vec<Vec<f64>> {
    let all = patch.grid().points();
    if all.len() <= max {
        return all;
    }
    (0..max).map(|i| all[i * all.len() / max].clone()).collect()
}

fn base_point(surface: &str, patch: &HypersurfacePatch, rigging: &Rigging, u: &[f64], tol: &Tolerances) -> Result<PointOut> {
    let s = shape_data(patch, rigging, u, tol)?;
    let class = classify_point(&s, tol.classify)?;
    Ok(PointOut {
        surface: surface.into(),
        u: u.to_vec(),
        eigenvalues: s.frame().eigenvalues.clone(),
        s1_dot: s.s1_dot,
        s1: s.s1,
        theta_xi_plus: s.theta_xi_plus(),
        theta_n_plus: s.theta_n_plus(),
        class: class.label.to_string(),
        residuals: BTreeMap::new(),
        values: [("max_b".to_string(), s.b().amax())].into(),
    })
}

fn structure_map(r: &StructureResiduals) -> BTreeMap<String, f64> {
    [
        ("killing", r.killing),
        ("metric_compatibility", r.metric_compatibility),
        ("d_eta_screen", r.d_eta_screen),
        ("degeneracy", r.degeneracy),
        ("weingarten_b", r.weingarten_b),
        ("weingarten_c", r.weingarten_c),
        ("frame_defect", r.frame_defect),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

fn record_point(surface: &str, p: &PointRecord) -> PointOut {
    PointOut {
        surface: surface.into(),
        u: p.u.clone(),
        eigenvalues: p.eigenvalues.clone(),
        s1_dot: p.s1_dot,
        s1: p.s1,
        theta_xi_plus: p.class.theta_xi_plus,
        theta_n_plus: p.class.theta_n_plus,
        class: p.class.label.to_string(),
        residuals: structure_map(&p.residuals),
        values: [
            ("max_b".to_string(), p.max_b),
            ("s1_dot_exact".to_string(), p.s1_dot_exact),
            ("killing_signed".to_string(), p.residuals.killing_signed),
        ]
        .into(),
    }
}

fn max_value(points: &[PointOut], key: &str) -> f64 {
    points.iter().filter_map(|p| p.values.get(key)).fold(0.0, |m: f64, v| m.max(*v))
}

/// Frame, shape, classification and horizon verdict over the whole grid.
pub fn analyze(cfg: &RunConfig) -> Result<Report> {
    let cp = cfg.build_patch()?;
    let tol = cfg.tolerances;
    let id = cp.id();
    let mut notes = Vec::new();
    let (verdict, records) = match horizon_classify(&cp.patch, &cp.rigging, &tol) {
        Ok(mut v) => {
            let pts = std::mem::take(&mut v.points);
            (Some(v), pts)
        }
        Err(e @ GeomError::NonIntegrableScreen { .. }) => {
            notes.push(format!("no horizon verdict: {e}"));
            (None, point_records(&cp.patch, &cp.rigging, &tol)?)
        }
        Err(e) => return Err(e),
    };
    let points: Vec<PointOut> = records.iter().map(|p| record_point(&id, p)).collect();
    let scale = max_value(&points, "max_b").max(1.0);
    let mut report = Report::new("analyze", json!({}), cfg, points);
    report.check_residuals(&[
        ("frame_defect", tol.identity * scale),
        ("degeneracy", tol.identity * scale),
        ("metric_compatibility", tol.identity * scale),
    ]);
    let monge = match cp.monge_function() {
        Some(f) => Some(trapping_horizon_test(f, cp.patch.grid(), &tol)?),
        None => None,
    };
    if let Some(v) = &verdict {
        report.verdict = v.flags().into_iter().map(String::from).collect();
        if let Some(n) = &v.outer_note {
            notes.push(format!("OUTER undetermined: {n}"));
        }
    }
    report.details = json!({ "surface": id, "horizon": verdict, "monge": monge });
    report.notes = notes;
    Ok(report)
}

pub fn verify(cfg: &RunConfig, suite: Suite) -> Result<Report> {
    let max = cfg.max_points.unwrap_or(DEFAULT_VERIFY_POINTS);
    let args = json!({ "suite": suite });
    match suite {
        Suite::MongeOracle => return monge_oracle(cfg, max, args),
        Suite::Variation => return variation(cfg, args),
        _ => {}
    }
    let cp = cfg.build_patch()?;
    let tol = cfg.tolerances;
    let id = cp.id();
    let (patch, rigging) = (&cp.patch, &cp.rigging);
    let us = sample_points(patch, max);
    let curvature = tol.curvature;
    let identity10 = 10.0 * tol.identity;
    match suite {
        Suite::Raychaudhuri => {
            let points = us
                .par_iter()
                .map(|u| {
                    let mut p = base_point(&id, patch, rigging, u, &tol)?;
                    let r = raychaudhuri_residual(patch, rigging, u, &tol)?;
                    p.residuals.insert("raychaudhuri".into(), r.residual);
                    p.values.insert("ricci_xi_xi".into(), r.ricci_xi_xi);
                    p.values.insert("xi_s1_dot".into(), r.xi_s1_dot);
                    p.values.insert("trace_a_xi_squared".into(), r.trace_a_xi_squared);
                    Ok(p)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut report = Report::new("verify", args, cfg, points);
            report.check_residuals(&[("raychaudhuri", curvature)]);
            Ok(report)
        }
        Suite::Codazzi => {
            let points = us
                .par_iter()
                .map(|u| {
                    let mut p = base_point(&id, patch, rigging, u, &tol)?;
                    let sp = SecondOrderPoint::new(patch, rigging, u, &tol)?;
                    let gc = gauss_codazzi_residuals(patch, &sp, &tol)?;
                    if let serde_json::Value::Object(m) = serde_json::to_value(gc).expect("residuals serialize") {
                        for (k, v) in m {
                            if let Some(x) = v.as_f64() {
                                let target = if k == "c_screen_asymmetry" { &mut p.values } else { &mut p.residuals };
                                target.insert(k, x);
                            }
                        }
                    }
                    let newton = (0..patch.dim())
                        .map(|a| newton_trace_residual(&sp, &DVector::from_fn(patch.dim(), |i, _| f64::from(i == a))))
                        .fold(0.0, f64::max);
                    p.residuals.insert("newton_trace".into(), newton);
                    p.residuals.insert("parallel_mean_curvature".into(), parallel_mean_curvature_residual(&sp));
                    Ok(p)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut report = Report::new("verify", args, cfg, points);
            let names: Vec<String> = report.aggregates.max_residual.keys().cloned().collect();
            let tols: Vec<(&str, f64)> = names.iter().map(|n| (n.as_str(), curvature)).collect();
            report.check_residuals(&tols);
            Ok(report)
        }
        Suite::Rigging => {
            let changes = seeded_changes(patch, rigging, cfg.seed, 3);
            let rescalings: Vec<Rigging> = changes
                .iter()
                .map(|c| RiggingChange { base: c.base.clone(), phi: c.phi.clone(), zeta: ZetaSpec::Zero }.into_rigging())
                .collect();
            let points = us
                .par_iter()
                .map(|u| {
                    let mut p = base_point(&id, patch, rigging, u, &tol)?;
                    let base_mots = p.class == "MOTS" || p.class == "MTS";
                    let mut worst = [0.0f64; 8];
                    for c in &changes {
                        let r = identity_residuals(patch, c, u, &tol)?;
                        for (w, x) in worst.iter_mut().zip(r.items) {
                            *w = w.max(x);
                        }
                    }
                    for (name, w) in IdentityResiduals::NAMES.iter().zip(worst) {
                        p.residuals.insert((*name).into(), w);
                    }
                    let mut flips = 0usize;
                    for r in &rescalings {
                        let s = shape_data(patch, r, u, &tol)?;
                        flips += usize::from(classify_point(&s, tol.classify)?.mots != base_mots);
                    }
                    p.residuals.insert("mots_label_flips".into(), flips as f64);
                    Ok(p)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut report = Report::new("verify", args, cfg, points);
            let mut tols: Vec<(&str, f64)> = IdentityResiduals::NAMES.iter().map(|n| (*n, identity10)).collect();
            tols.push(("mots_label_flips", 0.0));
            report.check_residuals(&tols);
            report.details = json!({
                "changes": changes.iter().map(|c| c.phi.to_string()).collect::<Vec<_>>(),
                "residual_count": IdentityResiduals::NAMES.len(),
            });
            Ok(report)
        }
        Suite::Umbilic => {
            let base = us.par_iter().map(|u| base_point(&id, patch, rigging, u, &tol)).collect::<Result<Vec<_>>>()?;
            let max_b = max_value(&base, "max_b");
            if max_b <= tol.identity {
                let mut report = Report::new("verify", args, cfg, base);
                report.status = Status::Skipped;
                report.notes.push(format!("B ≈ 0 (max |B| = {max_b:.3e}): totally geodesic, umbilic ODE skipped"));
                report.details = json!({ "geodesic": true, "max_b": max_b });
                return Ok(report);
            }
            let not_applicable = |e: GeomError| match e {
                GeomError::NotSpaceForm | GeomError::NotUmbilic { .. } => {
                    GeomError::Config(format!("umbilic suite not applicable: {e}"))
                }
                e => e,
            };
            let points = us
                .par_iter()
                .zip(base)
                .map(|(u, mut p)| {
                    let r = umbilic_ode_residual(patch, rigging, u, &tol).map_err(not_applicable)?;
                    p.residuals.insert("ode_along_xi".into(), r.along_xi);
                    p.residuals.insert("ode_along_screen".into(), r.along_screen);
                    p.values.insert("rho".into(), r.rho);
                    Ok(p)
                })
                .collect::<Result<Vec<_>>>()?;
            let mut report = Report::new("verify", args, cfg, points);
            report.check_residuals(&[("ode_along_xi", identity10), ("ode_along_screen", identity10)]);
            if patch.leaf_axis().is_some() {
                let spread = LeafPatch::all(patch)?
                    .iter()
                    .map(|l| rho_spread(l, rigging, &tol))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .fold(0.0, f64::max);
                report.push_check(Check::at_most("rho_leaf_spread", spread, tol.identity * 1e-4));
            }
            report.details = json!({ "geodesic": false, "max_b": max_b });
            Ok(report)
        }
        Suite::MongeOracle | Suite::Variation => unreachable!("handled above"),
    }
}

fn monge_oracle(cfg: &RunConfig, max: usize, args: serde_json::Value) -> Result<Report> {
    let surfaces = match cfg.surface.as_deref() {
        Some(s) if s.trim_start().starts_with("monge:") => vec![s.to_string()],
        Some(s) => return Err(GeomError::Config(format!("monge-oracle needs a monge:<F> surface, got `{s}`"))),
        None => monge_catalog(3).into_iter().map(|f| format!("monge:{f}")).collect(),
    };
    let tol = cfg.tolerances;
    let mut points = Vec::new();
    for s in &surfaces {
        let run = RunConfig { surface: Some(s.clone()), ..cfg.clone() };
        let cp: CatalogPatch = run.build_patch()?;
        let f = cp.monge_function().expect("monge surface").clone();
        let id = cp.id();
        let us = sample_points(&cp.patch, max);
        let batch = us
            .par_iter()
            .map(|u| {
                let mut p = base_point(&id, &cp.patch, &cp.rigging, u, &tol)?;
                let g = oracle_gap(&cp.patch, &cp.rigging, &f, u, &tol)?;
                if let serde_json::Value::Object(m) = serde_json::to_value(g).expect("gap serializes") {
                    for (k, v) in m {
                        if let Some(x) = v.as_f64() {
                            p.residuals.insert(k, x);
                        }
                    }
                }
                Ok(p)
            })
            .collect::<Result<Vec<_>>>()?;
        points.extend(batch);
    }
    let mut report = Report::new("verify", args, cfg, points);
    let names: Vec<String> = report.aggregates.max_residual.keys().cloned().collect();
    let tols: Vec<(&str, f64)> = names.iter().map(|n| (n.as_str(), tol.identity)).collect();
    report.check_residuals(&tols);
    let ts = report.aggregates.histogram.get("TS").copied().unwrap_or(0);
    report.push_check(Check::at_most("ts_points", ts as f64, 0.0));
    report.details = json!({ "surfaces": surfaces });
    Ok(report)
}

fn default_leaf(patch: &HypersurfacePatch) -> Result<f64> {
    let axis = patch.leaf_axis().ok_or_else(|| GeomError::Config(format!("{}; nothing to drag", GeomError::NoLeafAxis)))?;
    let nodes = patch.grid().axes[axis].nodes();
    Ok(nodes[nodes.len() / 2])
}

fn leaf_points(id: &str, leaf: &LeafPatch, rigging: &Rigging, tol: &Tolerances) -> Result<Vec<PointOut>> {
    leaf.points().par_iter().map(|u| base_point(id, leaf.parent(), rigging, u, tol)).collect()
}

fn variation(cfg: &RunConfig, args: serde_json::Value) -> Result<Report> {
    let cp = cfg.build_patch()?;
    let tol = cfg.tolerances;
    let leaf = LeafPatch::new(&cp.patch, default_leaf(&cp.patch)?)?;
    if !leaf.is_compact() {
        return Err(GeomError::Config(format!(
            "variation suite not applicable: {}",
            GeomError::NonCompactLeaf { what: "area variation".into() }
        )));
    }
    let drag = lie_drag(&leaf, &cp.rigging, &symmetric_epsilons(0.01), &tol)?;
    let area = area_variation(&drag, &leaf, &cp.rigging, &tol)?;
    let ev = expansion_variation(&drag)?;
    let mut report = Report::new("verify", args, cfg, leaf_points(&cp.id(), &leaf, &cp.rigging, &tol)?);
    report.push_check(Check::at_most("area_variation_gap", area.relative_gap, AREA_GAP));
    report.details = json!({
        "leaf": leaf.value(),
        "area_variation": area,
        "delta_n_theta_xi": { "max": ev.theta_xi_max, "min": ev.theta_xi_min },
    });
    Ok(report)
}

/// Drags one leaf along the rigging and records areas and expansions per `ε`.
pub fn drag(cfg: &RunConfig, epsilons: &[f64], leaf_value: Option<f64>) -> Result<(Report, DragResult)> {
    if epsilons.is_empty() || epsilons.iter().any(|e| !e.is_finite()) {
        return Err(GeomError::Config("eps list must be non-empty and finite".into()));
    }
    let cp = cfg.build_patch()?;
    let tol = cfg.tolerances;
    let value = match leaf_value {
        Some(v) => v,
        None => default_leaf(&cp.patch)?,
    };
    let leaf = LeafPatch::new(&cp.patch, value)?;
    let result = lie_drag(&leaf, &cp.rigging, epsilons, &tol)?;
    let args = json!({ "eps": epsilons, "leaf": value });
    let mut report = Report::new("drag", args, cfg, leaf_points(&cp.id(), &leaf, &cp.rigging, &tol)?);
    let rows: Vec<_> = result
        .steps
        .iter()
        .zip(result.mean_expansions())
        .map(|(s, (tx, tn))| json!({ "epsilon": s.epsilon, "area": s.area, "theta_out": tx, "theta_in": tn }))
        .collect();
    let delta = match expansion_variation(&result) {
        Ok(v) => {
            let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
            Some(json!({
                "step": v.step,
                "theta_xi": { "max": v.theta_xi_max, "min": v.theta_xi_min, "mean": mean(&v.theta_xi) },
                "theta_n": { "mean": mean(&v.theta_n) },
            }))
        }
        Err(e) => {
            report.notes.push(format!("no δ_N values: {e}"));
            None
        }
    };
    let area = if result.compact {
        match area_variation(&result, &leaf, &cp.rigging, &tol) {
            Ok(a) => Some(a),
            Err(e) => {
                report.notes.push(format!("no area variation: {e}"));
                None
            }
        }
    } else {
        report.notes.push("leaf is not compact; area columns skipped".into());
        None
    };
    report.details = json!({ "leaf": value, "rows": rows, "delta_n": delta, "area_variation": area });
    Ok((report, result))
}
