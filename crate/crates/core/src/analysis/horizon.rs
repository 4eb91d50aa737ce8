use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use super::drag::{expansion_variation, lie_drag, symmetric_epsilons};
use super::leaf::LeafPatch;
use crate::error::{GeomError, Result};
use crate::hypersurface::{
    classify_point, shape_data, structure_residuals_for, HypersurfacePatch, PointClass, Rigging, StructureResiduals,
    Tolerances, TrappedClass,
};

/// Dragging step used for `δ_N θ_ξ⁺` in the OUTER test.
pub const OUTER_STEP: f64 = 0.01;

#[derive(Debug, Clone, Serialize)]
pub struct PointRecord {
    pub u: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub s1_dot: f64,
    /// `Ṡ₁` from the exact `B` route.
    pub s1_dot_exact: f64,
    pub s1: f64,
    pub max_b: f64,
    pub class: PointClass,
    pub residuals: StructureResiduals,
}

#[derive(Debug, Clone, Serialize)]
pub struct LeafVerdict {
    pub value: f64,
    pub label: TrappedClass,
    pub max_abs_theta_xi: f64,
    pub max_theta_n: f64,
    /// `max δ_N θ_ξ⁺` over the leaf.
    pub delta_n_theta_xi: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct HorizonVerdict {
    pub trapping_horizon: bool,
    pub neh: bool,
    pub future: bool,
    pub outer: Option<bool>,
    pub foth: bool,
    /// `max |Ṡ₁| < band` from the exact route.
    pub minimal: bool,
    pub minimality_consistent: bool,
    pub band: f64,
    pub max_abs_s1_dot: f64,
    pub max_b: f64,
    pub max_theta_n: f64,
    pub max_d_eta_screen: f64,
    pub histogram: BTreeMap<String, usize>,
    pub leaves: Vec<LeafVerdict>,
    pub outer_note: Option<String>,
    #[serde(skip)]
    pub points: Vec<PointRecord>,
}

impl HorizonVerdict {
    pub fn flags(&self) -> Vec<&'static str> {
        let mut f = Vec::new();
        if self.trapping_horizon {
            f.push("TRAPPING_HORIZON");
        }
        if self.neh {
            f.push("NEH");
        }
        if self.future {
            f.push("FUTURE");
        }
        if self.outer == Some(true) {
            f.push("OUTER");
        }
        if self.foth {
            f.push("FOTH");
        }
        f
    }
}

pub fn point_records(patch: &HypersurfacePatch, rigging: &Rigging, tol: &Tolerances) -> Result<Vec<PointRecord>> {
    patch
        .grid()
        .points()
        .par_iter()
        .map(|u| {
            let s = shape_data(patch, rigging, u, tol)?;
            let r = structure_residuals_for(patch, &s)?;
            let class = classify_point(&s, tol.classify)?;
            Ok(PointRecord {
                u: u.clone(),
                eigenvalues: s.frame().eigenvalues.clone(),
                s1_dot: s.s1_dot,
                s1_dot_exact: s.exact.s1_dot(),
                s1: s.s1,
                max_b: s.b().amax(),
                class,
                residuals: r,
            })
        })
        .collect()
}

fn fold_label(classes: &[&PointClass]) -> TrappedClass {
    let all = |f: fn(&PointClass) -> bool| classes.iter().all(|c| f(c));
    if all(|c| c.ts) {
        TrappedClass::Ts
    } else if all(|c| c.mts) {
        TrappedClass::Mts
    } else if all(|c| c.tos) {
        TrappedClass::Tos
    } else if all(|c| c.mots) {
        TrappedClass::Mots
    } else {
        TrappedClass::Untrapped
    }
}

pub fn horizon_classify(patch: &HypersurfacePatch, rigging: &Rigging, tol: &Tolerances) -> Result<HorizonVerdict> {
    let raw = point_records(patch, rigging, tol)?;
    let max_b = raw.iter().fold(0.0f64, |m, p| m.max(p.max_b));
    let band = tol.classify * max_b.max(1.0);
    let max_d_eta_screen = raw.iter().fold(0.0f64, |m, p| m.max(p.residuals.d_eta_screen));
    if max_d_eta_screen > tol.integrable * max_b.max(1.0) {
        return Err(GeomError::NonIntegrableScreen { residual: max_d_eta_screen });
    }
    let points: Vec<PointRecord> = raw
        .into_iter()
        .map(|mut p| {
            p.class = crate::hypersurface::classify_traces(p.s1_dot, p.s1, band);
            p
        })
        .collect();

    let mut histogram: BTreeMap<String, usize> = TrappedClass::ALL.iter().map(|c| (c.to_string(), 0)).collect();
    for p in &points {
        *histogram.entry(p.class.label.to_string()).or_default() += 1;
    }
    let max_abs_s1_dot = points.iter().fold(0.0f64, |m, p| m.max(p.s1_dot.abs()));
    let max_exact = points.iter().fold(0.0f64, |m, p| m.max(p.s1_dot_exact.abs()));
    let max_theta_n = points.iter().fold(f64::NEG_INFINITY, |m, p| m.max(-p.s1));
    let trapping_horizon = points.iter().all(|p| p.class.mots);
    let minimal = max_exact < band;
    let future = max_theta_n < -band;

    let mut leaves = Vec::new();
    let mut outer = None;
    let mut outer_note = None;
    let mut compact = false;
    if let Some(axis) = patch.leaf_axis() {
        let all = LeafPatch::all(patch)?;
        compact = all.iter().all(LeafPatch::is_compact);
        let mut outer_all = true;
        for leaf in &all {
            let on: Vec<&PointRecord> = points.iter().filter(|p| p.u[axis] == leaf.value()).collect();
            let classes: Vec<&PointClass> = on.iter().map(|p| &p.class).collect();
            let delta = match rigging.ambient_extension() {
                Some(_) => match lie_drag(leaf, rigging, &symmetric_epsilons(OUTER_STEP), tol)
                    .and_then(|d| expansion_variation(&d))
                {
                    Ok(v) => Some(v.theta_xi_max),
                    Err(e) => {
                        outer_note = Some(e.to_string());
                        None
                    }
                },
                None => {
                    outer_note = Some(GeomError::NoAmbientRigging.to_string());
                    None
                }
            };
            match delta {
                Some(d) => outer_all &= d < -band,
                None => outer_all = false,
            }
            leaves.push(LeafVerdict {
                value: leaf.value(),
                label: fold_label(&classes),
                max_abs_theta_xi: on.iter().fold(0.0f64, |m, p| m.max(p.s1_dot.abs())),
                max_theta_n: on.iter().fold(f64::NEG_INFINITY, |m, p| m.max(-p.s1)),
                delta_n_theta_xi: delta,
            });
        }
        if outer_note.is_none() {
            outer = Some(outer_all);
        }
    } else {
        outer_note = Some(GeomError::NoLeafAxis.to_string());
    }
    let neh = trapping_horizon && compact;
    Ok(HorizonVerdict {
        trapping_horizon,
        neh,
        future,
        outer,
        foth: trapping_horizon && future && outer == Some(true),
        minimal,
        minimality_consistent: minimal == trapping_horizon,
        band,
        max_abs_s1_dot,
        max_b,
        max_theta_n,
        max_d_eta_screen,
        histogram,
        leaves,
        outer_note,
        points,
    })
}
