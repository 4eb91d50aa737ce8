mod common;

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use nullgeom::catalog::{resolve_surface, schwarzschild_horizon, warped6d_plane, CatalogPatch};
use nullgeom::grid::{Axis, AxisKind, Grid};
use nullgeom::hypersurface::{
    build_rigged_frame, classify_traces, induced_metric_and_radical, shape_data, structure_residuals, Rigging,
    TrappedClass,
};
use nullgeom::{GeomError, HypersurfacePatch, MetricSpec, Tolerances};

use common::{catalog_patches, strided, with_points};

fn scaled(r: &Rigging, c: f64) -> Rigging {
    let wrap = |es: &[nullgeom::Expr]| -> Vec<String> { es.iter().map(|e| format!("{c}*({e})")).collect() };
    match r {
        Rigging::Ambient(es) => Rigging::Ambient(
            wrap(es).iter().zip(es).map(|(t, e)| nullgeom::Expr::parse(t, e.chart()).unwrap()).collect(),
        ),
        Rigging::Parameter(es) => Rigging::Parameter(
            wrap(es).iter().zip(es).map(|(t, e)| nullgeom::Expr::parse(t, e.chart()).unwrap()).collect(),
        ),
        Rigging::Changed(_) => panic!("catalog riggings are explicit"),
    }
}

#[test]
fn frame_and_shape_invariants_on_every_catalog_patch() {
    let tol = Tolerances::default();
    for cp in catalog_patches(5) {
        for u in strided(&cp, 300) {
            let s = shape_data(&cp.patch, &cp.rigging, &u, &tol).unwrap();
            let f = s.frame();
            let r = f.residuals();
            let id = cp.id();
            assert!(r.max_defect() < tol.null, "{id} frame at {u:?}: {r:?}");
            assert!(r.g_tilde_min_eigenvalue > 0.0, "{id} g~ at {u:?}");
            for e in &f.screen {
                let coords = f.tangent_coords(e);
                assert!((&f.embedding.jac * coords - e).amax() < 1e-10, "{id} screen tangent");
            }
            let b = s.b();
            let scale = b.amax().max(1.0);
            assert!((b - b.transpose()).amax() < 1e-12 * scale, "{id} B symmetric");
            assert!((b * &f.xi_param).amax() < 1e-9 * scale, "{id} B(.,xi)");
            assert!((&s.a_xi * &f.xi_param).amax() < 1e-6 * scale, "{id} A_xi xi");
            assert!((f.eta.transpose() * &s.a_xi).amax() < 1e-6 * scale, "{id} A_xi screen-valued");
            assert!((f.eta.transpose() * &s.a_n).amax() < 1e-6 * scale, "{id} A_N screen-valued");
            let h = -(&f.xi * s.s1) - &f.n * s.s1_dot;
            assert!((&s.mean_curvature - h).amax() < 1e-12 * scale);
            assert!((f.inner(&s.mean_curvature, &f.n) + s.s1).abs() < 1e-9 * scale);
            let sr = structure_residuals(&cp.patch, &cp.rigging, &u, &tol).unwrap();
            assert!(sr.degeneracy < 1e-6 * scale, "{id}: {sr:?}");
            assert!(sr.weingarten_b < 1e-6 * scale, "{id}: {sr:?}");
            assert!(sr.weingarten_c < 1e-6 * scale, "{id}: {sr:?}");
            assert!(sr.metric_compatibility < 1e-6 * scale, "{id}: {sr:?}");
        }
    }
}

#[test]
fn schwarzschild_induced_metric_and_frame() {
    let cp = schwarzschild_horizon(1.0).unwrap();
    let tol = Tolerances::default();
    let u = [0.3, 1.1, 2.0];
    let rad = induced_metric_and_radical(&cp.patch, &u, &tol).unwrap();
    let want = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 4.0, 4.0 * 1.1f64.sin().powi(2)]));
    assert!((&rad.induced - want).amax() < 1e-12);
    assert!(rad.xi0_param[1].abs() < 1e-12 && rad.xi0_param[2].abs() < 1e-12);
    let f = build_rigged_frame(&cp.patch, &cp.rigging, &u, &tol).unwrap();
    assert!((&f.xi - DVector::from_vec(vec![-1.0, 0.0, 0.0, 0.0])).amax() < 1e-12);
    assert!((f.inner(&f.n, &f.xi) - 1.0).abs() < 1e-12);
    assert!(f.screen.iter().all(|e| e[0].abs() < 1e-12 && e[1].abs() < 1e-12));
}

#[test]
fn schwarzschild_shape_operators() {
    let cp = with_points(schwarzschild_horizon(1.0).unwrap(), 9);
    let tol = Tolerances::default();
    for u in strided(&cp, 60) {
        let s = shape_data(&cp.patch, &cp.rigging, &u, &tol).unwrap();
        assert!(s.a_xi.amax() < 1e-6);
        assert!(s.b().amax() < 1e-6);
        let sr = structure_residuals(&cp.patch, &cp.rigging, &u, &tol).unwrap();
        assert!(sr.killing < 1e-6);
    }
}

#[test]
fn warped_plane_example() {
    let cp = warped6d_plane().unwrap();
    let tol = Tolerances::default();
    let s = shape_data(&cp.patch, &cp.rigging, &[0.1, 0.2, -0.1, 0.0, 0.3], &tol).unwrap();
    let mut ev: Vec<f64> = s.a_xi_screen().symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(f64::total_cmp);
    for (got, want) in ev.iter().zip([-1.0, -1.0, 1.0, 1.0]) {
        assert!((got - want).abs() < 1e-6, "{ev:?}");
    }
    assert!(s.s1_dot.abs() < 1e-6);
    assert!((s.s1 - 2.0).abs() < 1e-6);
    assert!(s.b().amax() > 0.5);
}

#[test]
fn hyperplane_is_totally_geodesic() {
    let cp = resolve_surface("monge:u1", None).unwrap();
    let tol = Tolerances::default();
    let s = shape_data(&cp.patch, &cp.rigging, &[0.7, 0.9], &tol).unwrap();
    assert!(s.b().amax() < 1e-12);
    assert!(s.c.amax() < 1e-8);
    assert!(s.tau.amax() < 1e-8);
    assert!(s.mean_curvature.amax() < 1e-8);
}

#[test]
fn monge_line_induced_metric() {
    let cp = resolve_surface("monge:u1", Some(MetricSpec::minkowski(3).unwrap())).unwrap();
    let rad = induced_metric_and_radical(&cp.patch, &[0.5, 0.5], &Tolerances::default()).unwrap();
    assert!((rad.induced - DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0])).amax() < 1e-15);
    assert!(rad.xi0_param[1].abs() < 1e-15);
}

#[test]
fn monge_rigged_vector_field() {
    let cp = resolve_surface("monge:sqrt(u1^2 + u2^2 + u3^2)", None).unwrap();
    let u = [0.7, 1.1, 0.9];
    let f = build_rigged_frame(&cp.patch, &cp.rigging, &u, &Tolerances::default()).unwrap();
    let r = (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]).sqrt();
    let want = DVector::from_vec(vec![1.0, u[0] / r, u[1] / r, u[2] / r]) * FRAC_1_SQRT_2;
    assert!((&f.xi - want).amax() < 1e-12);
}

fn plane_patch(embedding: &[&str]) -> HypersurfacePatch {
    let grid = Grid::new(vec![
        Axis::new("a", -1.0, 1.0, 5, AxisKind::Uniform),
        Axis::new("b", -1.0, 1.0, 5, AxisKind::Uniform),
    ])
    .unwrap();
    let e: Vec<String> = embedding.iter().map(|s| s.to_string()).collect();
    HypersurfacePatch::from_texts("plane", Arc::new(MetricSpec::minkowski(3).unwrap()), &["a", "b"], &e, grid, None)
        .unwrap()
}

#[test]
fn timelike_plane_is_not_null() {
    let p = plane_patch(&["a", "0", "b"]);
    let err = induced_metric_and_radical(&p, &[0.0, 0.0], &Tolerances::default()).unwrap_err();
    assert!(matches!(err, GeomError::NotNull { .. }), "{err}");
    assert!(!err.is_input_error());
}

#[test]
fn timelike_rigging_gives_a_valid_frame() {
    let tol = Tolerances::default();
    for cp in catalog_patches(5) {
        let mut v = vec![0.0; cp.patch.ambient_dim()];
        v[0] = 1.0;
        if matches!(cp.kind, nullgeom::catalog::SurfaceKind::SchwarzschildHorizon { .. }) {
            v[1] = -0.5;
        }
        let g = cp.patch.ambient().metric_at(cp.patch.embed(&cp.patch.grid().points()[0]).unwrap().as_slice()).unwrap();
        let vv = DVector::from_vec(v.clone());
        assert!(vv.dot(&(g * &vv)) < 0.0, "{}", cp.id());
        let l = Rigging::constant(&cp.patch, &v).unwrap();
        for u in strided(&cp, 20) {
            let f = build_rigged_frame(&cp.patch, &l, &u, &tol).unwrap();
            let r = f.residuals();
            assert!(r.max_defect() < tol.null && r.g_tilde_min_eigenvalue > 0.0, "{} {r:?}", cp.id());
        }
    }
}

#[test]
fn tangent_rigging_is_rejected() {
    let p = plane_patch(&["a", "a", "b"]);
    let l = Rigging::constant(&p, &[1.0, 1.0, 0.0]).unwrap();
    let err = build_rigged_frame(&p, &l, &[0.0, 0.0], &Tolerances::default()).unwrap_err();
    assert!(matches!(err, GeomError::TangentRigging { .. }), "{err}");
}

#[test]
fn classification_examples() {
    let mts = classify_traces(0.0, 2.0, 1e-7);
    assert!(mts.mts && mts.mots && mts.label == TrappedClass::Mts);
    assert_eq!(classify_traces(-0.3, 1.2, 1e-7).label, TrappedClass::Ts);
    assert_eq!(classify_traces(0.5, 1.0, 1e-7).label, TrappedClass::Untrapped);
}

fn check_scaling(cp: &CatalogPatch, c: f64) {
    let tol = Tolerances::default();
    let l2 = scaled(&cp.rigging, c);
    for u in strided(cp, 40) {
        let a = shape_data(&cp.patch, &cp.rigging, &u, &tol).unwrap();
        let b = shape_data(&cp.patch, &l2, &u, &tol).unwrap();
        let scale = a.b().amax().max(1.0);
        assert!((&b.frame().xi * c - &a.frame().xi).amax() < 1e-12 * a.frame().xi.amax().max(1.0), "{}", cp.id());
        assert!((b.b() * c - a.b()).amax() < 1e-10 * scale, "{}", cp.id());
        let band = tol.classify * scale;
        let la = classify_traces(a.s1_dot, a.s1, band);
        let lb = classify_traces(b.s1_dot, b.s1, band / c);
        assert_eq!(la.label, lb.label, "{} at {u:?}", cp.id());
        assert_eq!((la.mots, la.mts, la.tos, la.ts), (lb.mots, lb.mts, lb.tos, lb.ts));
    }
}

#[test]
fn rigging_scale_covariance_and_label_invariance() {
    for cp in catalog_patches(5) {
        for c in [2.0, 0.5, 3.7] {
            check_scaling(&cp, c);
        }
    }
}

#[test]
fn monge_expansions_have_opposite_signs() {
    let tol = Tolerances::default();
    for cp in common::monge_patches(5) {
        for u in cp.patch.grid().points() {
            let s = shape_data(&cp.patch, &cp.rigging, &u, &tol).unwrap();
            assert!((s.theta_xi_plus() + s.theta_n_plus()).abs() < 1e-6, "{} at {u:?}", cp.id());
            assert_ne!(classify_traces(s.s1_dot, s.s1, tol.classify).label, TrappedClass::Ts);
        }
    }
    let _ = PI;
}
