mod common;

use nullgeom::catalog::resolve_surface;
use nullgeom::expr::Expr;
use nullgeom::hypersurface::{shape_data, structure_residuals};
use nullgeom::monge::{monge_frame, monge_null_check, monge_shape, oracle_gap, require_null, trapping_horizon_test};
use nullgeom::rigging::{RiggingChange, ZetaSpec};
use nullgeom::Tolerances;

use common::{monge_patches, with_points};

#[test]
fn oracle_matches_engine_at_every_grid_point() {
    let tol = Tolerances::default();
    for cp in monge_patches(5) {
        let f = cp.monge_function().unwrap().clone();
        for u in cp.patch.grid().points() {
            let g = oracle_gap(&cp.patch, &cp.rigging, &f, &u, &tol).unwrap();
            assert!(g.max() < 1e-6, "{} at {u:?}: {g:?}", cp.id());
            assert!(g.expansion_sum < 1e-6 && !g.trapped);
        }
    }
}

#[test]
fn generic_rigging_is_ucc() {
    let tol = Tolerances::default();
    for cp in monge_patches(5) {
        for u in common::strided(&cp, 60) {
            let r = structure_residuals(&cp.patch, &cp.rigging, &u, &tol).unwrap();
            let curved = shape_data(&cp.patch, &cp.rigging, &u, &tol).unwrap().a_xi.amax() > 1e-9;
            if curved {
                assert!((r.conformal_factor - 1.0).abs() < 1e-8, "{} {r:?}", cp.id());
            }
            assert!(r.conformal_residual < 1e-8, "{} {r:?}", cp.id());
            assert!(r.d_eta < 1e-8, "{} {r:?}", cp.id());
        }
    }
}

#[test]
fn rescaled_rigging_is_conformal_but_not_closed() {
    let cp = with_points(resolve_surface("monge:sqrt(u1^2 + u2^2 + u3^2)", None).unwrap(), 7);
    let tol = Tolerances::default();
    let phi = Expr::parse("1 + 0.3*u1", cp.patch.chart()).unwrap();
    let n = RiggingChange { base: cp.rigging.clone(), phi, zeta: ZetaSpec::Zero }.into_rigging();
    let u = [1.0, 1.0, 1.0];
    let base = shape_data(&cp.patch, &cp.rigging, &u, &tol).unwrap();
    let s = shape_data(&cp.patch, &n, &u, &tol).unwrap();
    let r = structure_residuals(&cp.patch, &n, &u, &tol).unwrap();
    assert!(r.conformal_residual < 1e-6, "{r:?}");
    assert!((r.conformal_factor - 1.3f64.powi(2)).abs() < 1e-6, "{r:?}");
    assert!(r.d_eta > 1e-3, "{r:?}");
    assert!(r.d_eta_screen < 1e-8, "{r:?}");
    let proj = |p: &nalgebra::DMatrix<f64>| p.clone();
    assert!((proj(&s.frame().projector()) - base.frame().projector()).amax() < 1e-12);
}

#[test]
fn frame_and_shape_closed_forms() {
    let f = Expr::parse("sqrt(u1^2 + u2^2)", &["u1", "u2"]).unwrap();
    let (n, xi) = monge_frame(&f, &[3.0, 4.0]).unwrap();
    let s2 = std::f64::consts::FRAC_1_SQRT_2;
    assert!((n[0] + s2).abs() < 1e-15 && (xi[1] - 0.6 * s2).abs() < 1e-15 && (n[2] - 0.8 * s2).abs() < 1e-15);
    let sh = monge_shape(&f, &[3.0, 4.0]).unwrap();
    assert!((sh.laplacian - 0.2).abs() < 1e-15);
    assert!((sh.theta_xi_plus + 0.2 * s2).abs() < 1e-15);
    assert_eq!(sh.theta_xi_plus, -sh.theta_n_plus);
}

#[test]
fn null_condition() {
    let cp = resolve_surface("monge:u1", None).unwrap();
    let grid = cp.patch.grid();
    let tol = Tolerances::default();
    let sq = Expr::parse("u1^2", &["u1", "u2"]).unwrap();
    assert!(monge_null_check(&sq, grid).unwrap().eikonal > 0.1);
    assert!(require_null(&sq, grid, &tol).unwrap_err().is_input_error());
    assert!(resolve_surface("monge:u1^2", None).is_ok());
}

#[test]
fn trapping_horizon_iff_harmonic() {
    let tol = Tolerances::default();
    for (text, harmonic) in [
        ("u1", true),
        ("(u1 + u2)/sqrt(2)", true),
        ("0.6*u2 + 0.8*u3", true),
        ("sqrt(u1^2 + u2^2 + u3^2)", false),
        ("sqrt(u1^2 + u2^2)", false),
    ] {
        let cp = with_points(resolve_surface(&format!("monge:{text}"), None).unwrap(), 5);
        let v = trapping_horizon_test(cp.monge_function().unwrap(), cp.patch.grid(), &tol).unwrap();
        assert_eq!(v.trapping_horizon, harmonic, "{text}: {}", v.max_laplacian);
        assert_eq!(v.leaves.iter().all(|l| l.harmonic), harmonic);
        if !harmonic {
            assert!(v.max_laplacian > 0.1);
        }
    }
}
