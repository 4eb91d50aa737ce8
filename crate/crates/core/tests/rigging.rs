mod common;

use nullgeom::catalog::{nullcone, resolve_surface, schwarzschild_horizon, warped6d_plane};
use nullgeom::expr::Expr;
use nullgeom::hypersurface::{classify_traces, shape_data, structure_residuals};
use nullgeom::rigging::{identity_residuals, make_change, seeded_changes, RiggingChange, ZetaSpec};
use nullgeom::Tolerances;
use proptest::prelude::*;

use common::{strided, with_points};

#[test]
fn eight_identities_under_seeded_changes() {
    let tol = Tolerances::default();
    for cp in [
        with_points(schwarzschild_horizon(1.0).unwrap(), 7),
        with_points(warped6d_plane().unwrap(), 5),
        with_points(nullcone(3).unwrap(), 7),
    ] {
        let changes = seeded_changes(&cp.patch, &cp.rigging, 2024, 3);
        assert_eq!(changes.len(), 3);
        for c in &changes {
            for u in strided(&cp, 12) {
                let r = identity_residuals(&cp.patch, c, &u, &tol).unwrap();
                assert_eq!(r.items.len(), 8);
                assert!(r.max() < 1e-5, "{} φ = {} at {u:?}: {r:?}", cp.id(), c.phi);
            }
        }
    }
}

#[test]
fn s1_dot_scales_and_labels_persist() {
    let tol = Tolerances::default();
    for cp in common::catalog_patches(5) {
        for c in seeded_changes(&cp.patch, &cp.rigging, 5, 3) {
            let rescale = RiggingChange { base: c.base.clone(), phi: c.phi.clone(), zeta: ZetaSpec::Zero };
            let full = c.clone().into_rigging();
            for u in strided(&cp, 10) {
                let phi = c.phi_at(&u).unwrap();
                let base = shape_data(&cp.patch, &cp.rigging, &u, &tol).unwrap();
                let changed = shape_data(&cp.patch, &full, &u, &tol).unwrap();
                let scale = base.b().amax().max(1.0);
                assert!((changed.frame().xi.clone() * phi - &base.frame().xi).amax() < 1e-10);
                assert!((changed.exact.s1_dot() - base.exact.s1_dot() / phi).abs() < 1e-8 * scale, "{}", cp.id());
                let r = shape_data(&cp.patch, &rescale.clone().into_rigging(), &u, &tol).unwrap();
                let band = tol.classify * scale;
                let a = classify_traces(base.exact.s1_dot(), base.s1, band);
                let b = classify_traces(r.exact.s1_dot(), r.s1, band / phi);
                assert_eq!(a.mots, b.mots, "{} at {u:?}", cp.id());
            }
        }
    }
}

#[test]
fn umbilicity_and_geodesibility_are_intrinsic() {
    let tol = Tolerances::default();
    let cone = with_points(nullcone(3).unwrap(), 7);
    let plane = with_points(resolve_surface("monge:u1", None).unwrap(), 5);
    for cp in [cone, plane] {
        for c in seeded_changes(&cp.patch, &cp.rigging, 9, 3) {
            let r = c.clone().into_rigging();
            for u in strided(&cp, 8) {
                let before = structure_residuals(&cp.patch, &cp.rigging, &u, &tol).unwrap();
                let after = structure_residuals(&cp.patch, &r, &u, &tol).unwrap();
                assert!(before.umbilic_residual < 1e-9 && after.umbilic_residual < 1e-9, "{}", cp.id());
                assert_eq!(before.geodesic < 1e-12, after.geodesic < 1e-12, "{}", cp.id());
            }
        }
    }
}

#[test]
fn non_null_raw_zeta_is_rescaled() {
    let tol = Tolerances::default();
    let cp = with_points(nullcone(3).unwrap(), 5);
    let chart = cp.patch.chart();
    let phi = Expr::parse("1.2", chart).unwrap();
    let z: Vec<Expr> = ["-0.1", "0.1", "0.05"].iter().map(|t| Expr::parse(t, chart).unwrap()).collect();
    let c = make_change(&cp.patch, cp.rigging.clone(), phi, Some(z), true, &tol).unwrap();
    assert!(matches!(c.zeta, ZetaSpec::Rescaled(_)));
    let u = cp.patch.grid().points()[40].clone();
    assert!(identity_residuals(&cp.patch, &c, &u, &tol).unwrap().max() < 1e-5);
}

#[test]
fn zero_and_negative_phi_are_rejected() {
    let tol = Tolerances::default();
    let cp = with_points(nullcone(3).unwrap(), 5);
    let chart = cp.patch.chart();
    for text in ["0", "-1", "s - 1.5"] {
        let phi = Expr::parse(text, chart).unwrap();
        assert!(make_change(&cp.patch, cp.rigging.clone(), phi, None, true, &tol).is_err(), "{text}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn constant_rescaling_scales_b_and_xi(c in 0.2f64..5.0, k in 0usize..40) {
        let tol = Tolerances::default();
        let cp = with_points(nullcone(3).unwrap(), 5);
        let u = cp.patch.grid().points()[k * 3].clone();
        let phi = Expr::parse(&format!("{c}"), cp.patch.chart()).unwrap();
        let ch = RiggingChange { base: cp.rigging.clone(), phi, zeta: ZetaSpec::Zero };
        let r = identity_residuals(&cp.patch, &ch, &u, &tol).unwrap();
        prop_assert!(r.max() < 1e-5, "{:?}", r);
        let a = shape_data(&cp.patch, &cp.rigging, &u, &tol).unwrap();
        let b = shape_data(&cp.patch, &ch.into_rigging(), &u, &tol).unwrap();
        prop_assert!((b.b() * c - a.b()).amax() < 1e-10);
    }
}
