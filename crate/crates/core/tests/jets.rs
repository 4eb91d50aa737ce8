use nalgebra::DMatrix;
use nullgeom::jets::{directional_second_derivative, lift_and_evaluate};
use nullgeom::{Expr, Jet2};
use proptest::prelude::*;

const EPS_CBRT: f64 = 6.0554544523933395e-6;

fn expr(text: &str, n: usize) -> Expr {
    let chart: Vec<String> = (0..n).map(|i| format!("x{i}")).collect();
    Expr::parse(text, &chart).unwrap()
}

/// Catalog scalar fields with a sampling box per coordinate.
fn catalog_fields() -> Vec<(Expr, Vec<(f64, f64)>)> {
    let schw = vec![(-3.0, 3.0), (2.0, 10.0), (0.2, 2.9), (0.0, 6.2)];
    let warp = vec![(-1.0, 1.0); 6];
    let mut out: Vec<(Expr, Vec<(f64, f64)>)> = [
        "-(1 - 2*1/x1)",
        "2*1/x1",
        "1 + 2*1/x1",
        "x1^2",
        "x1^2*sin(x2)^2",
    ]
    .iter()
    .map(|t| (expr(t, 4), schw.clone()))
    .collect();
    out.extend(["exp(2*x0)", "exp(2*x1)"].iter().map(|t| (expr(t, 6), warp.clone())));
    let cone = vec![(0.5, 2.0); 3];
    out.extend(
        ["(x0 + x1)/sqrt(2)", "0.6*x1 + 0.8*x2", "sqrt(x0^2 + x1^2 + x2^2)", "sqrt(x0^2 + x1^2)", "0.9 + 0.1*sin(0.3 + 0.2*x0 - 0.4*x2)"]
            .iter()
            .map(|t| (expr(t, 3), cone.clone())),
    );
    out
}

fn point_in(bounds: &[(f64, f64)], s: &[f64]) -> Vec<f64> {
    bounds.iter().zip(s).map(|((lo, hi), t)| lo + (hi - lo) * t).collect()
}

#[test]
fn product_rule_example() {
    let j = expr("x0*x1", 2).jet(&[3.0, 4.0]).unwrap();
    assert_eq!(j.value(), 12.0);
    assert_eq!(j.grad(), &[4.0, 3.0]);
    assert_eq!(j.hessian(), DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
}

#[test]
fn norm_example() {
    let j = expr("sqrt(x0^2+x1^2)", 2).jet(&[3.0, 4.0]).unwrap();
    assert!((j.value() - 5.0).abs() < 1e-15);
    assert!((j.grad()[0] - 0.6).abs() < 1e-15 && (j.grad()[1] - 0.8).abs() < 1e-15);
    let g = nalgebra::DVector::from_vec(vec![0.6, 0.8]);
    let want = (DMatrix::identity(2, 2) - &g * g.transpose()) / 5.0;
    assert!((j.hessian() - want).amax() < 1e-15);
}

#[test]
fn warp_factor_example() {
    let j = expr("exp(2*x0)", 6).jet(&[0.0; 6]).unwrap();
    assert_eq!(j.value(), 1.0);
    assert_eq!(j.grad()[0], 2.0);
    assert_eq!(j.hess(0, 0), 4.0);
}

#[test]
fn directional_examples() {
    let sq = expr("x0^2", 2);
    assert_eq!(directional_second_derivative(&sq, &[0.3, 0.7], &[1.0, 0.0], &[1.0, 0.0]).unwrap(), 2.0);
    let lin = expr("(x0+x1)/sqrt(2)", 2);
    assert_eq!(directional_second_derivative(&lin, &[0.3, 0.7], &[0.2, 1.0], &[-1.0, 0.5]).unwrap(), 0.0);
    let norm = expr("sqrt(x0^2+x1^2)", 2);
    let d = directional_second_derivative(&norm, &[1.0, 0.0], &[0.0, 1.0], &[0.0, 1.0]).unwrap();
    let h = 1e-4;
    let f = |y: f64| (1.0 + y * y).sqrt();
    let fd = (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h);
    assert!((d - 1.0).abs() < 1e-14 && (fd - 1.0).abs() < 1e-6);
}

#[test]
fn dimension_checks() {
    let e = expr("x0*x1", 2);
    assert!(lift_and_evaluate(&e, &[1.0]).unwrap_err().is_input_error());
    assert!(directional_second_derivative(&e, &[1.0, 2.0], &[1.0], &[1.0, 0.0]).is_err());
}

#[test]
fn domain_errors_name_the_subexpression() {
    let err = expr("1 + sqrt(x0 - 2)", 1).jet(&[1.0]).unwrap_err().to_string();
    assert!(err.contains("sqrt"), "{err}");
    assert!(expr("1/x0", 1).jet(&[0.0]).is_err());
}

#[test]
fn every_catalog_field_matches_finite_differences() {
    for (f, bounds) in catalog_fields() {
        let m = bounds.len();
        for k in 0..20 {
            let s: Vec<f64> = (0..m).map(|i| ((k * 7 + i * 3) % 20) as f64 / 19.0).collect();
            let x = point_in(&bounds, &s);
            let j = f.jet(&x).unwrap();
            for a in 0..m {
                let h = EPS_CBRT * (1.0 + x[a].abs());
                let shifted = |t: f64| {
                    let mut y = x.clone();
                    y[a] += t;
                    y
                };
                let fd = (f.eval(&shifted(h)).unwrap() - f.eval(&shifted(-h)).unwrap()) / (2.0 * h);
                let scale = j.grad()[a].abs().max(j.value().abs()).max(1.0);
                assert!((fd - j.grad()[a]).abs() <= 1e-5 * scale, "{f} grad {a} at {x:?}");
                let gp = f.jet(&shifted(h)).unwrap();
                let gm = f.jet(&shifted(-h)).unwrap();
                for b in 0..m {
                    let fd2 = (gp.grad()[b] - gm.grad()[b]) / (2.0 * h);
                    let scale = j.hess(a, b).abs().max(1.0);
                    assert!((fd2 - j.hess(a, b)).abs() <= 1e-5 * scale, "{f} hess {a}{b} at {x:?}");
                }
            }
        }
    }
}

fn quadratic_prediction(j: &Jet2, u: &[f64], t: f64) -> f64 {
    let g: f64 = j.grad().iter().zip(u).map(|(a, b)| a * b).sum();
    j.value() + t * g + 0.5 * t * t * j.second_directional(u, u).unwrap()
}

proptest! {
    #[test]
    fn quadratics_are_exact(c in prop::collection::vec(-3.0f64..3.0, 6), x in prop::collection::vec(-2.0f64..2.0, 2)) {
        let text = format!(
            "{} + {}*x0 + {}*x1 + {}*x0^2 + {}*x0*x1 + {}*x1^2",
            c[0], c[1], c[2], c[3], c[4], c[5]
        );
        let j = expr(&text, 2).jet(&x).unwrap();
        let v = c[0] + c[1] * x[0] + c[2] * x[1] + c[3] * x[0] * x[0] + c[4] * x[0] * x[1] + c[5] * x[1] * x[1];
        let scale = 1.0 + v.abs() + c.iter().map(|a| a.abs()).sum::<f64>() * 4.0;
        prop_assert!((j.value() - v).abs() <= 4.0 * f64::EPSILON * scale);
        prop_assert!((j.grad()[0] - (c[1] + 2.0 * c[3] * x[0] + c[4] * x[1])).abs() <= 4.0 * f64::EPSILON * scale);
        prop_assert!((j.grad()[1] - (c[2] + c[4] * x[0] + 2.0 * c[5] * x[1])).abs() <= 4.0 * f64::EPSILON * scale);
        prop_assert!((j.hess(0, 0) - 2.0 * c[3]).abs() <= 4.0 * f64::EPSILON * scale);
        prop_assert!((j.hess(0, 1) - c[4]).abs() <= 4.0 * f64::EPSILON * scale);
        prop_assert!((j.hess(1, 1) - 2.0 * c[5]).abs() <= 4.0 * f64::EPSILON * scale);
        prop_assert_eq!(j.hess(0, 1), j.hess(1, 0));
    }

    #[test]
    fn taylor_remainder_is_cubic(
        x in prop::collection::vec(0.2f64..1.5, 2),
        u in prop::collection::vec(0.5f64..1.0, 2),
        which in 0usize..3,
    ) {
        let f = expr(["exp(x0 + 2*x1)", "x0^3 + x0*x1^2", "sqrt(1 + x0^2 + x1^2)*exp(x1)"][which], 2);
        let j = f.jet(&x).unwrap();
        let ts = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];
        let pts: Vec<(f64, f64)> = ts
            .iter()
            .map(|&t| {
                let y = [x[0] + t * u[0], x[1] + t * u[1]];
                (t.ln(), (f.eval(&y).unwrap() - quadratic_prediction(&j, &u, t)).abs().ln())
            })
            .collect();
        let n = pts.len() as f64;
        let (sx, sy) = pts.iter().fold((0.0, 0.0), |(a, b), (p, q)| (a + p, b + q));
        let (mx, my) = (sx / n, sy / n);
        let slope = pts.iter().map(|(p, q)| (p - mx) * (q - my)).sum::<f64>()
            / pts.iter().map(|(p, _)| (p - mx).powi(2)).sum::<f64>();
        prop_assert!(slope >= 2.7, "slope {slope}");
    }
}
