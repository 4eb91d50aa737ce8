use nullgeom::expr::{evaluate, EvalMode, Evaluated};
use nullgeom::Expr;
use proptest::prelude::*;

const CHART: [&str; 3] = ["u1", "u2", "u3"];

fn leaf() -> impl Strategy<Value = String> {
    prop_oneof![
        prop::sample::select(CHART.to_vec()).prop_map(String::from),
        (0u32..1000).prop_map(|k| format!("{}", k as f64 / 8.0)),
        (1u32..9).prop_map(|k| format!("{k}e-3")),
    ]
}

fn text() -> impl Strategy<Value = String> {
    leaf().prop_recursive(4, 32, 3, |inner| {
        prop_oneof![
            (inner.clone(), prop::sample::select(vec!["+", "-", "*", "/", "^"]), inner.clone())
                .prop_map(|(a, op, b)| format!("({a}){op}({b})")),
            (inner.clone(), prop::sample::select(vec!["+", "-", "*"]), inner.clone())
                .prop_map(|(a, op, b)| format!("{a} {op} {b}")),
            inner.clone().prop_map(|a| format!("-{a}")),
            (prop::sample::select(vec!["sqrt", "exp", "ln", "sin", "cos"]), inner)
                .prop_map(|(f, a)| format!("{f}({a})")),
        ]
    })
}

proptest! {
    #[test]
    fn print_parse_round_trip(src in text()) {
        let e = Expr::parse(&src, &CHART).unwrap();
        let printed = e.to_string();
        let again = Expr::parse(&printed, &CHART).unwrap();
        prop_assert_eq!(&e, &again, "{} -> {}", src, printed);
        prop_assert_eq!(printed, again.to_string());
    }

    #[test]
    fn evaluation_is_pure(src in text(), x in prop::collection::vec(0.1f64..2.0, 3)) {
        let e = Expr::parse(&src, &CHART).unwrap();
        let a = e.eval(&x);
        let b = e.eval(&x);
        let c = Expr::parse(&e.to_string(), &CHART).unwrap().eval(&x);
        match (a, b, c) {
            (Ok(a), Ok(b), Ok(c)) => {
                prop_assert_eq!(a.to_bits(), b.to_bits());
                prop_assert_eq!(a.to_bits(), c.to_bits());
                if let Ok(j) = e.jet(&x) {
                    prop_assert!(j.value() == a || (j.value() - a).abs() <= 1e-14 * a.abs().max(1.0), "{} vs {}", j.value(), a);
                }
            }
            (Err(a), Err(b), Err(_)) => prop_assert_eq!(a, b),
            (a, b, c) => prop_assert!(false, "inconsistent: {a:?} {b:?} {c:?}"),
        }
    }
}

#[test]
fn modes_agree_on_value() {
    let e = Expr::parse("u1*exp(u2) - u3^2", &CHART).unwrap();
    let x = [0.5, 0.25, 2.0];
    let Evaluated::Real(v) = evaluate(&e, &x, EvalMode::Real).unwrap() else { panic!("real mode") };
    let Evaluated::Jet(j) = evaluate(&e, &x, EvalMode::Jet).unwrap() else { panic!("jet mode") };
    assert_eq!(v, j.value());
}

#[test]
fn errors_are_input_errors_with_position() {
    let err = Expr::parse("u1 + * u2", &CHART).unwrap_err();
    assert!(err.is_input_error());
    assert!(err.to_string().contains("byte 5"), "{err}");
    let err = Expr::parse("u1 + v", &CHART).unwrap_err();
    assert!(err.to_string().contains("u1, u2, u3"), "{err}");
}
