//! Symbolic differentiation with light algebraic simplification of the result.

use super::{BinOp, Func, Node, NodeKind, Span};

fn node(kind: NodeKind) -> Node {
    Node::new(kind, Span::default())
}

fn num(c: f64) -> Node {
    node(NodeKind::Const(c))
}

fn as_const(n: &Node) -> Option<f64> {
    match n.kind {
        NodeKind::Const(c) => Some(c),
        _ => None,
    }
}

fn neg(a: Node) -> Node {
    match a.kind {
        NodeKind::Const(c) => num(-c),
        NodeKind::Neg(inner) => *inner,
        kind => node(NodeKind::Neg(Box::new(Node::new(kind, a.span)))),
    }
}

fn bin(op: BinOp, l: Node, r: Node) -> Node {
    node(NodeKind::Binary(op, Box::new(l), Box::new(r)))
}

fn add(a: Node, b: Node) -> Node {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => num(x + y),
        (Some(0.0), _) => b,
        (_, Some(0.0)) => a,
        _ => bin(BinOp::Add, a, b),
    }
}

fn sub(a: Node, b: Node) -> Node {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => num(x - y),
        (_, Some(0.0)) => a,
        (Some(0.0), _) => neg(b),
        _ => bin(BinOp::Sub, a, b),
    }
}

fn mul(a: Node, b: Node) -> Node {
    match (as_const(&a), as_const(&b)) {
        (Some(x), Some(y)) => num(x * y),
        (Some(0.0), _) | (_, Some(0.0)) => num(0.0),
        (Some(1.0), _) => b,
        (_, Some(1.0)) => a,
        (Some(-1.0), _) => neg(b),
        (_, Some(-1.0)) => neg(a),
        _ => bin(BinOp::Mul, a, b),
    }
}

fn div(a: Node, b: Node) -> Node {
    match (as_const(&a), as_const(&b)) {
        (Some(0.0), _) => num(0.0),
        (_, Some(1.0)) => a,
        _ => bin(BinOp::Div, a, b),
    }
}

fn pow(a: Node, b: Node) -> Node {
    match as_const(&b) {
        Some(0.0) => num(1.0),
        Some(1.0) => a,
        _ => bin(BinOp::Pow, a, b),
    }
}

fn call(f: Func, a: Node) -> Node {
    node(NodeKind::Call(f, Box::new(a)))
}

pub(super) fn derivative(n: &Node, var: usize) -> Node {
    if n.is_constant() {
        return num(0.0);
    }
    match &n.kind {
        NodeKind::Const(_) => num(0.0),
        NodeKind::Var(i) => num(if *i == var { 1.0 } else { 0.0 }),
        NodeKind::Neg(a) => neg(derivative(a, var)),
        NodeKind::Binary(op, l, r) => {
            let (a, b) = (l.as_ref().clone(), r.as_ref().clone());
            let da = derivative(l, var);
            let db = derivative(r, var);
            match op {
                BinOp::Add => add(da, db),
                BinOp::Sub => sub(da, db),
                BinOp::Mul => add(mul(da, b), mul(a, db)),
                BinOp::Div => {
                    let num_part = sub(mul(da, b.clone()), mul(a, db));
                    div(num_part, pow(b, num(2.0)))
                }
                BinOp::Pow if r.is_constant() => {
                    let lowered = match as_const(&b) {
                        Some(p) => num(p - 1.0),
                        None => sub(b.clone(), num(1.0)),
                    };
                    mul(mul(b, pow(a, lowered)), da)
                }
                BinOp::Pow => {
                    let whole = pow(a.clone(), b.clone());
                    let log_part = mul(db, call(Func::Ln, a.clone()));
                    let base_part = div(mul(b, da), a);
                    mul(whole, add(log_part, base_part))
                }
            }
        }
        NodeKind::Call(f, a) => {
            let inner = a.as_ref().clone();
            let da = derivative(a, var);
            match f {
                Func::Sqrt => div(da, mul(num(2.0), call(Func::Sqrt, inner))),
                Func::Exp => mul(call(Func::Exp, inner), da),
                Func::Ln => div(da, inner),
                Func::Sin => mul(call(Func::Cos, inner), da),
                Func::Cos => neg(mul(call(Func::Sin, inner), da)),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::expr::Expr;

    const C: [&str; 3] = ["u1", "u2", "u3"];

    fn check(src: &str, x: &[f64]) {
        let e = Expr::parse(src, &C).unwrap();
        let j = e.jet(x).unwrap();
        for k in 0..3 {
            let d = e.diff(k).eval(x).unwrap();
            assert!((d - j.grad()[k]).abs() < 1e-12 * (1.0 + d.abs()), "{src} d/d{k}: {d} vs {}", j.grad()[k]);
        }
    }

    #[test]
    fn symbolic_matches_jet_gradient() {
        let x = [0.7, 1.3, 0.4];
        for src in [
            "sqrt(u1^2+u2^2+u3^2)",
            "(2*u1-u2+2*u3)/3",
            "u1^u2 * exp(u3)",
            "ln(u1*u2)/cos(u3)",
            "sin(u1)^3 - u2/u3",
            "-u1^-2",
        ] {
            check(src, &x);
        }
    }

    #[test]
    fn linear_derivative_is_constant() {
        let e = Expr::parse("(u1+u2)/sqrt(2)", &C).unwrap();
        let d = e.diff(0);
        assert!(d.is_constant());
        assert!((d.eval(&[0.0; 3]).unwrap() - 1.0 / 2f64.sqrt()).abs() < 1e-16);
        assert_eq!(e.diff(2).eval(&[0.0; 3]).unwrap(), 0.0);
    }
}
