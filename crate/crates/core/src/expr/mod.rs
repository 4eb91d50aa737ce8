//! Scalar expression language: parsing, evaluation over reals or jets, printing.

mod diff;
mod parse;

use std::fmt;
use std::sync::Arc;

use crate::error::{GeomError, Result};
use crate::jets::{Jet2, JetDomainError, Number, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sqrt,
    Exp,
    Ln,
    Sin,
    Cos,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Sqrt => "sqrt",
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "sqrt" => Func::Sqrt,
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            _ => return None,
        })
    }

    pub fn arity(self) -> usize {
        1
    }
}

/// Byte range of a node in its source text.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Span {
    pub start: usize,
    pub end: usize,
}

#[derive(Debug, Clone)]
pub enum NodeKind {
    Const(f64),
    Var(usize),
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Call(Func, Box<Node>),
}

#[derive(Debug, Clone)]
pub struct Node {
    pub kind: NodeKind,
    pub span: Span,
    constant: bool,
}

/// Structural equality; spans are ignored.
impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        match (&self.kind, &other.kind) {
            (NodeKind::Const(a), NodeKind::Const(b)) => a.to_bits() == b.to_bits(),
            (NodeKind::Var(a), NodeKind::Var(b)) => a == b,
            (NodeKind::Neg(a), NodeKind::Neg(b)) => a == b,
            (NodeKind::Binary(o1, l1, r1), NodeKind::Binary(o2, l2, r2)) => {
                o1 == o2 && l1 == l2 && r1 == r2
            }
            (NodeKind::Call(f1, a1), NodeKind::Call(f2, a2)) => f1 == f2 && a1 == a2,
            _ => false,
        }
    }
}

impl Node {
    pub fn new(kind: NodeKind, span: Span) -> Node {
        let constant = match &kind {
            NodeKind::Const(_) => true,
            NodeKind::Var(_) => false,
            NodeKind::Neg(a) | NodeKind::Call(_, a) => a.constant,
            NodeKind::Binary(_, l, r) => l.constant && r.constant,
        };
        Node { kind, span, constant }
    }

    /// True when the subtree contains no variables.
    pub fn is_constant(&self) -> bool {
        self.constant
    }

    fn precedence(&self) -> u8 {
        match &self.kind {
            NodeKind::Const(c) if *c < 0.0 => 3,
            NodeKind::Const(_) | NodeKind::Var(_) | NodeKind::Call(..) => 5,
            NodeKind::Neg(_) => 3,
            NodeKind::Binary(BinOp::Add | BinOp::Sub, ..) => 1,
            NodeKind::Binary(BinOp::Mul | BinOp::Div, ..) => 2,
            NodeKind::Binary(BinOp::Pow, ..) => 4,
        }
    }

    fn write(&self, chart: &[String], out: &mut String) {
        match &self.kind {
            NodeKind::Const(c) => out.push_str(&format!("{c}")),
            NodeKind::Var(i) => out.push_str(&chart[*i]),
            NodeKind::Neg(a) => {
                out.push('-');
                a.write_wrapped(3, chart, out);
            }
            NodeKind::Call(f, a) => {
                out.push_str(f.name());
                out.push('(');
                a.write(chart, out);
                out.push(')');
            }
            NodeKind::Binary(op, l, r) => {
                let (lmin, rmin) = match op {
                    BinOp::Add | BinOp::Sub => (1, 2),
                    BinOp::Mul | BinOp::Div => (2, 3),
                    BinOp::Pow => (5, 4),
                };
                l.write_wrapped(lmin, chart, out);
                out.push_str(op.symbol());
                r.write_wrapped(rmin, chart, out);
            }
        }
    }

    fn write_wrapped(&self, min: u8, chart: &[String], out: &mut String) {
        let mut min = min;
        // `a^-b` would be legal, but an explicit group reads better.
        if min == 4 && matches!(self.kind, NodeKind::Neg(_)) {
            min = 5;
        }
        if self.precedence() < min {
            out.push('(');
            self.write(chart, out);
            out.push(')');
        } else {
            self.write(chart, out);
        }
    }
}

/// A parsed expression bound to a chart of variable names.
#[derive(Debug, Clone)]
pub struct Expr {
    root: Node,
    chart: Arc<[String]>,
    source: Option<Arc<str>>,
}

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root && self.chart == other.chart
    }
}

impl Expr {
    pub fn parse<S: AsRef<str>>(text: &str, chart: &[S]) -> Result<Expr> {
        let chart: Arc<[String]> = chart.iter().map(|s| s.as_ref().to_string()).collect();
        let root = parse::parse(text, &chart)?;
        Ok(Expr { root, chart, source: Some(Arc::from(text)) })
    }

    pub(crate) fn from_node(root: Node, chart: Arc<[String]>) -> Expr {
        Expr { root, chart, source: None }
    }

    pub fn constant<S: AsRef<str>>(value: f64, chart: &[S]) -> Expr {
        let chart: Arc<[String]> = chart.iter().map(|s| s.as_ref().to_string()).collect();
        Expr::from_node(Node::new(NodeKind::Const(value), Span::default()), chart)
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn chart(&self) -> &[String] {
        &self.chart
    }

    pub fn is_constant(&self) -> bool {
        self.root.is_constant()
    }

    /// Moves the expression onto another chart; variable `i` becomes `map[i]`.
    pub fn rechart<S: AsRef<str>>(&self, chart: &[S], map: &[usize]) -> Result<Expr> {
        fn walk(n: &Node, map: &[usize]) -> Node {
            let kind = match &n.kind {
                NodeKind::Const(c) => NodeKind::Const(*c),
                NodeKind::Var(i) => NodeKind::Var(map[*i]),
                NodeKind::Neg(a) => NodeKind::Neg(Box::new(walk(a, map))),
                NodeKind::Call(f, a) => NodeKind::Call(*f, Box::new(walk(a, map))),
                NodeKind::Binary(op, l, r) => {
                    NodeKind::Binary(*op, Box::new(walk(l, map)), Box::new(walk(r, map)))
                }
            };
            Node::new(kind, n.span)
        }
        if map.len() != self.chart.len() {
            return Err(GeomError::DimensionMismatch { expected: self.chart.len(), got: map.len() });
        }
        if let Some(&bad) = map.iter().find(|&&j| j >= chart.len()) {
            return Err(GeomError::DimensionMismatch { expected: chart.len(), got: bad + 1 });
        }
        let chart: Arc<[String]> = chart.iter().map(|s| s.as_ref().to_string()).collect();
        Ok(Expr { root: walk(&self.root, map), chart, source: self.source.clone() })
    }

    fn snippet(&self, node: &Node) -> String {
        if let Some(src) = &self.source {
            if node.span.end > node.span.start && node.span.end <= src.len() {
                return src[node.span.start..node.span.end].to_string();
            }
        }
        let mut s = String::new();
        node.write(&self.chart, &mut s);
        s
    }

    fn check_len(&self, got: usize) -> Result<()> {
        if got != self.chart.len() {
            return Err(GeomError::DimensionMismatch { expected: self.chart.len(), got });
        }
        Ok(())
    }

    /// Evaluates with each chart variable bound to `args[i]`; `dim` sizes constant jets.
    pub fn eval_with<T: Number>(&self, args: &[T], dim: usize) -> Result<T> {
        self.check_len(args.len())?;
        self.eval_node(&self.root, args, dim)
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        self.eval_with(x, 0)
    }

    pub fn jet(&self, x: &[f64]) -> Result<Jet2> {
        self.check_len(x.len())?;
        let m = x.len();
        let args: Vec<Jet2> = (0..m).map(|i| Jet2::variable(x[i], i, m)).collect();
        self.eval_node(&self.root, &args, m)
    }

    fn eval_node<T: Number>(&self, n: &Node, args: &[T], dim: usize) -> Result<T> {
        let wrap = |e: JetDomainError| GeomError::Domain { expr: self.snippet(n), message: e.0 };
        Ok(match &n.kind {
            NodeKind::Const(c) => T::constant(*c, dim),
            NodeKind::Var(i) => args[*i].clone(),
            NodeKind::Neg(a) => self.eval_node(a, args, dim)?.neg(),
            NodeKind::Call(f, a) => {
                let v = self.eval_node(a, args, dim)?;
                match f {
                    Func::Sqrt => v.sqrt().map_err(wrap)?,
                    Func::Exp => v.exp().map_err(wrap)?,
                    Func::Ln => v.ln().map_err(wrap)?,
                    Func::Sin => v.sin(),
                    Func::Cos => v.cos(),
                }
            }
            NodeKind::Binary(BinOp::Pow, l, r) if r.is_constant() => {
                let base = self.eval_node(l, args, dim)?;
                let p: f64 = self.eval_node::<f64>(r, &[], 0)?;
                base.powf(p).map_err(wrap)?
            }
            NodeKind::Binary(op, l, r) => {
                let a = self.eval_node(l, args, dim)?;
                let b = self.eval_node(r, args, dim)?;
                match op {
                    BinOp::Add => a.add(&b),
                    BinOp::Sub => a.sub(&b),
                    BinOp::Mul => a.mul(&b),
                    BinOp::Div => a.div(&b).map_err(wrap)?,
                    BinOp::Pow => a.pow(&b).map_err(wrap)?,
                }
            }
        })
    }

    /// Symbolic partial derivative with respect to chart variable `var`.
    pub fn diff(&self, var: usize) -> Expr {
        Expr::from_node(diff::derivative(&self.root, var), self.chart.clone())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.root.write(&self.chart, &mut s);
        f.write_str(&s)
    }
}

impl ScalarField for Expr {
    fn dim(&self) -> usize {
        self.chart.len()
    }

    fn eval(&self, x: &[f64]) -> Result<f64> {
        Expr::eval(self, x)
    }

    fn jet(&self, x: &[f64]) -> Result<Jet2> {
        Expr::jet(self, x)
    }
}

/// Evaluation mode selector for callers that pick at runtime.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvalMode {
    Real,
    Jet,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Evaluated {
    Real(f64),
    Jet(Jet2),
}

pub fn evaluate(expr: &Expr, x: &[f64], mode: EvalMode) -> Result<Evaluated> {
    Ok(match mode {
        EvalMode::Real => Evaluated::Real(expr.eval(x)?),
        EvalMode::Jet => Evaluated::Jet(expr.jet(x)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn var(i: usize) -> Node {
        Node::new(NodeKind::Var(i), Span::default())
    }
    fn num(c: f64) -> Node {
        Node::new(NodeKind::Const(c), Span::default())
    }
    fn bin(op: BinOp, l: Node, r: Node) -> Node {
        Node::new(NodeKind::Binary(op, Box::new(l), Box::new(r)), Span::default())
    }
    fn call(f: Func, a: Node) -> Node {
        Node::new(NodeKind::Call(f, Box::new(a)), Span::default())
    }

    const UV: [&str; 2] = ["u1", "u2"];

    #[test]
    fn parses_norm() {
        let e = Expr::parse("sqrt(u1^2+u2^2)", &UV).unwrap();
        let expected = call(
            Func::Sqrt,
            bin(BinOp::Add, bin(BinOp::Pow, var(0), num(2.0)), bin(BinOp::Pow, var(1), num(2.0))),
        );
        assert_eq!(e.root(), &expected);
    }

    #[test]
    fn keeps_constant_subtree() {
        let e = Expr::parse("(u1+u2)/sqrt(2)", &UV).unwrap();
        let NodeKind::Binary(BinOp::Div, _, den) = &e.root().kind else { panic!() };
        assert_eq!(**den, call(Func::Sqrt, num(2.0)));
        assert!(den.is_constant());
    }

    #[test]
    fn syntax_error_offset() {
        match Expr::parse("u1+*2", &UV) {
            Err(GeomError::Parse { pos, .. }) => assert_eq!(pos, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn unknown_variable_names_chart() {
        let err = Expr::parse("u3+1", &UV).unwrap_err();
        match err {
            GeomError::UnknownVariable { name, chart } => {
                assert_eq!(name, "u3");
                assert!(chart.contains("u1"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn evaluation_modes() {
        let e = Expr::parse("sqrt(u1^2+u2^2)", &UV).unwrap();
        assert_eq!(e.eval(&[3.0, 4.0]).unwrap(), 5.0);
        let j = e.jet(&[3.0, 4.0]).unwrap();
        assert!((j.grad()[0] - 0.6).abs() < 1e-15 && (j.grad()[1] - 0.8).abs() < 1e-15);
        let ln = Expr::parse("ln(u1)", &UV).unwrap();
        assert!(matches!(ln.eval(&[0.0, 1.0]), Err(GeomError::Domain { .. })));
    }

    #[test]
    fn precedence_and_associativity() {
        let e = Expr::parse("-u1^2", &UV).unwrap();
        assert_eq!(e.eval(&[3.0, 0.0]).unwrap(), -9.0);
        let e = Expr::parse("2^3^2", &UV).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0]).unwrap(), 512.0);
        let e = Expr::parse("u1 - u2 - 1", &UV).unwrap();
        assert_eq!(e.eval(&[5.0, 2.0]).unwrap(), 2.0);
        let e = Expr::parse("8/4/2", &UV).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0]).unwrap(), 1.0);
        let e = Expr::parse("2*-u1", &UV).unwrap();
        assert_eq!(e.eval(&[1.5, 0.0]).unwrap(), -3.0);
    }

    #[test]
    fn domain_error_names_subexpression() {
        let e = Expr::parse("1 + sqrt(u1 - 2)", &UV).unwrap();
        match e.jet(&[1.0, 0.0]) {
            Err(GeomError::Domain { expr, .. }) => assert_eq!(expr, "sqrt(u1 - 2)"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn arity_checked() {
        assert!(matches!(Expr::parse("sin(u1, u2)", &UV), Err(GeomError::Parse { .. })));
        assert!(matches!(Expr::parse("sin u1", &UV), Err(GeomError::Parse { .. })));
    }

    #[test]
    fn scientific_literals() {
        let e = Expr::parse("1.5e-3*u1 + .5 + 2E2", &UV).unwrap();
        assert_eq!(e.eval(&[1000.0, 0.0]).unwrap(), 1.5 + 0.5 + 200.0);
    }

    #[test]
    fn pretty_print_round_trip() {
        for src in [
            "sqrt(u1^2+u2^2)",
            "(u1+u2)/sqrt(2)",
            "-(u1-u2)*(u1+u2)",
            "(-u1)^2",
            "u1^-u2",
            "u1^u2^2",
            "(u1^u2)^2",
            "u1-(u2-1)",
            "u1/(u2*3)",
            "--u1",
            "exp(2*u1)*cos(u2)+0.0000001",
        ] {
            let e = Expr::parse(src, &UV).unwrap();
            let again = Expr::parse(&e.to_string(), &UV).unwrap();
            assert_eq!(e, again, "{src} -> {e}");
        }
    }

    #[test]
    fn variable_power_uses_logarithm() {
        let e = Expr::parse("u1^u2", &UV).unwrap();
        let j = e.jet(&[2.0, 3.0]).unwrap();
        assert!((j.value() - 8.0).abs() < 1e-12);
        assert!((j.grad()[0] - 12.0).abs() < 1e-12);
        assert!((j.grad()[1] - 8.0 * 2f64.ln()).abs() < 1e-12);
    }
}
