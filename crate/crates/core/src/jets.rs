//! Second-order forward-mode differentiation.
//!
//! A [`Jet2`] carries the value, gradient and Hessian of a scalar with respect to
//! `m` chart coordinates. Only the upper triangle of each Hessian is computed; the
//! lower triangle is mirrored, so the stored matrix is exactly symmetric.

use nalgebra::{DMatrix, DVector};

use crate::error::{GeomError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Jet2 {
    value: f64,
    grad: Vec<f64>,
    hess: Vec<f64>,
}

/// Failure inside a single jet operation; the evaluator attaches the sub-expression.
#[derive(Debug, Clone, PartialEq)]
pub struct JetDomainError(pub String);

pub type JetResult = std::result::Result<Jet2, JetDomainError>;

fn domain(msg: impl Into<String>) -> JetDomainError {
    JetDomainError(msg.into())
}

impl Jet2 {
    pub fn constant(value: f64, dim: usize) -> Self {
        Jet2 { value, grad: vec![0.0; dim], hess: vec![0.0; dim * dim] }
    }

    /// The coordinate function `x_index` evaluated at `value`.
    pub fn variable(value: f64, index: usize, dim: usize) -> Self {
        let mut j = Jet2::constant(value, dim);
        j.grad[index] = 1.0;
        j
    }

    /// Builds a jet from raw parts, symmetrizing the Hessian from its upper triangle.
    pub fn from_parts(value: f64, grad: Vec<f64>, hess: &DMatrix<f64>) -> Result<Self> {
        let m = grad.len();
        if hess.nrows() != m || hess.ncols() != m {
            return Err(GeomError::DimensionMismatch { expected: m, got: hess.nrows() });
        }
        let mut h = vec![0.0; m * m];
        for i in 0..m {
            for j in i..m {
                h[i * m + j] = hess[(i, j)];
                h[j * m + i] = hess[(i, j)];
            }
        }
        Ok(Jet2 { value, grad, hess: h })
    }

    pub fn dim(&self) -> usize {
        self.grad.len()
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    pub fn hess(&self, i: usize, j: usize) -> f64 {
        self.hess[i * self.dim() + j]
    }

    pub fn gradient(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.grad)
    }

    pub fn hessian(&self) -> DMatrix<f64> {
        let m = self.dim();
        DMatrix::from_row_slice(m, m, &self.hess)
    }

    fn fill(m: usize, mut entry: impl FnMut(usize, usize) -> f64) -> Vec<f64> {
        let mut h = vec![0.0; m * m];
        for i in 0..m {
            for j in i..m {
                let v = entry(i, j);
                h[i * m + j] = v;
                h[j * m + i] = v;
            }
        }
        h
    }

    /// Applies a scalar function given its value and first two derivatives at `self.value`.
    pub fn compose(&self, f0: f64, f1: f64, f2: f64) -> Jet2 {
        let m = self.dim();
        let g = &self.grad;
        let grad = g.iter().map(|gi| f1 * gi).collect();
        let hess = Self::fill(m, |i, j| f1 * self.hess[i * m + j] + f2 * g[i] * g[j]);
        Jet2 { value: f0, grad, hess }
    }

    fn zip(&self, other: &Jet2, op: impl Fn(f64, f64) -> f64) -> Jet2 {
        debug_assert_eq!(self.dim(), other.dim());
        Jet2 {
            value: op(self.value, other.value),
            grad: self.grad.iter().zip(&other.grad).map(|(a, b)| op(*a, *b)).collect(),
            hess: self.hess.iter().zip(&other.hess).map(|(a, b)| op(*a, *b)).collect(),
        }
    }

    pub fn add(&self, other: &Jet2) -> Jet2 {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Jet2) -> Jet2 {
        self.zip(other, |a, b| a - b)
    }

    pub fn neg(&self) -> Jet2 {
        Jet2 {
            value: -self.value,
            grad: self.grad.iter().map(|g| -g).collect(),
            hess: self.hess.iter().map(|h| -h).collect(),
        }
    }

    pub fn scale(&self, c: f64) -> Jet2 {
        Jet2 {
            value: c * self.value,
            grad: self.grad.iter().map(|g| c * g).collect(),
            hess: self.hess.iter().map(|h| c * h).collect(),
        }
    }

    pub fn mul(&self, other: &Jet2) -> Jet2 {
        let m = self.dim();
        let (a, b) = (self.value, other.value);
        let (ga, gb) = (&self.grad, &other.grad);
        let grad = (0..m).map(|i| a * gb[i] + b * ga[i]).collect();
        let hess = Self::fill(m, |i, j| {
            a * other.hess[i * m + j] + b * self.hess[i * m + j] + ga[i] * gb[j] + gb[i] * ga[j]
        });
        Jet2 { value: a * b, grad, hess }
    }

    pub fn recip(&self) -> JetResult {
        let x = self.value;
        if x == 0.0 {
            return Err(domain("division by zero"));
        }
        Ok(self.compose(1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x)))
    }

    pub fn div(&self, other: &Jet2) -> JetResult {
        if other.value == 0.0 {
            return Err(domain("division by zero"));
        }
        let mut q = self.mul(&other.recip()?);
        q.value = self.value / other.value;
        Ok(q)
    }

    pub fn sqrt(&self) -> JetResult {
        let x = self.value;
        if x <= 0.0 {
            return Err(domain(format!("sqrt is not differentiable at {x}")));
        }
        let s = x.sqrt();
        Ok(self.compose(s, 0.5 / s, -0.25 / (s * x)))
    }

    pub fn exp(&self) -> JetResult {
        let e = self.value.exp();
        if !e.is_finite() {
            return Err(domain("exp overflow"));
        }
        Ok(self.compose(e, e, e))
    }

    pub fn ln(&self) -> JetResult {
        let x = self.value;
        if x <= 0.0 {
            return Err(domain(format!("ln of non-positive argument {x}")));
        }
        Ok(self.compose(x.ln(), 1.0 / x, -1.0 / (x * x)))
    }

    pub fn sin(&self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.compose(s, c, -s)
    }

    pub fn cos(&self) -> Jet2 {
        let (s, c) = self.value.sin_cos();
        self.compose(c, -s, -c)
    }

    /// `self^p` for a constant exponent. Negative bases are allowed for integer `p`.
    pub fn powf(&self, p: f64) -> JetResult {
        let x = self.value;
        let integer = p.fract() == 0.0;
        if x < 0.0 && !integer {
            return Err(domain(format!("non-integer power {p} of negative base {x}")));
        }
        if p == 0.0 {
            return Ok(Jet2::constant(1.0, self.dim()));
        }
        if p == 1.0 {
            return Ok(self.clone());
        }
        if x == 0.0 && !(integer && p >= 2.0) && p < 2.0 {
            return Err(domain(format!("power {p} is not twice differentiable at 0")));
        }
        let f0 = x.powf(p);
        let f1 = p * x.powf(p - 1.0);
        let f2 = p * (p - 1.0) * x.powf(p - 2.0);
        Ok(self.compose(f0, f1, f2))
    }

    /// `self^other` with a non-constant exponent, via `exp(other * ln self)`.
    pub fn pow(&self, other: &Jet2) -> JetResult {
        if self.value <= 0.0 {
            return Err(domain(format!("variable power of non-positive base {}", self.value)));
        }
        let v = self.value.powf(other.value);
        if !v.is_finite() {
            return Err(domain("power overflow"));
        }
        Ok(other.mul(&self.ln()?).compose(v, v, v))
    }

    /// `uᵀ H v`.
    pub fn second_directional(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        let m = self.dim();
        for len in [u.len(), v.len()] {
            if len != m {
                return Err(GeomError::DimensionMismatch { expected: m, got: len });
            }
        }
        let mut s = 0.0;
        for i in 0..m {
            for j in 0..m {
                s += u[i] * self.hess[i * m + j] * v[j];
            }
        }
        Ok(s)
    }
}

/// A scalar field evaluable in real or jet mode.
pub trait ScalarField: Send + Sync {
    fn dim(&self) -> usize;
    fn eval(&self, x: &[f64]) -> Result<f64>;
    fn jet(&self, x: &[f64]) -> Result<Jet2>;
}

pub fn lift_and_evaluate(f: &dyn ScalarField, x: &[f64]) -> Result<Jet2> {
    if x.len() != f.dim() {
        return Err(GeomError::DimensionMismatch { expected: f.dim(), got: x.len() });
    }
    f.jet(x)
}

pub fn directional_second_derivative(
    f: &dyn ScalarField,
    x: &[f64],
    u: &[f64],
    v: &[f64],
) -> Result<f64> {
    lift_and_evaluate(f, x)?.second_directional(u, v)
}

/// Arithmetic shared by the real and jet evaluators.
pub trait Number: Clone + Send + Sync {
    fn constant(c: f64, dim: usize) -> Self;
    fn variable(x: f64, index: usize, dim: usize) -> Self;
    fn real(&self) -> f64;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn div(&self, o: &Self) -> std::result::Result<Self, JetDomainError>;
    fn powf(&self, p: f64) -> std::result::Result<Self, JetDomainError>;
    fn pow(&self, o: &Self) -> std::result::Result<Self, JetDomainError>;
    fn sqrt(&self) -> std::result::Result<Self, JetDomainError>;
    fn exp(&self) -> std::result::Result<Self, JetDomainError>;
    fn ln(&self) -> std::result::Result<Self, JetDomainError>;
    fn sin(&self) -> Self;
    fn cos(&self) -> Self;
}

impl Number for f64 {
    fn constant(c: f64, _dim: usize) -> Self {
        c
    }
    fn variable(x: f64, _index: usize, _dim: usize) -> Self {
        x
    }
    fn real(&self) -> f64 {
        *self
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn div(&self, o: &Self) -> std::result::Result<Self, JetDomainError> {
        if *o == 0.0 {
            Err(domain("division by zero"))
        } else {
            Ok(self / o)
        }
    }
    fn powf(&self, p: f64) -> std::result::Result<Self, JetDomainError> {
        if *self < 0.0 && p.fract() != 0.0 {
            return Err(domain(format!("non-integer power {p} of negative base {self}")));
        }
        if *self == 0.0 && p < 0.0 {
            return Err(domain("negative power of zero"));
        }
        Ok(f64::powf(*self, p))
    }
    fn pow(&self, o: &Self) -> std::result::Result<Self, JetDomainError> {
        if *self <= 0.0 {
            return Err(domain(format!("variable power of non-positive base {self}")));
        }
        Ok(f64::powf(*self, *o))
    }
    fn sqrt(&self) -> std::result::Result<Self, JetDomainError> {
        if *self < 0.0 {
            Err(domain(format!("sqrt of negative argument {self}")))
        } else {
            Ok(f64::sqrt(*self))
        }
    }
    fn exp(&self) -> std::result::Result<Self, JetDomainError> {
        let e = f64::exp(*self);
        if e.is_finite() {
            Ok(e)
        } else {
            Err(domain("exp overflow"))
        }
    }
    fn ln(&self) -> std::result::Result<Self, JetDomainError> {
        if *self <= 0.0 {
            Err(domain(format!("ln of non-positive argument {self}")))
        } else {
            Ok(f64::ln(*self))
        }
    }
    fn sin(&self) -> Self {
        f64::sin(*self)
    }
    fn cos(&self) -> Self {
        f64::cos(*self)
    }
}

impl Number for Jet2 {
    fn constant(c: f64, dim: usize) -> Self {
        Jet2::constant(c, dim)
    }
    fn variable(x: f64, index: usize, dim: usize) -> Self {
        Jet2::variable(x, index, dim)
    }
    fn real(&self) -> f64 {
        self.value
    }
    fn add(&self, o: &Self) -> Self {
        Jet2::add(self, o)
    }
    fn sub(&self, o: &Self) -> Self {
        Jet2::sub(self, o)
    }
    fn mul(&self, o: &Self) -> Self {
        Jet2::mul(self, o)
    }
    fn neg(&self) -> Self {
        Jet2::neg(self)
    }
    fn div(&self, o: &Self) -> JetResult {
        Jet2::div(self, o)
    }
    fn powf(&self, p: f64) -> JetResult {
        Jet2::powf(self, p)
    }
    fn pow(&self, o: &Self) -> JetResult {
        Jet2::pow(self, o)
    }
    fn sqrt(&self) -> JetResult {
        Jet2::sqrt(self)
    }
    fn exp(&self) -> JetResult {
        Jet2::exp(self)
    }
    fn ln(&self) -> JetResult {
        Jet2::ln(self)
    }
    fn sin(&self) -> Self {
        Jet2::sin(self)
    }
    fn cos(&self) -> Self {
        Jet2::cos(self)
    }
}
