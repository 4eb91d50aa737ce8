//! Small finite-difference and quadrature helpers.

use crate::error::Result;

/// Cube root of machine epsilon, the balanced step for central differences.
pub const EPS_CBRT: f64 = 6.055454452393343e-6;

pub fn fd_step(x: f64) -> f64 {
    EPS_CBRT * (1.0 + x.abs())
}

/// Central difference at `h` and `h/2`, combined by one Richardson step.
/// `f(t)` evaluates the sampled quantity at offset `t`.
pub fn richardson_central<F>(h: f64, f: F) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<Vec<f64>>,
{
    let d1 = central(h, &f)?;
    let d2 = central(h / 2.0, &f)?;
    Ok(d1.iter().zip(&d2).map(|(a, b)| (4.0 * b - a) / 3.0).collect())
}

fn central<F>(h: f64, f: &F) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<Vec<f64>>,
{
    let p = f(h)?;
    let m = f(-h)?;
    Ok(p.iter().zip(&m).map(|(a, b)| (a - b) / (2.0 * h)).collect())
}

/// Second-order one-sided difference toward `sign` (±1), with one Richardson step.
pub fn richardson_one_sided<F>(h: f64, sign: f64, f: F) -> Result<Vec<f64>>
where
    F: Fn(f64) -> Result<Vec<f64>>,
{
    let f0 = f(0.0)?;
    let one = |h: f64| -> Result<Vec<f64>> {
        let a = f(sign * h)?;
        let b = f(2.0 * sign * h)?;
        Ok((0..f0.len()).map(|i| sign * (-3.0 * f0[i] + 4.0 * a[i] - b[i]) / (2.0 * h)).collect())
    };
    let d1 = one(h)?;
    let d2 = one(h / 2.0)?;
    Ok(d1.iter().zip(&d2).map(|(a, b)| (4.0 * b - a) / 3.0).collect())
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let k = k as f64;
                let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 { 1.0 } else { p1 };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}
