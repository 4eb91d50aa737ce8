//! Parameter-domain boxes, sampling grids and quadrature weights.

use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::numeric::gauss_legendre;

pub const MIN_POINTS: usize = 5;
pub const DEFAULT_POINTS: usize = 17;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisKind {
    /// Endpoints included, trapezoid weights.
    Uniform,
    /// `[lo, hi)` identified at the ends, equal weights.
    Periodic,
    /// Gauss–Legendre interior nodes on a closed interval such as a polar angle.
    Polar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
    pub kind: AxisKind,
}

impl Axis {
    pub fn new(name: &str, lo: f64, hi: f64, n: usize, kind: AxisKind) -> Axis {
        Axis { name: name.to_string(), lo, hi, n, kind }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < MIN_POINTS {
            return Err(GeomError::Config(format!(
                "axis `{}` has {} points; at least {MIN_POINTS} are needed",
                self.name, self.n
            )));
        }
        if !(self.hi > self.lo) {
            return Err(GeomError::Config(format!("axis `{}` has an empty range", self.name)));
        }
        Ok(())
    }

    pub fn nodes(&self) -> Vec<f64> {
        let (lo, hi, n) = (self.lo, self.hi, self.n);
        match self.kind {
            AxisKind::Uniform => {
                (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect()
            }
            AxisKind::Periodic => (0..n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect(),
            AxisKind::Polar => {
                let (x, _) = gauss_legendre(n);
                x.iter().map(|t| lo + (hi - lo) * (t + 1.0) / 2.0).collect()
            }
        }
    }

    pub fn weights(&self) -> Vec<f64> {
        let (lo, hi, n) = (self.lo, self.hi, self.n);
        match self.kind {
            AxisKind::Uniform => {
                let h = (hi - lo) / (n - 1) as f64;
                (0..n).map(|k| if k == 0 || k == n - 1 { h / 2.0 } else { h }).collect()
            }
            AxisKind::Periodic => vec![(hi - lo) / n as f64; n],
            AxisKind::Polar => {
                let (_, w) = gauss_legendre(n);
                w.iter().map(|w| w * (hi - lo) / 2.0).collect()
            }
        }
    }

    /// Whether `t` lies in the closed domain of the axis (always true when periodic).
    pub fn contains(&self, t: f64) -> bool {
        match self.kind {
            AxisKind::Periodic => true,
            _ => {
                let slack = 1e-12 * (self.hi - self.lo);
                t >= self.lo - slack && t <= self.hi + slack
            }
        }
    }

    /// Whether the axis closes up on itself for quadrature purposes.
    pub fn is_closed(&self) -> bool {
        matches!(self.kind, AxisKind::Periodic | AxisKind::Polar)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub axes: Vec<Axis>,
}

impl Grid {
    pub fn new(axes: Vec<Axis>) -> Result<Grid> {
        for a in &axes {
            a.validate()?;
        }
        Ok(Grid { axes })
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn axis_index(&self, name: &str) -> Option<usize> {
        self.axes.iter().position(|a| a.name == name)
    }

    /// Row-major multi-index (last axis fastest).
    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim()];
        for (k, a) in self.axes.iter().enumerate().rev() {
            idx[k] = flat % a.n;
            flat /= a.n;
        }
        idx
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        let nodes: Vec<Vec<f64>> = self.axes.iter().map(Axis::nodes).collect();
        (0..self.len())
            .map(|flat| {
                self.multi_index(flat).iter().enumerate().map(|(k, &i)| nodes[k][i]).collect()
            })
            .collect()
    }

    pub fn contains(&self, u: &[f64]) -> bool {
        self.axes.iter().zip(u).all(|(a, t)| a.contains(*t))
    }

    /// Applies overrides like `t=8,theta=16` to the per-axis point counts.
    pub fn apply_counts(&mut self, spec: &str) -> Result<()> {
        for part in spec.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, count) = part
                .split_once('=')
                .ok_or_else(|| GeomError::Config(format!("grid entry `{part}` is not name=count")))?;
            let n: usize = count
                .trim()
                .parse()
                .map_err(|_| GeomError::Config(format!("grid count `{count}` is not an integer")))?;
            let name = name.trim();
            let axis = self.axes.iter_mut().find(|a| a.name == name).ok_or_else(|| {
                GeomError::Config(format!("grid names unknown axis `{name}`"))
            })?;
            let mut updated = axis.clone();
            updated.n = n;
            updated.validate()?;
            *axis = updated;
        }
        Ok(())
    }

    pub fn set_all_counts(&mut self, n: usize) -> Result<()> {
        for a in &mut self.axes {
            a.n = n;
            a.validate()?;
        }
        Ok(())
    }

    pub fn set_periodic(&mut self, name: &str) -> Result<()> {
        let axis = self
            .axes
            .iter_mut()
            .find(|a| a.name == name)
            .ok_or_else(|| GeomError::Config(format!("unknown axis `{name}`")))?;
        axis.kind = AxisKind::Periodic;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sphere_area_by_quadrature() {
        let th = Axis::new("theta", 0.0, PI, 16, AxisKind::Polar);
        let ph = Axis::new("phi", 0.0, 2.0 * PI, 16, AxisKind::Periodic);
        let area: f64 = th
            .nodes()
            .iter()
            .zip(th.weights())
            .map(|(t, w)| w * t.sin() * ph.weights().iter().sum::<f64>())
            .sum();
        assert!((area - 4.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn counts_and_ordering() {
        let mut g = Grid::new(vec![
            Axis::new("a", 0.0, 1.0, 5, AxisKind::Uniform),
            Axis::new("b", 0.0, 1.0, 6, AxisKind::Periodic),
        ])
        .unwrap();
        assert_eq!(g.len(), 30);
        assert_eq!(g.multi_index(7), vec![1, 1]);
        g.apply_counts("b=9").unwrap();
        assert_eq!(g.len(), 45);
        assert!(g.apply_counts("a=4").is_err());
        assert!(g.apply_counts("c=7").is_err());
        let pts = g.points();
        assert_eq!(pts[0], vec![0.0, 0.0]);
        assert_eq!(pts[44][0], 1.0);
    }
}
