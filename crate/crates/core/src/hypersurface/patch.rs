use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{GeomError, Result};
use crate::expr::Expr;
use crate::grid::Grid;
use crate::numeric::{richardson_central, richardson_one_sided, EPS_CBRT};
use crate::spacetime::MetricSpec;

/// A parametrized hypersurface `ψ: D ⊂ ℝ^{n+1} → ℝ^{n+2}` with its sampling grid.
#[derive(Debug, Clone)]
pub struct HypersurfacePatch {
    name: String,
    ambient: Arc<MetricSpec>,
    chart: Vec<String>,
    embedding: Vec<Expr>,
    grid: Grid,
    leaf_axis: Option<usize>,
    steps: StepBases,
}

/// Relative step sizes; each is scaled by `1 + |u|∞` at the evaluation point.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct StepBases {
    pub inner: f64,
    pub outer: f64,
}

impl Default for StepBases {
    fn default() -> Self {
        StepBases { inner: EPS_CBRT, outer: 1e-3 }
    }
}

/// `ψ(u)`, its Jacobian `J` (columns `∂_aψ`) and the Hessians `∂_a∂_bψ^A`.
#[derive(Debug, Clone)]
pub struct EmbeddingJet {
    pub x: DVector<f64>,
    pub jac: DMatrix<f64>,
    pub second: Vec<DMatrix<f64>>,
}

impl EmbeddingJet {
    /// Ambient components of `∂_a∂_bψ`.
    pub fn second_at(&self, a: usize, b: usize) -> DVector<f64> {
        DVector::from_fn(self.second.len(), |k, _| self.second[k][(a, b)])
    }
}

impl HypersurfacePatch {
    pub fn new(
        name: &str,
        ambient: Arc<MetricSpec>,
        chart: Vec<String>,
        embedding: Vec<Expr>,
        grid: Grid,
        leaf_axis: Option<&str>,
    ) -> Result<HypersurfacePatch> {
        let d = ambient.dim();
        if embedding.len() != d {
            return Err(GeomError::DimensionMismatch { expected: d, got: embedding.len() });
        }
        if chart.len() != d - 1 {
            return Err(GeomError::DimensionMismatch { expected: d - 1, got: chart.len() });
        }
        if grid.dim() != chart.len() {
            return Err(GeomError::DimensionMismatch { expected: chart.len(), got: grid.dim() });
        }
        for (axis, name) in grid.axes.iter().zip(&chart) {
            if axis.name != *name {
                return Err(GeomError::Config(format!(
                    "grid axis `{}` does not match chart variable `{name}`",
                    axis.name
                )));
            }
        }
        for e in &embedding {
            if e.chart() != chart.as_slice() {
                return Err(GeomError::Config("embedding expressions use a different chart".into()));
            }
        }
        let leaf_axis = match leaf_axis {
            None => None,
            Some(l) => Some(chart.iter().position(|c| c == l).ok_or_else(|| {
                GeomError::Config(format!("leaf axis `{l}` is not a chart variable"))
            })?),
        };
        Ok(HypersurfacePatch {
            name: name.to_string(),
            ambient,
            chart,
            embedding,
            grid,
            leaf_axis,
            steps: StepBases::default(),
        })
    }

    pub fn from_texts(
        name: &str,
        ambient: Arc<MetricSpec>,
        chart: &[&str],
        embedding: &[String],
        grid: Grid,
        leaf_axis: Option<&str>,
    ) -> Result<HypersurfacePatch> {
        let chart: Vec<String> = chart.iter().map(|s| s.to_string()).collect();
        let exprs = embedding.iter().map(|t| Expr::parse(t, &chart)).collect::<Result<Vec<_>>>()?;
        Self::new(name, ambient, chart, exprs, grid, leaf_axis)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ambient(&self) -> &MetricSpec {
        &self.ambient
    }

    pub fn ambient_arc(&self) -> Arc<MetricSpec> {
        self.ambient.clone()
    }

    pub fn chart(&self) -> &[String] {
        &self.chart
    }

    pub fn embedding(&self) -> &[Expr] {
        &self.embedding
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn set_grid(&mut self, grid: Grid) -> Result<()> {
        if grid.dim() != self.chart.len() {
            return Err(GeomError::DimensionMismatch { expected: self.chart.len(), got: grid.dim() });
        }
        self.grid = grid;
        Ok(())
    }

    pub fn leaf_axis(&self) -> Option<usize> {
        self.leaf_axis
    }

    pub fn set_leaf_axis(&mut self, axis: Option<&str>) -> Result<()> {
        self.leaf_axis = match axis {
            None => None,
            Some(l) => Some(
                self.chart
                    .iter()
                    .position(|c| c == l)
                    .ok_or_else(|| GeomError::Config(format!("unknown leaf axis `{l}`")))?,
            ),
        };
        Ok(())
    }

    /// Parameter dimension `n + 1`.
    pub fn dim(&self) -> usize {
        self.chart.len()
    }

    /// Screen dimension `n`.
    pub fn screen_dim(&self) -> usize {
        self.chart.len() - 1
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient.dim()
    }

    pub fn embed(&self, u: &[f64]) -> Result<DVector<f64>> {
        let v = self.embedding.iter().map(|e| e.eval(u)).collect::<Result<Vec<_>>>()?;
        Ok(DVector::from_vec(v))
    }

    pub fn embedding_jet(&self, u: &[f64]) -> Result<EmbeddingJet> {
        let (d, m) = (self.ambient_dim(), self.dim());
        let mut x = DVector::zeros(d);
        let mut jac = DMatrix::zeros(d, m);
        let mut second = Vec::with_capacity(d);
        for (k, e) in self.embedding.iter().enumerate() {
            let j = e.jet(u)?;
            x[k] = j.value();
            for a in 0..m {
                jac[(k, a)] = j.grad()[a];
            }
            second.push(j.hessian());
        }
        Ok(EmbeddingJet { x, jac, second })
    }

    /// Derivative of a sampled quantity along a parameter direction, with central
    /// stencils inside the domain and one-sided stencils near non-periodic edges.
    /// `step` is the base step before scaling by the direction's max-norm.
    pub fn derivative<F>(&self, u: &[f64], dir: &[f64], step: f64, f: F) -> Result<Vec<f64>>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>>,
    {
        let dn = dir.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if dn == 0.0 {
            return Ok(vec![0.0; f(u)?.len()]);
        }
        let h = step / dn;
        let at = |t: f64| -> Vec<f64> { u.iter().zip(dir).map(|(a, d)| a + t * d).collect() };
        let inside = |t: f64| self.grid.contains(&at(t));
        let g = |t: f64| f(&at(t));
        if inside(h) && inside(-h) {
            richardson_central(h, g)
        } else if inside(2.0 * h) {
            richardson_one_sided(h, 1.0, g)
        } else if inside(-2.0 * h) {
            richardson_one_sided(h, -1.0, g)
        } else if dir.iter().filter(|v| **v != 0.0).count() > 1 {
            let mut acc: Option<Vec<f64>> = None;
            for (k, dk) in dir.iter().enumerate().filter(|(_, v)| **v != 0.0) {
                let g: &dyn Fn(&[f64]) -> Result<Vec<f64>> = &f;
                let p = self.partial(u, k, step, g)?;
                match acc.as_mut() {
                    Some(a) => a.iter_mut().zip(&p).for_each(|(a, p)| *a += dk * p),
                    None => acc = Some(p.iter().map(|p| dk * p).collect()),
                }
            }
            Ok(acc.unwrap_or_default())
        } else {
            let k = (0..dir.len()).max_by(|&i, &j| dir[i].abs().total_cmp(&dir[j].abs())).unwrap_or(0);
            Err(GeomError::GridBoundary { axis: self.chart[k].clone(), point: u.to_vec() })
        }
    }

    pub fn partial<F>(&self, u: &[f64], axis: usize, step: f64, f: F) -> Result<Vec<f64>>
    where
        F: Fn(&[f64]) -> Result<Vec<f64>>,
    {
        let mut dir = vec![0.0; self.dim()];
        dir[axis] = 1.0;
        self.derivative(u, &dir, step, f)
    }

    pub fn steps(&self) -> StepBases {
        self.steps
    }

    pub fn set_steps(&mut self, steps: StepBases) -> Result<()> {
        for (name, v) in [("inner step", steps.inner), ("outer step", steps.outer)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(GeomError::Config(format!("{name} must lie in (0, 1), got {v}")));
            }
        }
        self.steps = steps;
        Ok(())
    }

    /// Step for first derivatives of pointwise quantities.
    pub fn inner_step(&self, u: &[f64]) -> f64 {
        self.steps.inner * (1.0 + u.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }

    /// Step for derivatives of quantities that are themselves differenced.
    pub fn outer_step(&self, u: &[f64]) -> f64 {
        self.steps.outer * (1.0 + u.iter().fold(0.0f64, |m, v| m.max(v.abs())))
    }

    /// Induced metric from the embedding Jacobian.
    pub fn induced_metric(&self, jac: &DMatrix<f64>, gbar: &DMatrix<f64>) -> DMatrix<f64> {
        let g = jac.transpose() * gbar * jac;
        (&g + g.transpose()) * 0.5
    }
}
