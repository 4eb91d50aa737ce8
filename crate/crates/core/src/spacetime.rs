//! Ambient Lorentzian metrics: evaluation, connection, curvature and the catalog.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{GeomError, Result};
use crate::expr::Expr;
use crate::numeric::{self, fd_step};

pub const SINGULAR_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CatalogMetric {
    Minkowski { dim: usize },
    SchwarzschildEf { m: f64 },
    Warped6d,
}

impl fmt::Display for CatalogMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CatalogMetric::Minkowski { dim } => write!(f, "minkowski:{dim}"),
            CatalogMetric::SchwarzschildEf { m } => write!(f, "schwarzschild_ef:m={m}"),
            CatalogMetric::Warped6d => write!(f, "warped6d"),
        }
    }
}

/// Christoffel symbols `Γ^a_{bc}`, stored as `[a][b][c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    dim: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn zeros(dim: usize) -> Self {
        Christoffel { dim, data: vec![0.0; dim * dim * dim] }
    }

    /// Builds `Γ^a_{bc} = f(a, b, c)`.
    pub fn from_fn(dim: usize, f: impl Fn(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(dim * dim * dim);
        for a in 0..dim {
            for b in 0..dim {
                for c in 0..dim {
                    data.push(f(a, b, c));
                }
            }
        }
        Christoffel { dim, data }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, a: usize, b: usize, c: usize) -> f64 {
        self.data[(a * self.dim + b) * self.dim + c]
    }

    fn set_sym(&mut self, a: usize, b: usize, c: usize, v: f64) {
        let d = self.dim;
        self.data[(a * d + b) * d + c] = v;
        self.data[(a * d + c) * d + b] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    /// The vector `Γ(u, v)^a = Γ^a_{bc} u^b v^c`.
    pub fn contract(&self, u: &DVector<f64>, v: &DVector<f64>) -> DVector<f64> {
        let d = self.dim;
        DVector::from_fn(d, |a, _| {
            let mut s = 0.0;
            for b in 0..d {
                if u[b] == 0.0 {
                    continue;
                }
                for c in 0..d {
                    s += self.get(a, b, c) * u[b] * v[c];
                }
            }
            s
        })
    }

    pub fn max_abs_diff(&self, other: &Christoffel) -> f64 {
        numeric::max_abs_diff(&self.data, &other.data)
    }
}

/// Riemann tensor `R^a_{bcd}` with `R(∂_c, ∂_d)∂_b = R^a_{bcd} ∂_a`.
#[derive(Debug, Clone, PartialEq)]
pub struct Riemann {
    dim: usize,
    data: Vec<f64>,
}

impl Riemann {
    pub fn dim(&self) -> usize {
        self.dim
    }

    fn idx(&self, a: usize, b: usize, c: usize, d: usize) -> usize {
        ((a * self.dim + b) * self.dim + c) * self.dim + d
    }

    pub fn get(&self, a: usize, b: usize, c: usize, d: usize) -> f64 {
        self.data[self.idx(a, b, c, d)]
    }

    /// Assembles `R^a_{bcd}` from `Γ` and its partials `dgamma[e] = ∂_e Γ`.
    pub fn from_connection(gamma: &Christoffel, dgamma: &[Christoffel]) -> Riemann {
        let n = gamma.dim();
        let mut data = vec![0.0; n * n * n * n];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        let mut r = dgamma[c].get(a, d, b) - dgamma[d].get(a, c, b);
                        for e in 0..n {
                            r += gamma.get(a, c, e) * gamma.get(e, d, b)
                                - gamma.get(a, d, e) * gamma.get(e, c, b);
                        }
                        data[((a * n + b) * n + c) * n + d] = r;
                    }
                }
            }
        }
        Riemann { dim: n, data }
    }

    /// `R(u, v)w`.
    pub fn apply(&self, u: &DVector<f64>, v: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
        let n = self.dim;
        DVector::from_fn(n, |a, _| {
            let mut s = 0.0;
            for b in 0..n {
                if w[b] == 0.0 {
                    continue;
                }
                for c in 0..n {
                    if u[c] == 0.0 {
                        continue;
                    }
                    for d in 0..n {
                        s += self.get(a, b, c, d) * w[b] * u[c] * v[d];
                    }
                }
            }
            s
        })
    }

    /// `R_{abcd} = g_{ae} R^e_{bcd}`.
    pub fn lowered(&self, g: &DMatrix<f64>) -> Vec<f64> {
        let n = self.dim;
        let mut out = vec![0.0; self.data.len()];
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        out[self.idx(a, b, c, d)] =
                            (0..n).map(|e| g[(a, e)] * self.get(e, b, c, d)).sum();
                    }
                }
            }
        }
        out
    }

    /// `Ric_{db} = R^c_{bcd}`.
    pub fn ricci(&self) -> DMatrix<f64> {
        let n = self.dim;
        DMatrix::from_fn(n, n, |d, b| (0..n).map(|c| self.get(c, b, c, d)).sum())
    }
}

#[derive(Debug, Clone)]
pub struct CurvatureSample {
    pub point: Vec<f64>,
    pub metric: DMatrix<f64>,
    pub christoffel: Christoffel,
    pub riemann: Riemann,
    pub ricci: DMatrix<f64>,
}

impl CurvatureSample {
    /// `⟨R(u,v)w, x⟩`.
    pub fn inner(
        &self,
        u: &DVector<f64>,
        v: &DVector<f64>,
        w: &DVector<f64>,
        x: &DVector<f64>,
    ) -> f64 {
        self.riemann.apply(u, v, w).dot(&(&self.metric * x))
    }

    pub fn ricci_form(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        u.dot(&(&self.ricci * v))
    }

    pub fn sectional(&self, u: &DVector<f64>, v: &DVector<f64>) -> Result<f64> {
        let g = &self.metric;
        let uu = u.dot(&(g * u));
        let vv = v.dot(&(g * v));
        let uv = u.dot(&(g * v));
        let den = uu * vv - uv * uv;
        if den.abs() < 1e-12 * (u.norm_squared() * v.norm_squared()).max(1e-300) {
            return Err(GeomError::DegeneratePlane { denominator: den });
        }
        Ok(self.inner(u, v, v, u) / den)
    }

    /// Max-norm of the lowered-index antisymmetry and first Bianchi defects.
    pub fn symmetry_residual(&self) -> f64 {
        let n = self.riemann.dim();
        let low = self.riemann.lowered(&self.metric);
        let at = |a: usize, b: usize, c: usize, d: usize| low[((a * n + b) * n + c) * n + d];
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    for d in 0..n {
                        worst = worst
                            .max((at(a, b, c, d) + at(b, a, c, d)).abs())
                            .max((at(a, b, c, d) + at(a, b, d, c)).abs())
                            .max(
                                (self.riemann.get(a, b, c, d)
                                    + self.riemann.get(a, c, d, b)
                                    + self.riemann.get(a, d, b, c))
                                .abs(),
                            );
                    }
                }
            }
        }
        worst
    }

    pub fn space_form_residual(&self, c: f64) -> f64 {
        let n = self.riemann.dim();
        let g = &self.metric;
        let low = self.riemann.lowered(g);
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in 0..n {
                for cc in 0..n {
                    for d in 0..n {
                        let model = c * (g[(a, cc)] * g[(b, d)] - g[(a, d)] * g[(b, cc)]);
                        worst = worst.max((low[((a * n + b) * n + cc) * n + d] - model).abs());
                    }
                }
            }
        }
        worst
    }
}

/// An ambient metric given by component expressions over a chart.
#[derive(Debug, Clone)]
pub struct MetricSpec {
    dim: usize,
    chart: Vec<String>,
    components: Vec<Expr>,
    catalog: Option<CatalogMetric>,
    claimed_curvature: Option<f64>,
    time_sign: f64,
}

fn upper_index(dim: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * dim - i * (i + 1) / 2 + j
}

fn default_chart(dim: usize) -> Vec<String> {
    (0..dim).map(|i| format!("x{i}")).collect()
}

#[derive(Serialize, Deserialize)]
struct MetricFile {
    dim: usize,
    #[serde(default)]
    chart: Option<Vec<String>>,
    #[serde(default)]
    constant_curvature: Option<f64>,
    #[serde(default)]
    future: Option<String>,
    components: BTreeMap<String, String>,
}

pub(crate) fn parse_future(s: &str, chart: &[String]) -> Result<f64> {
    let t = s.trim();
    let (sign, rest) = match t.as_bytes().first() {
        Some(b'+') => (1.0, &t[1..]),
        Some(b'-') => (-1.0, &t[1..]),
        _ => (1.0, t),
    };
    if chart.first().map(String::as_str) == Some(rest) || rest == "x0" {
        Ok(sign)
    } else {
        Err(GeomError::Config(format!(
            "time orientation `{s}` must be `+{0}` or `-{0}`",
            chart.first().map(String::as_str).unwrap_or("x0")
        )))
    }
}

impl MetricSpec {
    /// Builds a metric from upper-triangle components `(i, j, text)`; missing entries are zero.
    pub fn from_components(
        chart: Vec<String>,
        entries: &[(usize, usize, String)],
        claimed_curvature: Option<f64>,
        time_sign: f64,
    ) -> Result<MetricSpec> {
        let dim = chart.len();
        if dim < 3 {
            return Err(GeomError::Config(format!("ambient dimension {dim} < 3")));
        }
        let mut components = vec![Expr::constant(0.0, &chart); dim * (dim + 1) / 2];
        for (i, j, text) in entries {
            if *i >= dim || *j >= dim {
                return Err(GeomError::DimensionMismatch { expected: dim, got: (*i).max(*j) + 1 });
            }
            components[upper_index(dim, *i, *j)] = Expr::parse(text, &chart)?;
        }
        Ok(MetricSpec { dim, chart, components, catalog: None, claimed_curvature, time_sign })
    }

    fn catalog_entry(cat: CatalogMetric, entries: &[(usize, usize, String)]) -> MetricSpec {
        let dim = match cat {
            CatalogMetric::Minkowski { dim } => dim,
            CatalogMetric::SchwarzschildEf { .. } => 4,
            CatalogMetric::Warped6d => 6,
        };
        let (curv, sign) = match cat {
            CatalogMetric::Minkowski { .. } => (Some(0.0), -1.0),
            CatalogMetric::SchwarzschildEf { .. } => (None, 1.0),
            CatalogMetric::Warped6d => (None, -1.0),
        };
        let mut m = MetricSpec::from_components(default_chart(dim), entries, curv, sign)
            .expect("catalog metric expressions parse");
        m.catalog = Some(cat);
        m
    }

    pub fn minkowski(dim: usize) -> Result<MetricSpec> {
        if dim < 3 {
            return Err(GeomError::Config(format!("minkowski dimension {dim} < 3")));
        }
        let mut e = vec![(0, 0, "-1".to_string())];
        e.extend((1..dim).map(|i| (i, i, "1".to_string())));
        Ok(Self::catalog_entry(CatalogMetric::Minkowski { dim }, &e))
    }

    pub fn schwarzschild_ef(m: f64) -> Result<MetricSpec> {
        if !(m > 0.0 && m.is_finite()) {
            return Err(GeomError::Config(format!("Schwarzschild mass must be positive, got {m}")));
        }
        let e = vec![
            (0, 0, format!("-(1 - 2*{m}/x1)")),
            (0, 1, format!("2*{m}/x1")),
            (1, 1, format!("1 + 2*{m}/x1")),
            (2, 2, "x1^2".to_string()),
            (3, 3, "x1^2*sin(x2)^2".to_string()),
        ];
        Ok(Self::catalog_entry(CatalogMetric::SchwarzschildEf { m }, &e))
    }

    pub fn warped6d() -> MetricSpec {
        let e = vec![
            (0, 0, "-1".to_string()),
            (1, 1, "1".to_string()),
            (2, 2, "exp(2*x0)".to_string()),
            (3, 3, "exp(2*x0)".to_string()),
            (4, 4, "exp(2*x1)".to_string()),
            (5, 5, "exp(2*x1)".to_string()),
        ];
        Self::catalog_entry(CatalogMetric::Warped6d, &e)
    }

    pub fn from_catalog(cat: CatalogMetric) -> Result<MetricSpec> {
        match cat {
            CatalogMetric::Minkowski { dim } => Self::minkowski(dim),
            CatalogMetric::SchwarzschildEf { m } => Self::schwarzschild_ef(m),
            CatalogMetric::Warped6d => Ok(Self::warped6d()),
        }
    }

    /// Parses `minkowski[:dim]`, `schwarzschild_ef[:m=<mass>]` or `warped6d`.
    pub fn parse_catalog_id(id: &str) -> Result<CatalogMetric> {
        let (name, arg) = match id.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (id.trim(), None),
        };
        let bad = |msg: &str| GeomError::Config(format!("metric `{id}`: {msg}"));
        match name {
            "minkowski" => {
                let dim = match arg {
                    None => 4,
                    Some(a) => a
                        .trim_start_matches("dim=")
                        .parse()
                        .map_err(|_| bad("dimension must be an integer"))?,
                };
                Ok(CatalogMetric::Minkowski { dim })
            }
            "schwarzschild_ef" => {
                let m = match arg {
                    None => 1.0,
                    Some(a) => {
                        a.trim_start_matches("m=").parse().map_err(|_| bad("mass must be a number"))?
                    }
                };
                Ok(CatalogMetric::SchwarzschildEf { m })
            }
            "warped6d" if arg.is_none() => Ok(CatalogMetric::Warped6d),
            _ => Err(bad("unknown catalog id (minkowski, schwarzschild_ef, warped6d)")),
        }
    }

    /// Catalog id or path to a metric-definition file.
    pub fn resolve(id: &str) -> Result<MetricSpec> {
        let path = id.strip_prefix("file:").unwrap_or(id);
        if path.ends_with(".toml") || id.starts_with("file:") {
            return Self::load(Path::new(path));
        }
        Self::from_catalog(Self::parse_catalog_id(id)?)
    }

    pub fn load(path: &Path) -> Result<MetricSpec> {
        let text = std::fs::read_to_string(path).map_err(|e| GeomError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::from_file_str(&text)
    }

    pub fn from_file_str(text: &str) -> Result<MetricSpec> {
        let file: MetricFile =
            toml::from_str(text).map_err(|e| GeomError::Config(format!("metric file: {e}")))?;
        let chart = file.chart.unwrap_or_else(|| default_chart(file.dim));
        if chart.len() != file.dim {
            return Err(GeomError::DimensionMismatch { expected: file.dim, got: chart.len() });
        }
        let mut entries = Vec::new();
        for (key, text) in &file.components {
            let idx = key.strip_prefix('g').unwrap_or(key);
            let parsed = if idx.len() == 2 && file.dim <= 10 {
                let b = idx.as_bytes();
                Some(((b[0] - b'0') as usize, (b[1] - b'0') as usize))
            } else {
                idx.split_once(',').and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)))
            };
            let Some((i, j)) = parsed.filter(|(i, j)| i <= j) else {
                return Err(GeomError::Config(format!(
                    "component key `{key}` must name an upper-triangle entry like g01"
                )));
            };
            entries.push((i, j, text.clone()));
        }
        let sign = match &file.future {
            Some(s) => parse_future(s, &chart)?,
            None => 1.0,
        };
        MetricSpec::from_components(chart, &entries, file.constant_curvature, sign)
    }

    pub fn to_file_string(&self) -> String {
        let mut components = BTreeMap::new();
        for i in 0..self.dim {
            for j in i..self.dim {
                let e = &self.components[upper_index(self.dim, i, j)];
                if e.is_constant() && e.eval(&vec![0.0; self.dim]).ok() == Some(0.0) {
                    continue;
                }
                let key =
                    if self.dim <= 10 { format!("g{i}{j}") } else { format!("g{i},{j}") };
                components.insert(key, e.to_string());
            }
        }
        let sign = if self.time_sign > 0.0 { "+" } else { "-" };
        let file = MetricFile {
            dim: self.dim,
            chart: Some(self.chart.clone()),
            constant_curvature: self.claimed_curvature,
            future: Some(format!("{sign}{}", self.chart[0])),
            components,
        };
        toml::to_string(&file).expect("metric file serializes")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn chart(&self) -> &[String] {
        &self.chart
    }

    pub fn catalog(&self) -> Option<CatalogMetric> {
        self.catalog
    }

    pub fn claimed_curvature(&self) -> Option<f64> {
        self.claimed_curvature
    }

    pub fn component(&self, i: usize, j: usize) -> &Expr {
        &self.components[upper_index(self.dim, i, j)]
    }

    pub fn time_sign(&self) -> f64 {
        self.time_sign
    }

    /// Selects which sign of `dx⁰` marks future-directed causal vectors.
    pub fn set_time_sign(&mut self, sign: f64) {
        self.time_sign = if sign < 0.0 { -1.0 } else { 1.0 };
    }

    pub fn set_claimed_curvature(&mut self, c: Option<f64>) {
        self.claimed_curvature = c;
    }

    pub fn label(&self) -> String {
        match self.catalog {
            Some(c) => c.to_string(),
            None => format!("expressions({}d)", self.dim),
        }
    }

    fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(GeomError::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(())
    }

    pub fn metric_at(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_point(x)?;
        let n = self.dim;
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.components[upper_index(n, i, j)].eval(x)?;
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        Ok(g)
    }

    /// Metric and its first partials `dg[k] = ∂_k g`.
    pub fn metric_jets(&self, x: &[f64]) -> Result<(DMatrix<f64>, Vec<DMatrix<f64>>)> {
        self.check_point(x)?;
        let n = self.dim;
        let mut g = DMatrix::zeros(n, n);
        let mut dg = vec![DMatrix::zeros(n, n); n];
        for i in 0..n {
            for j in i..n {
                let e = &self.components[upper_index(n, i, j)];
                if e.is_constant() {
                    let v = e.eval(x)?;
                    g[(i, j)] = v;
                    g[(j, i)] = v;
                    continue;
                }
                let jet = e.jet(x)?;
                g[(i, j)] = jet.value();
                g[(j, i)] = jet.value();
                for (k, d) in dg.iter_mut().enumerate() {
                    d[(i, j)] = jet.grad()[k];
                    d[(j, i)] = jet.grad()[k];
                }
            }
        }
        Ok((g, dg))
    }

    pub fn inverse_metric(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        invert_checked(&self.metric_at(x)?, x)
    }

    /// Verifies one negative and `dim − 1` positive eigenvalues.
    pub fn check_signature(&self, x: &[f64]) -> Result<Vec<f64>> {
        let g = self.metric_at(x)?;
        let eig = SymmetricEigen::new(g).eigenvalues;
        let mut ev: Vec<f64> = eig.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        let scale = ev.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tiny = scale / SINGULAR_CONDITION;
        let neg = ev.iter().filter(|v| **v < -tiny).count();
        let pos = ev.iter().filter(|v| **v > tiny).count();
        if neg != 1 || pos != self.dim - 1 {
            return Err(GeomError::NotLorentzian { point: x.to_vec(), eigenvalues: ev });
        }
        Ok(ev)
    }

    pub fn christoffel_generic(&self, x: &[f64]) -> Result<Christoffel> {
        let (g, dg) = self.metric_jets(x)?;
        let ginv = invert_checked(&g, x)?;
        let n = self.dim;
        let mut gamma = Christoffel::zeros(n);
        let mut lower = vec![0.0; n];
        for b in 0..n {
            for c in b..n {
                for (d, l) in lower.iter_mut().enumerate() {
                    *l = 0.5 * (dg[b][(d, c)] + dg[c][(d, b)] - dg[d][(b, c)]);
                }
                for a in 0..n {
                    let v: f64 = (0..n).map(|d| ginv[(a, d)] * lower[d]).sum();
                    gamma.set_sym(a, b, c, v);
                }
            }
        }
        Ok(gamma)
    }

    /// Closed-form Christoffel symbols for catalog metrics.
    pub fn christoffel_closed(&self, x: &[f64]) -> Option<Result<Christoffel>> {
        let cat = self.catalog?;
        if let Err(e) = self.check_point(x) {
            return Some(Err(e));
        }
        let mut gm = Christoffel::zeros(self.dim);
        match cat {
            CatalogMetric::Minkowski { .. } => {}
            CatalogMetric::Warped6d => {
                let e0 = (2.0 * x[0]).exp();
                let e1 = (2.0 * x[1]).exp();
                gm.set_sym(2, 0, 2, 1.0);
                gm.set_sym(3, 0, 3, 1.0);
                gm.set_sym(0, 2, 2, e0);
                gm.set_sym(0, 3, 3, e0);
                gm.set_sym(4, 1, 4, 1.0);
                gm.set_sym(5, 1, 5, 1.0);
                gm.set_sym(1, 4, 4, -e1);
                gm.set_sym(1, 5, 5, -e1);
            }
            CatalogMetric::SchwarzschildEf { m } => {
                let r = x[1];
                let th = x[2];
                if r == 0.0 || th.sin() == 0.0 {
                    return Some(Err(GeomError::SingularMetric {
                        point: x.to_vec(),
                        condition: f64::INFINITY,
                    }));
                }
                let r3 = r * r * r;
                let s2 = th.sin().powi(2);
                gm.set_sym(0, 0, 0, 2.0 * m * m / r3);
                gm.set_sym(0, 0, 1, m * (2.0 * m + r) / r3);
                gm.set_sym(0, 1, 1, 2.0 * m * (m + r) / r3);
                gm.set_sym(0, 2, 2, -2.0 * m);
                gm.set_sym(0, 3, 3, -2.0 * m * s2);
                gm.set_sym(1, 0, 0, m * (r - 2.0 * m) / r3);
                gm.set_sym(1, 0, 1, -2.0 * m * m / r3);
                gm.set_sym(1, 1, 1, -m * (2.0 * m + r) / r3);
                gm.set_sym(1, 2, 2, 2.0 * m - r);
                gm.set_sym(1, 3, 3, (2.0 * m - r) * s2);
                gm.set_sym(2, 1, 2, 1.0 / r);
                gm.set_sym(2, 3, 3, -th.sin() * th.cos());
                gm.set_sym(3, 1, 3, 1.0 / r);
                gm.set_sym(3, 2, 3, th.cos() / th.sin());
            }
        }
        Some(Ok(gm))
    }

    pub fn christoffel(&self, x: &[f64]) -> Result<Christoffel> {
        match self.christoffel_closed(x) {
            Some(r) => r,
            None => self.christoffel_generic(x),
        }
    }

    pub fn curvature(&self, x: &[f64]) -> Result<CurvatureSample> {
        let gamma = self.christoffel(x)?;
        let n = self.dim;
        let mut dgamma = Vec::with_capacity(n);
        for e in 0..n {
            let h = fd_step(x[e]);
            let d = numeric::richardson_central(h, |t| {
                let mut y = x.to_vec();
                y[e] += t;
                Ok(self.christoffel(&y)?.data)
            })?;
            dgamma.push(Christoffel { dim: n, data: d });
        }
        let riemann = Riemann::from_connection(&gamma, &dgamma);
        let ricci = riemann.ricci();
        Ok(CurvatureSample { point: x.to_vec(), metric: self.metric_at(x)?, christoffel: gamma, riemann, ricci })
    }

    pub fn space_form_residual(&self, x: &[f64], c: f64) -> Result<f64> {
        Ok(self.curvature(x)?.space_form_residual(c))
    }

    /// `Ric(v, v)` for a null vector `v`.
    pub fn ncc_probe(&self, x: &[f64], v: &DVector<f64>, tol_null: f64) -> Result<f64> {
        let s = self.curvature(x)?;
        let norm = v.dot(&(&s.metric * v));
        if norm.abs() > tol_null * v.norm_squared().max(1.0) {
            return Err(GeomError::NonNullVector { norm });
        }
        Ok(s.ricci_form(v, v))
    }

    /// Future-directed test for a causal vector: `sign · v⁰ > 0`.
    pub fn is_future(&self, v: &DVector<f64>) -> bool {
        self.time_sign * v[0] > 0.0
    }
}

pub(crate) fn invert_checked(g: &DMatrix<f64>, x: &[f64]) -> Result<DMatrix<f64>> {
    let eig = SymmetricEigen::new(g.clone()).eigenvalues;
    let max = eig.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let min = eig.iter().fold(f64::INFINITY, |m, v| m.min(v.abs()));
    let condition = if min > 0.0 { max / min } else { f64::INFINITY };
    if !(condition <= SINGULAR_CONDITION) {
        return Err(GeomError::SingularMetric { point: x.to_vec(), condition });
    }
    g.clone()
        .try_inverse()
        .ok_or(GeomError::SingularMetric { point: x.to_vec(), condition })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn minkowski_is_flat() {
        let m = MetricSpec::minkowski(4).unwrap();
        let x = [0.3, -1.0, 2.0, 0.5];
        assert!(m.christoffel(&x).unwrap().as_slice().iter().all(|v| *v == 0.0));
        assert!(m.christoffel_generic(&x).unwrap().as_slice().iter().all(|v| *v == 0.0));
        let s = m.curvature(&x).unwrap();
        assert_eq!(s.ricci.amax(), 0.0);
        assert!(s.space_form_residual(0.0) < 1e-10);
        let v = DVector::from_vec(vec![1.0, 1.0, 0.0, 0.0]);
        assert_eq!(m.ncc_probe(&x, &v, 1e-8).unwrap(), 0.0);
    }

    #[test]
    fn warped_christoffels() {
        let w = MetricSpec::warped6d();
        let x = [0.0, 0.0, 0.1, 0.2, 0.3, 0.4];
        for gamma in [w.christoffel(&x).unwrap(), w.christoffel_generic(&x).unwrap()] {
            assert_abs_diff_eq!(gamma.get(2, 0, 2), 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(gamma.get(0, 2, 2), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn schwarzschild_christoffel_table() {
        // Independent symbolic evaluation at (t, r, θ, φ) = (0, 2, π/2, 0), m = 1.
        let table = [
            ((0, 0, 0), 0.25),
            ((0, 0, 1), 0.5),
            ((0, 1, 1), 0.75),
            ((0, 2, 2), -2.0),
            ((0, 3, 3), -2.0),
            ((1, 0, 1), -0.25),
            ((1, 1, 1), -0.5),
            ((2, 1, 2), 0.5),
            ((3, 1, 3), 0.5),
        ];
        let s = MetricSpec::schwarzschild_ef(1.0).unwrap();
        let x = [0.0, 2.0, FRAC_PI_2, 0.0];
        for gamma in [s.christoffel(&x).unwrap(), s.christoffel_generic(&x).unwrap()] {
            for a in 0..4 {
                for b in 0..4 {
                    for c in 0..4 {
                        let expected = table
                            .iter()
                            .find(|((i, j, k), _)| {
                                *i == a && ((*j, *k) == (b, c) || (*j, *k) == (c, b))
                            })
                            .map_or(0.0, |(_, v)| *v);
                        assert_abs_diff_eq!(gamma.get(a, b, c), expected, epsilon = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn schwarzschild_ricci_flat_but_curved() {
        let s = MetricSpec::schwarzschild_ef(1.0).unwrap();
        for r in [2.0, 3.0, 5.0] {
            let c = s.curvature(&[0.4, r, 1.1, 0.3]).unwrap();
            assert!(c.ricci.amax() < 1e-5, "r = {r}: {}", c.ricci.amax());
            assert!(c.symmetry_residual() < 1e-6);
        }
        assert!(s.space_form_residual(&[0.0, 2.0, 1.0, 0.0], 0.0).unwrap() > 0.01);
        let v = DVector::from_vec(vec![-1.0, 0.0, 0.0, 0.0]);
        assert!(s.ncc_probe(&[0.0, 2.0, 1.0, 0.0], &v, 1e-8).unwrap().abs() < 1e-5);
    }

    #[test]
    fn warped_null_convergence_violated() {
        let w = MetricSpec::warped6d();
        let x = [-0.2, 0.2, 0.1, 0.0, 0.3, 0.0];
        let xi = DVector::from_vec(vec![1.0, -1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_abs_diff_eq!(w.ncc_probe(&x, &xi, 1e-8).unwrap(), -4.0, epsilon = 1e-6);
        assert!(w.curvature(&x).unwrap().symmetry_residual() < 1e-6);
        for c in [-1.0, 0.0, 0.5, 1.0] {
            assert!(w.space_form_residual(&x, c).unwrap() > 0.1);
        }
    }

    #[test]
    fn sectional_curvature_and_degenerate_plane() {
        let m = MetricSpec::minkowski(3).unwrap();
        let s = m.curvature(&[0.0, 0.0, 0.0]).unwrap();
        let e1 = DVector::from_vec(vec![0.0, 1.0, 0.0]);
        let e2 = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        assert_eq!(s.sectional(&e1, &e2).unwrap(), 0.0);
        let null = DVector::from_vec(vec![1.0, 1.0, 0.0]);
        assert!(matches!(s.sectional(&null, &e2), Err(GeomError::DegeneratePlane { .. })));
    }

    #[test]
    fn non_null_probe_rejected() {
        let m = MetricSpec::minkowski(4).unwrap();
        let v = DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]);
        assert!(matches!(m.ncc_probe(&[0.0; 4], &v, 1e-8), Err(GeomError::NonNullVector { .. })));
    }

    #[test]
    fn catalog_ids() {
        assert_eq!(
            MetricSpec::parse_catalog_id("schwarzschild_ef:m=1").unwrap(),
            CatalogMetric::SchwarzschildEf { m: 1.0 }
        );
        assert_eq!(
            MetricSpec::parse_catalog_id("minkowski:5").unwrap(),
            CatalogMetric::Minkowski { dim: 5 }
        );
        assert!(MetricSpec::parse_catalog_id("kerr").is_err());
    }

    #[test]
    fn file_round_trip() {
        let s = MetricSpec::schwarzschild_ef(0.75).unwrap();
        let text = s.to_file_string();
        let back = MetricSpec::from_file_str(&text).unwrap();
        let x = [0.1, 2.3, 0.9, 0.4];
        assert_eq!(s.metric_at(&x).unwrap(), back.metric_at(&x).unwrap());
        assert_eq!(back.time_sign(), 1.0);
    }

    #[test]
    fn signature_checked() {
        let bad = MetricSpec::from_components(
            default_chart(3),
            &[(0, 0, "1".into()), (1, 1, "1".into()), (2, 2, "1".into())],
            None,
            1.0,
        )
        .unwrap();
        assert!(matches!(bad.check_signature(&[0.0; 3]), Err(GeomError::NotLorentzian { .. })));
        let sing = MetricSpec::from_components(
            default_chart(3),
            &[(0, 0, "-1".into()), (1, 1, "x2".into()), (2, 2, "1".into())],
            None,
            1.0,
        )
        .unwrap();
        assert!(matches!(sing.christoffel(&[0.0; 3]), Err(GeomError::SingularMetric { .. })));
    }
}
