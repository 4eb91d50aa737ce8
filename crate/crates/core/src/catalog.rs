//! Built-in hypersurface patches and patch-definition files.

use std::f64::consts::{PI, SQRT_2};
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;

use crate::error::{GeomError, Result};
use crate::expr::Expr;
use crate::grid::{Axis, AxisKind, Grid, DEFAULT_POINTS, MIN_POINTS};
use crate::hypersurface::{HypersurfacePatch, Rigging};
use crate::spacetime::{CatalogMetric, MetricSpec};

#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceKind {
    SchwarzschildHorizon { m: f64 },
    Warped6dPlane,
    NullCone { k: usize },
    /// Graph `x⁰ = F(u)` in Minkowski space.
    Monge { f: Expr },
    File,
}

/// A patch with its default rigging.
#[derive(Debug, Clone)]
pub struct CatalogPatch {
    pub kind: SurfaceKind,
    pub patch: HypersurfacePatch,
    pub rigging: Rigging,
}

impl CatalogPatch {
    pub fn id(&self) -> String {
        match &self.kind {
            SurfaceKind::SchwarzschildHorizon { m } => format!("schwarzschild_horizon:m={m}"),
            SurfaceKind::Warped6dPlane => "warped6d_plane".into(),
            SurfaceKind::NullCone { k } => format!("nullcone:{k}"),
            SurfaceKind::Monge { f } => format!("monge:{f}"),
            SurfaceKind::File => format!("file:{}", self.patch.name()),
        }
    }

    pub fn monge_function(&self) -> Option<&Expr> {
        match &self.kind {
            SurfaceKind::Monge { f } => Some(f),
            _ => None,
        }
    }
}

pub const SURFACE_IDS: [&str; 4] =
    ["schwarzschild_horizon[:m=<mass>]", "warped6d_plane", "nullcone:<k>", "monge:<expr>"];

fn names(prefix: &str, range: std::ops::RangeInclusive<usize>) -> Vec<String> {
    range.map(|i| format!("{prefix}{i}")).collect()
}

/// The horizon `r = 2m` of ingoing Eddington–Finkelstein Schwarzschild, sliced by `t`.
pub fn schwarzschild_horizon(m: f64) -> Result<CatalogPatch> {
    let metric = Arc::new(MetricSpec::schwarzschild_ef(m)?);
    let grid = Grid::new(vec![
        Axis::new("t", 0.0, 1.0, DEFAULT_POINTS, AxisKind::Uniform),
        Axis::new("theta", 0.0, PI, DEFAULT_POINTS, AxisKind::Polar),
        Axis::new("phi", 0.0, 2.0 * PI, DEFAULT_POINTS, AxisKind::Periodic),
    ])?;
    let embedding = ["t".to_string(), format!("{}", 2.0 * m), "theta".into(), "phi".into()];
    let patch =
        HypersurfacePatch::from_texts("schwarzschild_horizon", metric, &["t", "theta", "phi"], &embedding, grid, Some("t"))?;
    let c = format!("x1/{}", 2.0 * m);
    let rigging = Rigging::ambient(&patch, &[c.clone(), format!("-{c}"), "0".into(), "0".into()])?;
    Ok(CatalogPatch { kind: SurfaceKind::SchwarzschildHorizon { m }, patch, rigging })
}

/// The null plane `x⁰ + x¹ = 0` of the six-dimensional warped product.
pub fn warped6d_plane() -> Result<CatalogPatch> {
    let metric = Arc::new(MetricSpec::warped6d());
    let chart = names("u", 1..=5);
    let axes = chart.iter().map(|n| Axis::new(n, -0.5, 0.5, MIN_POINTS, AxisKind::Uniform)).collect();
    let mut embedding = vec!["-u1".to_string(), "u1".to_string()];
    embedding.extend(chart[1..].iter().cloned());
    let chart_refs: Vec<&str> = chart.iter().map(String::as_str).collect();
    let patch =
        HypersurfacePatch::from_texts("warped6d_plane", metric, &chart_refs, &embedding, Grid::new(axes)?, Some("u1"))?;
    let rigging = Rigging::constant(&patch, &[-0.5, -0.5, 0.0, 0.0, 0.0, 0.0])?;
    Ok(CatalogPatch { kind: SurfaceKind::Warped6dPlane, patch, rigging })
}

/// The future light cone of the origin in `ℝ^{k+1}_1`, in hyperspherical coordinates
/// `(s, a1, …, a_{k-1})` with `x⁰ = s ∈ [1, 2]`.
pub fn nullcone(k: usize) -> Result<CatalogPatch> {
    if k < 2 {
        return Err(GeomError::Config(format!("nullcone needs k ≥ 2 spatial dimensions, got {k}")));
    }
    let metric = Arc::new(MetricSpec::minkowski(k + 1)?);
    let mut chart = vec!["s".to_string()];
    chart.extend(names("a", 1..=k - 1));
    let mut axes = vec![Axis::new("s", 1.0, 2.0, DEFAULT_POINTS, AxisKind::Uniform)];
    for (i, n) in chart[1..].iter().enumerate() {
        axes.push(if i + 1 == k - 1 {
            Axis::new(n, 0.0, 2.0 * PI, DEFAULT_POINTS, AxisKind::Periodic)
        } else {
            Axis::new(n, 0.0, PI, DEFAULT_POINTS, AxisKind::Polar)
        });
    }
    let mut embedding = vec!["s".to_string()];
    let mut prefix = String::from("s");
    for n in &chart[1..] {
        embedding.push(format!("{prefix}*cos({n})"));
        prefix.push_str(&format!("*sin({n})"));
    }
    embedding.push(prefix);
    let chart_refs: Vec<&str> = chart.iter().map(String::as_str).collect();
    let patch = HypersurfacePatch::from_texts("nullcone", metric, &chart_refs, &embedding, Grid::new(axes)?, Some("s"))?;
    let spatial = names("x", 1..=k);
    let radius = spatial.iter().map(|x| format!("{x}^2")).collect::<Vec<_>>().join(" + ");
    let mut comps = vec![format!("-1/sqrt(2)")];
    comps.extend(spatial.iter().map(|x| format!("{x}/sqrt(2*({radius}))")));
    let rigging = Rigging::ambient(&patch, &comps)?;
    Ok(CatalogPatch { kind: SurfaceKind::NullCone { k }, patch, rigging })
}

/// Highest `u<i>` index appearing in an expression text.
fn max_u_index(text: &str) -> usize {
    let b = text.as_bytes();
    let mut best = 0;
    let mut i = 0;
    while i < b.len() {
        let starts_ident = i == 0 || !(b[i - 1].is_ascii_alphanumeric() || b[i - 1] == b'_');
        if b[i] == b'u' && starts_ident {
            let mut j = i + 1;
            while j < b.len() && b[j].is_ascii_digit() {
                j += 1;
            }
            let ends_ident = j == b.len() || !(b[j].is_ascii_alphanumeric() || b[j] == b'_');
            if j > i + 1 && ends_ident {
                best = best.max(text[i + 1..j].parse().unwrap_or(0));
            }
            i = j;
        } else {
            i += 1;
        }
    }
    best
}

/// Graph `x⁰ = F(u¹,…,u^{n+1})` in `ℝ^{n+2}_1` with the rigging `(−1, ∇F)/√2`.
/// Without an explicit ambient dimension, `n + 1` is the highest `u` index used (at least 2).
pub fn monge(text: &str, ambient_dim: Option<usize>) -> Result<CatalogPatch> {
    let params = match ambient_dim {
        Some(d) => d.checked_sub(1).filter(|p| *p >= 2).ok_or_else(|| {
            GeomError::Config(format!("Monge patches need ambient dimension ≥ 3, got {d}"))
        })?,
        None => max_u_index(text).max(2),
    };
    let chart = names("u", 1..=params);
    let f = Expr::parse(text, &chart)?;
    let metric = Arc::new(MetricSpec::minkowski(params + 1)?);
    let axes = chart.iter().map(|n| Axis::new(n, 0.5, 1.5, DEFAULT_POINTS, AxisKind::Uniform)).collect();
    let mut embedding = vec![f.clone()];
    for i in 0..params {
        embedding.push(Expr::parse(&chart[i], &chart)?);
    }
    let mut patch = HypersurfacePatch::new("monge", metric.clone(), chart.clone(), embedding, Grid::new(axes)?, None)?;
    if let Some(axis) = aligned_axis(&f, params)? {
        patch.set_leaf_axis(Some(&chart[axis]))?;
    }
    let ambient_chart = metric.chart().to_vec();
    let map: Vec<usize> = (1..=params).collect();
    let mut comps = vec![Expr::constant(-1.0 / SQRT_2, &ambient_chart)];
    for a in 0..params {
        let d = Expr::parse(&format!("({}) / sqrt(2)", f.diff(a)), &chart)?;
        comps.push(d.rechart(&ambient_chart, &map)?);
    }
    Ok(CatalogPatch { kind: SurfaceKind::Monge { f }, patch, rigging: Rigging::Ambient(comps) })
}

/// The axis `a` when `∇F` is a constant multiple of `e_a`; its levels are then coordinate slices.
fn aligned_axis(f: &Expr, params: usize) -> Result<Option<usize>> {
    let mut hit = None;
    for a in 0..params {
        let d = f.diff(a);
        if !d.is_constant() {
            return Ok(None);
        }
        if d.eval(&vec![0.0; params])? != 0.0 {
            if hit.is_some() {
                return Ok(None);
            }
            hit = Some(a);
        }
    }
    Ok(hit)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PatchFile {
    name: Option<String>,
    metric: Option<String>,
    chart: Vec<String>,
    embedding: Vec<String>,
    leaf_axis: Option<String>,
    axes: Vec<AxisFile>,
    rigging: RiggingFile,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct AxisFile {
    name: String,
    lo: f64,
    hi: f64,
    #[serde(default = "default_points")]
    n: usize,
    #[serde(default = "default_kind")]
    kind: AxisKind,
}

fn default_points() -> usize {
    DEFAULT_POINTS
}

fn default_kind() -> AxisKind {
    AxisKind::Uniform
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RiggingFile {
    #[serde(default = "default_frame")]
    frame: String,
    components: Vec<String>,
}

fn default_frame() -> String {
    "ambient".into()
}

/// Parses a patch file. `metric` overrides the file's own `metric` entry.
pub fn patch_from_str(text: &str, metric: Option<MetricSpec>) -> Result<CatalogPatch> {
    let file: PatchFile = toml::from_str(text).map_err(|e| GeomError::Config(format!("patch file: {e}")))?;
    let metric = match (metric, &file.metric) {
        (Some(m), _) => m,
        (None, Some(id)) => MetricSpec::resolve(id)?,
        (None, None) => return Err(GeomError::Config("patch file names no metric".into())),
    };
    let axes = file.axes.iter().map(|a| Axis::new(&a.name, a.lo, a.hi, a.n, a.kind)).collect();
    let chart: Vec<&str> = file.chart.iter().map(String::as_str).collect();
    let patch = HypersurfacePatch::from_texts(
        file.name.as_deref().unwrap_or("patch"),
        Arc::new(metric),
        &chart,
        &file.embedding,
        Grid::new(axes)?,
        file.leaf_axis.as_deref(),
    )?;
    let rigging = match file.rigging.frame.as_str() {
        "ambient" => Rigging::ambient(&patch, &file.rigging.components)?,
        "parameter" => Rigging::parameter(&patch, &file.rigging.components)?,
        other => {
            return Err(GeomError::Config(format!("rigging frame `{other}` must be `ambient` or `parameter`")))
        }
    };
    Ok(CatalogPatch { kind: SurfaceKind::File, patch, rigging })
}

pub fn load_patch(path: &Path, metric: Option<MetricSpec>) -> Result<CatalogPatch> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| GeomError::Io { path: path.display().to_string(), message: e.to_string() })?;
    patch_from_str(&text, metric)
}

/// Resolves a surface id, optionally against an explicitly chosen ambient metric.
pub fn resolve_surface(id: &str, metric: Option<MetricSpec>) -> Result<CatalogPatch> {
    let id = id.trim();
    if let Some(path) = id.strip_prefix("file:") {
        return load_patch(Path::new(path), metric);
    }
    if id.ends_with(".toml") {
        return load_patch(Path::new(id), metric);
    }
    let (name, arg) = match id.split_once(':') {
        Some((n, a)) => (n.trim(), Some(a.trim())),
        None => (id, None),
    };
    let wrong_metric = |want: &str| {
        GeomError::Config(format!("surface `{name}` lives in {want}, not in the requested metric"))
    };
    match name {
        "schwarzschild_horizon" => {
            let m = match (arg, metric.as_ref().and_then(MetricSpec::catalog)) {
                (Some(a), _) => a
                    .trim_start_matches("m=")
                    .parse()
                    .map_err(|_| GeomError::Config(format!("surface `{id}`: mass must be a number")))?,
                (None, Some(CatalogMetric::SchwarzschildEf { m })) => m,
                (None, None) => 1.0,
                (None, Some(_)) => return Err(wrong_metric("schwarzschild_ef")),
            };
            schwarzschild_horizon(m)
        }
        "warped6d_plane" => match metric.as_ref().and_then(MetricSpec::catalog) {
            None | Some(CatalogMetric::Warped6d) => warped6d_plane(),
            Some(_) => Err(wrong_metric("warped6d")),
        },
        "nullcone" => {
            let k = match (arg, metric.as_ref().and_then(MetricSpec::catalog)) {
                (Some(a), _) => a
                    .parse()
                    .map_err(|_| GeomError::Config(format!("surface `{id}`: k must be an integer")))?,
                (None, Some(CatalogMetric::Minkowski { dim })) => dim - 1,
                (None, None) => 3,
                (None, Some(_)) => return Err(wrong_metric("minkowski")),
            };
            nullcone(k)
        }
        "monge" => {
            let text = arg.ok_or_else(|| GeomError::Config("monge needs an expression: monge:<F>".into()))?;
            let dim = match metric.as_ref().and_then(MetricSpec::catalog) {
                Some(CatalogMetric::Minkowski { dim }) => Some(dim),
                None => None,
                Some(_) => return Err(wrong_metric("minkowski")),
            };
            monge(text, dim)
        }
        _ => Err(GeomError::Config(format!(
            "unknown surface `{id}` (known: {})",
            SURFACE_IDS.join(", ")
        ))),
    }
}

/// Admissible Monge functions of the curated catalog, for `n + 1 = params` variables.
pub fn monge_catalog(params: usize) -> Vec<String> {
    let vars = names("u", 1..=params);
    let mut out = vec![format!("u1"), format!("({} + {})/sqrt(2)", vars[0], vars[1])];
    if params >= 3 {
        out.push(format!("0.6*{} + 0.8*{}", vars[1], vars[2]));
    }
    out.push(format!("sqrt({})", vars.iter().map(|v| format!("{v}^2")).collect::<Vec<_>>().join(" + ")));
    if params >= 3 {
        out.push(format!("sqrt({}^2 + {}^2)", vars[0], vars[1]));
    }
    out
}
