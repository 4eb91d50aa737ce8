use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::catalog::{resolve_surface, CatalogPatch};
use crate::error::{GeomError, Result};
use crate::hypersurface::{StepBases, Tolerances};
use crate::monge::require_null;
use crate::spacetime::MetricSpec;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

/// Settings shared by every subcommand. Missing file entries fall back to defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Catalog id or metric-definition file.
    pub metric: Option<String>,
    /// Catalog id, `monge:<F>` or patch file.
    pub surface: Option<String>,
    /// `name=count,...` per-axis counts, or a single count for every axis.
    pub grid: Option<String>,
    /// Axes switched to periodic quadrature.
    pub periodic: Vec<String>,
    pub tolerances: Tolerances,
    pub steps: StepBases,
    pub seed: u64,
    /// Upper bound on sampled points for verification suites.
    pub max_points: Option<usize>,
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            metric: None,
            surface: None,
            grid: None,
            periodic: Vec::new(),
            tolerances: Tolerances::default(),
            steps: StepBases::default(),
            seed: 0,
            max_points: None,
            output: None,
            format: Format::Json,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<RunConfig> {
        toml::from_str(text).map_err(|e| GeomError::Config(format!("config file: {e}")))
    }

    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GeomError::Io { path: path.display().to_string(), message: e.to_string() })?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.tolerances.validate()?;
        if self.max_points == Some(0) {
            return Err(GeomError::Config("max_points must be at least 1".into()));
        }
        Ok(())
    }

    /// Resolves metric and surface and applies grid, periodicity and step overrides.
    pub fn build_patch(&self) -> Result<CatalogPatch> {
        self.validate()?;
        let surface =
            self.surface.as_deref().ok_or_else(|| GeomError::Config("no surface given (--surface)".into()))?;
        let metric = self.metric.as_deref().map(MetricSpec::resolve).transpose()?;
        let mut cp = resolve_surface(surface, metric)?;
        let mut grid = cp.patch.grid().clone();
        if let Some(spec) = self.grid.as_deref() {
            match spec.trim().parse::<usize>() {
                Ok(n) => grid.set_all_counts(n)?,
                Err(_) => grid.apply_counts(spec)?,
            }
        }
        for name in &self.periodic {
            grid.set_periodic(name)?;
        }
        cp.patch.set_grid(grid)?;
        cp.patch.set_steps(self.steps)?;
        if let Some(f) = cp.monge_function() {
            require_null(f, cp.patch.grid(), &self.tolerances)?;
        }
        Ok(cp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partial_file_keeps_defaults() {
        let c = RunConfig::from_toml("surface = \"nullcone:3\"\n[tolerances]\nnull = 1e-9\n").unwrap();
        assert_eq!(c.surface.as_deref(), Some("nullcone:3"));
        assert_eq!(c.tolerances.null, 1e-9);
        assert_eq!(c.tolerances.classify, Tolerances::default().classify);
        assert_eq!(c.format, Format::Json);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::from_toml("surfce = \"x\"").unwrap_err().is_input_error());
    }

    #[test]
    fn grid_overrides() {
        let c = RunConfig {
            surface: Some("schwarzschild_horizon".into()),
            grid: Some("t=8,theta=16,phi=16".into()),
            ..RunConfig::default()
        };
        let cp = c.build_patch().unwrap();
        assert_eq!(cp.patch.grid().len(), 8 * 16 * 16);
        let c = RunConfig { grid: Some("5".into()), ..c };
        assert_eq!(c.build_patch().unwrap().patch.grid().len(), 125);
        let c = RunConfig { grid: Some("t=3".into()), ..c };
        assert!(c.build_patch().unwrap_err().is_input_error());
    }

    #[test]
    fn non_null_monge_is_input_error() {
        let c = RunConfig { surface: Some("monge:u1^2".into()), ..RunConfig::default() };
        assert!(c.build_patch().unwrap_err().is_input_error());
    }
}
