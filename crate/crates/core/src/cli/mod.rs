//! Command-line front end: `analyze`, `verify`, `drag` and `catalog`.
//!
//! Exit codes: 0 when every check passes, 1 on a tolerance or geometric failure,
//! 2 on malformed input.

pub mod commands;
pub mod config;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::catalog::{monge_catalog, SURFACE_IDS};
use crate::error::Result;
use commands::{Suite, DEFAULT_EPSILONS};
pub use config::{Format, RunConfig};
pub use report::{Aggregates, Check, PointOut, Report, Status, SCHEMA};

#[derive(Debug, Parser)]
#[command(name = "nullgeom", version, about = "Rigged null hypersurface diagnostics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Frame, shape and trapped-class pipeline with a horizon verdict.
    Analyze(CommonArgs),
    /// Residual suites for the structure identities.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum)]
        suite: Suite,
    },
    /// Drags a leaf along the rigging and records areas and expansions.
    Drag {
        #[command(flatten)]
        common: CommonArgs,
        /// Comma-separated `ε` values.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        eps: Option<Vec<f64>>,
        /// Leaf-axis value of the dragged leaf; defaults to the middle node.
        #[arg(long, allow_hyphen_values = true)]
        leaf: Option<f64>,
        /// Also write the `epsilon,area,theta_out,theta_in` table here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Lists built-in metrics and surfaces.
    Catalog,
}

#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML file with run settings; flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub metric: Option<String>,
    #[arg(long)]
    pub surface: Option<String>,
    /// `name=count,...` or one count for all axes.
    #[arg(long)]
    pub grid: Option<String>,
    /// Axes to treat as periodic.
    #[arg(long, value_delimiter = ',')]
    pub periodic: Vec<String>,
    #[arg(long)]
    pub tol_null: Option<f64>,
    #[arg(long)]
    pub tol_classify: Option<f64>,
    #[arg(long)]
    pub tol_curvature: Option<f64>,
    #[arg(long)]
    pub tol_identity: Option<f64>,
    #[arg(long)]
    pub tol_integrable: Option<f64>,
    /// Relative step for differences of exact quantities.
    #[arg(long)]
    pub inner_step: Option<f64>,
    /// Relative step for differences of differenced quantities.
    #[arg(long)]
    pub outer_step: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, short = 'o')]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Cap on sampled grid points in verification suites.
    #[arg(long)]
    pub max_points: Option<usize>,
}

impl CommonArgs {
    /// Flags over config file over defaults.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut c.tolerances.null, self.tol_null);
        set(&mut c.tolerances.classify, self.tol_classify);
        set(&mut c.tolerances.curvature, self.tol_curvature);
        set(&mut c.tolerances.identity, self.tol_identity);
        set(&mut c.tolerances.integrable, self.tol_integrable);
        set(&mut c.steps.inner, self.inner_step);
        set(&mut c.steps.outer, self.outer_step);
        if self.metric.is_some() {
            c.metric.clone_from(&self.metric);
        }
        if self.surface.is_some() {
            c.surface.clone_from(&self.surface);
        }
        if self.grid.is_some() {
            c.grid.clone_from(&self.grid);
        }
        if !self.periodic.is_empty() {
            c.periodic.clone_from(&self.periodic);
        }
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if self.output.is_some() {
            c.output.clone_from(&self.output);
        }
        if let Some(f) = self.format {
            c.format = f;
        }
        if self.max_points.is_some() {
            c.max_points = self.max_points;
        }
        c.validate()?;
        Ok(c)
    }
}

/// Runs one parsed command, writing its output. Returns the exit status.
pub fn execute(command: &Command) -> Result<u8> {
    let (report, cfg) = match command {
        Command::Catalog => {
            report::emit(&catalog_text(), None)?;
            return Ok(0);
        }
        Command::Analyze(common) => {
            let cfg = common.resolve()?;
            (commands::analyze(&cfg)?, cfg)
        }
        Command::Verify { common, suite } => {
            let cfg = common.resolve()?;
            (commands::verify(&cfg, *suite)?, cfg)
        }
        Command::Drag { common, eps, leaf, csv } => {
            let cfg = common.resolve()?;
            let eps = eps.clone().unwrap_or_else(|| DEFAULT_EPSILONS.to_vec());
            let (report, result) = commands::drag(&cfg, &eps, *leaf)?;
            if let Some(path) = csv {
                report::emit(&result.to_csv(), Some(path))?;
            }
            if cfg.format == Format::Csv {
                report::emit(&result.to_csv(), cfg.output.as_deref())?;
                eprintln!("{}", summary(&report));
                return Ok(report.status.exit_code());
            }
            (report, cfg)
        }
    };
    report::emit(&report.render(cfg.format), cfg.output.as_deref())?;
    eprintln!("{}", summary(&report));
    Ok(report.status.exit_code())
}

fn summary(r: &Report) -> String {
    let mut s = format!("{} {:?}: {} points", r.command, r.status, r.aggregates.point_count);
    if !r.verdict.is_empty() {
        s.push_str(&format!(", verdict {}", r.verdict.join(" ")));
    }
    for c in r.checks.iter().filter(|c| !c.pass) {
        s.push_str(&format!("\n  FAIL {}: {:.3e} > {:.1e}", c.name, c.value, c.tolerance));
    }
    for n in &r.notes {
        s.push_str(&format!("\n  note: {n}"));
    }
    s
}

fn catalog_text() -> String {
    let mut s = String::from("metrics:\n");
    for m in ["minkowski:<dim>", "schwarzschild_ef[:m=<mass>]", "warped6d", "<file>.toml"] {
        s.push_str(&format!("  {m}\n"));
    }
    s.push_str("surfaces:\n");
    for id in SURFACE_IDS {
        s.push_str(&format!("  {id}\n"));
    }
    s.push_str("  <file>.toml\nmonge functions (minkowski:4):\n");
    for f in monge_catalog(3) {
        s.push_str(&format!("  monge:{f}\n"));
    }
    s
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run_from<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_input_error() {
                2
            } else {
                1
            }
        }
    }
}

pub fn run() -> ExitCode {
    ExitCode::from(run_from(std::env::args_os()))
}
