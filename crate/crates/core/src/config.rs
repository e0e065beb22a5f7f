//! Run configuration read from TOML.
//!
//! ```toml
//! [grid]
//! n = [256, 256]
//! size = 1.0
//!
//! [kernel]
//! h_over_dx = 2.6
//!
//! [[region]]
//! name = "disk"
//! shape = { type = "circle", center = [0.5, 0.5], radius = 0.2 }
//! ```
//!
//! Without any `[[region]]` the grid box is relaxed as a periodic domain.

use std::path::PathBuf;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::geometry::{Shape, Vec2};
use crate::relaxation::{RelaxationConfig, Scheme};

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridConfig,
    pub kernel: KernelConfig,
    #[serde(default)]
    pub relaxation: RelaxationSection,
    #[serde(default)]
    pub init: InitConfig,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default, rename = "region")]
    pub regions: Vec<RegionConfig>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default)]
    pub origin: [f64; 2],
    /// Number of background cells per axis.
    pub n: [usize; 2],
    /// Cell size. Give either this or `size`.
    pub spacing: Option<f64>,
    /// Extent along x; the cell size becomes `size / n[0]`.
    pub size: Option<f64>,
}

impl GridConfig {
    pub fn cell_spacing(&self) -> Result<f64> {
        let dx = match (self.spacing, self.size) {
            (Some(dx), None) => dx,
            (None, Some(l)) => l / self.n[0] as f64,
            _ => return Err(config("grid: give exactly one of `spacing` and `size`")),
        };
        if !(dx.is_finite() && dx > 0.0) {
            return Err(config(format!("grid: cell size must be positive, got {dx}")));
        }
        Ok(dx)
    }
}

/// The cut-off as a multiple of the cell size or of `dp = sqrt(V / N)`.
#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelConfig {
    pub h_over_dx: Option<f64>,
    pub h_over_dp: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CutoffReference {
    CellSpacing(f64),
    ParticleSpacing(f64),
}

impl KernelConfig {
    pub fn reference(&self) -> Result<CutoffReference> {
        let r = match (self.h_over_dx, self.h_over_dp) {
            (Some(m), None) => CutoffReference::CellSpacing(m),
            (None, Some(m)) => CutoffReference::ParticleSpacing(m),
            _ => return Err(config("kernel: give exactly one of `h_over_dx` and `h_over_dp`")),
        };
        let (CutoffReference::CellSpacing(m) | CutoffReference::ParticleSpacing(m)) = r;
        if !(m.is_finite() && m > 0.0) {
            return Err(config(format!("kernel: cut-off multiple must be positive, got {m}")));
        }
        Ok(r)
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    #[default]
    GradientDescent,
    Litvinov,
    SurfaceBounding,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ExecutionName {
    Sequential,
    #[default]
    Parallel,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RelaxationSection {
    pub scheme: SchemeName,
    pub c: f64,
    pub steps: usize,
    pub viscosity: f64,
    pub time_step: Option<f64>,
    pub tolerance: f64,
    pub window: usize,
    pub trace_stride: usize,
    pub execution: ExecutionName,
}

impl Default for RelaxationSection {
    fn default() -> Self {
        let d = RelaxationConfig::default();
        Self {
            scheme: SchemeName::GradientDescent,
            c: d.step_coefficient,
            steps: d.max_steps,
            viscosity: DEFAULT_VISCOSITY,
            time_step: None,
            tolerance: d.convergence_tolerance,
            window: d.convergence_window,
            trace_stride: d.trace_stride,
            execution: ExecutionName::Parallel,
        }
    }
}

/// Viscosity of the inertial scheme when none is configured.
pub const DEFAULT_VISCOSITY: f64 = 2.0;

impl RelaxationSection {
    /// Driver settings; `dx` is the cell size, used by surface bounding.
    pub fn to_config(&self, scheme: SchemeName, dx: f64) -> RelaxationConfig {
        let scheme = match scheme {
            SchemeName::GradientDescent => Scheme::GradientDescent,
            SchemeName::Litvinov => Scheme::Litvinov { viscosity: self.viscosity, time_step: self.time_step },
            SchemeName::SurfaceBounding => Scheme::SurfaceBounding { spacing: dx },
        };
        RelaxationConfig {
            step_coefficient: self.c,
            max_steps: self.steps,
            scheme,
            convergence_tolerance: self.tolerance,
            convergence_window: self.window,
            trace_stride: self.trace_stride,
            execution: match self.execution {
                ExecutionName::Sequential => Execution::Sequential,
                ExecutionName::Parallel => Execution::Parallel,
            },
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitConfig {
    /// Random shift as a fraction of the cell size, in `[0, 0.5]`.
    pub jitter: f64,
    pub seed: u64,
}

impl Default for InitConfig {
    fn default() -> Self {
        Self { jitter: 0.25, seed: 1 }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: PathBuf::from(".") }
    }
}

#[derive(Clone, Copy, Debug, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ShapeConfig {
    Circle { center: [f64; 2], radius: f64 },
    Annulus { center: [f64; 2], inner: f64, outer: f64 },
    HalfPlane { point: [f64; 2], normal: [f64; 2] },
    Box { min: [f64; 2], max: [f64; 2] },
}

impl ShapeConfig {
    pub fn build(&self) -> Result<Shape> {
        let v = |a: [f64; 2]| Vec2::new(a[0], a[1]);
        match *self {
            ShapeConfig::Circle { center, radius } => Shape::circle(v(center), radius),
            ShapeConfig::Annulus { center, inner, outer } => Shape::annulus(v(center), inner, outer),
            ShapeConfig::HalfPlane { point, normal } => Shape::half_plane(v(point), v(normal)),
            ShapeConfig::Box { min, max } => Shape::axis_box(v(min), v(max)),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum LevelSetSource {
    /// Bilinear interpolation of the signed distance sampled on the grid nodes.
    #[default]
    Grid,
    /// Exact signed distance of the shape.
    Analytic,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum VolumeSource {
    /// Number of seeded cells times the cell area.
    #[default]
    Cells,
    /// Exact area of the shape.
    Analytic,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionConfig {
    pub name: String,
    pub shape: ShapeConfig,
    #[serde(default)]
    pub level_set: LevelSetSource,
    #[serde(default)]
    pub volume: VolumeSource,
}

fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.n[0] == 0 || self.grid.n[1] == 0 {
            return Err(config("grid: `n` must be positive on both axes"));
        }
        self.grid.cell_spacing()?;
        self.kernel.reference()?;
        let r = &self.relaxation;
        if !(r.c.is_finite() && r.c > 0.0) {
            return Err(config(format!("relaxation: `c` must be positive, got {}", r.c)));
        }
        if r.window == 0 || r.trace_stride == 0 {
            return Err(config("relaxation: `window` and `trace_stride` must be at least 1"));
        }
        if !(r.viscosity >= 0.0) || r.time_step.is_some_and(|dt| !(dt > 0.0)) {
            return Err(config("relaxation: `viscosity` must be >= 0 and `time_step` positive"));
        }
        if !(0.0..=0.5).contains(&self.init.jitter) {
            return Err(config(format!("init: `jitter` must lie in [0, 0.5], got {}", self.init.jitter)));
        }
        let mut names = std::collections::HashSet::new();
        for region in &self.regions {
            if region.name.is_empty() || !region.name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
                return Err(config(format!("region: invalid name `{}`", region.name)));
            }
            if !names.insert(region.name.as_str()) {
                return Err(config(format!("region: duplicate name `{}`", region.name)));
            }
            region.shape.build().map_err(|e| config(format!("region `{}`: {e}", region.name)))?;
            if region.volume == VolumeSource::Analytic && region.shape.build()?.area().is_none() {
                return Err(config(format!("region `{}`: shape has no finite area", region.name)));
            }
        }
        if self.relaxation.scheme == SchemeName::SurfaceBounding && self.regions.is_empty() {
            return Err(config("relaxation: surface bounding needs at least one region"));
        }
        Ok(())
    }

    pub fn is_periodic(&self) -> bool {
        self.regions.is_empty()
    }
}
