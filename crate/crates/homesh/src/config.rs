//! Run configuration and the end-to-end adaptation driver.
//!
//! Configuration is plain `key = value` text (with `#` comments) plus flag
//! overrides from the command line; `run_adapt` executes a configured run and
//! writes the requested artifacts. Presets `fig2` and `fig3` set up the two
//! reference experiments: the 24x24 cubic quad sheet and the triangulated
//! quadrant, both adapted to the ring metric.

use std::path::{Path, PathBuf};

use crate::energy::MaterialConstants;
use crate::io;
use crate::mesh::{generate_quadrant_tri_mesh, generate_unit_square_quad_mesh, Coord2, Mesh};
use crate::metric::{GaussianRingProfile, MetricField};
use crate::optimizer::{optimize, validity_scan, AdaptReport, OptimizerConfig};
use crate::svg;
use crate::{Error, RefBasis, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum MeshSource {
    UnitSquare { n: usize, p: usize },
    Quadrant { h: f64, p: usize },
    File(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MetricSpec {
    Identity,
    Isotropic,
    Ring,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mesh: MeshSource,
    pub metric: MetricSpec,
    pub metric_center: Coord2,
    pub constants: MaterialConstants,
    pub optimizer: OptimizerConfig,
    pub out_mesh: Option<PathBuf>,
    pub report: Option<PathBuf>,
    pub svg_before: Option<PathBuf>,
    pub svg_after: Option<PathBuf>,
    pub samples_per_edge: usize,
}

impl Default for RunConfig {
    /// The `fig2` preset: cubic 24x24 quad sheet against the ring metric.
    fn default() -> Self {
        RunConfig {
            mesh: MeshSource::UnitSquare { n: 24, p: 3 },
            metric: MetricSpec::Ring,
            metric_center: Coord2::new(0.5, 0.5),
            constants: MaterialConstants::default(),
            optimizer: OptimizerConfig::default(),
            out_mesh: None,
            report: None,
            svg_before: None,
            svg_after: None,
            samples_per_edge: svg::DEFAULT_SAMPLES_PER_EDGE,
        }
    }
}

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl RunConfig {
    /// Applies a mesh specification: `fig2`, `fig3`,
    /// `unit-square:<n>:<p>`, `quadrant:<h>:<p>`, or a mesh file path.
    /// Presets also select their metric.
    pub fn apply_mesh_spec(&mut self, spec: &str) -> Result<()> {
        match spec {
            "fig2" => {
                self.mesh = MeshSource::UnitSquare { n: 24, p: 3 };
                self.metric = MetricSpec::Ring;
                self.metric_center = Coord2::new(0.5, 0.5);
            }
            "fig3" => {
                self.mesh = MeshSource::Quadrant { h: 0.0625, p: 3 };
                self.metric = MetricSpec::Ring;
                self.metric_center = Coord2::new(0.5, 0.5);
            }
            other => {
                let parts: Vec<&str> = other.split(':').collect();
                match parts.as_slice() {
                    ["unit-square", n, p] => {
                        let n = n
                            .parse()
                            .map_err(|_| cfg_err(format!("invalid cell count '{n}'")))?;
                        let p = p
                            .parse()
                            .map_err(|_| cfg_err(format!("invalid order '{p}'")))?;
                        self.mesh = MeshSource::UnitSquare { n, p };
                    }
                    ["quadrant", h, p] => {
                        let h: f64 = h
                            .parse()
                            .map_err(|_| cfg_err(format!("invalid element size '{h}'")))?;
                        let p = p
                            .parse()
                            .map_err(|_| cfg_err(format!("invalid order '{p}'")))?;
                        self.mesh = MeshSource::Quadrant { h, p };
                    }
                    [single] if !single.contains(':') => {
                        self.mesh = MeshSource::File(PathBuf::from(single));
                    }
                    _ => {
                        return Err(cfg_err(format!(
                            "unrecognized mesh spec '{other}' (expected fig2, fig3, \
                             unit-square:<n>:<p>, quadrant:<h>:<p>, or a file path)"
                        )))
                    }
                }
            }
        }
        Ok(())
    }

    pub fn apply_metric_spec(&mut self, spec: &str) -> Result<()> {
        self.metric = match spec {
            "identity" => MetricSpec::Identity,
            "isotropic" => MetricSpec::Isotropic,
            "ring" => MetricSpec::Ring,
            other => return Err(cfg_err(format!("unknown metric '{other}'"))),
        };
        Ok(())
    }

    fn apply_key(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| cfg_err(format!("invalid value '{value}' for {key}")))
        }
        match key {
            "mesh" => self.apply_mesh_spec(value)?,
            "metric" => self.apply_metric_spec(value)?,
            "metric_center_x" => self.metric_center.x = num(key, value)?,
            "metric_center_y" => self.metric_center.y = num(key, value)?,
            "mu" => self.constants.mu = num(key, value)?,
            "lambda" => self.constants.lambda = num(key, value)?,
            "max_sweeps" => self.optimizer.max_sweeps = num(key, value)?,
            "node_step_tol" => self.optimizer.node_step_tol = num(key, value)?,
            "energy_rel_tol" => self.optimizer.energy_rel_tol = num(key, value)?,
            "ls_backtrack" => self.optimizer.ls_backtrack = num(key, value)?,
            "ls_max_iters" => self.optimizer.ls_max_iters = num(key, value)?,
            "ls_armijo" => self.optimizer.ls_armijo = num(key, value)?,
            "seed" => self.optimizer.rng_seed = num(key, value)?,
            "out" => self.out_mesh = Some(PathBuf::from(value)),
            "report" => self.report = Some(PathBuf::from(value)),
            "svg_before" => self.svg_before = Some(PathBuf::from(value)),
            "svg_after" => self.svg_after = Some(PathBuf::from(value)),
            "samples_per_edge" => self.samples_per_edge = num(key, value)?,
            other => return Err(cfg_err(format!("unknown configuration key '{other}'"))),
        }
        Ok(())
    }

    /// Parses `key = value` configuration text on top of the defaults.
    pub fn parse_str(text: &str) -> Result<Self> {
        let mut config = RunConfig::default();
        config.merge_str(text)?;
        Ok(config)
    }

    /// Applies configuration text onto this config, line by line.
    pub fn merge_str(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                cfg_err(format!(
                    "line {}: expected 'key = value', got '{line}'",
                    i + 1
                ))
            })?;
            self.apply_key(key.trim(), value.trim())
                .map_err(|e| cfg_err(format!("line {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse_str(&text)
    }

    pub fn build_mesh(&self) -> Result<Mesh> {
        match &self.mesh {
            MeshSource::UnitSquare { n, p } => generate_unit_square_quad_mesh(*n, *p),
            MeshSource::Quadrant { h, p } => generate_quadrant_tri_mesh(*p, *h),
            MeshSource::File(path) => io::read_mesh(path),
        }
    }

    pub fn metric_field(&self) -> MetricField {
        let profile = GaussianRingProfile::ring_at(self.metric_center);
        match self.metric {
            MetricSpec::Identity => MetricField::Identity,
            MetricSpec::Isotropic => MetricField::Isotropic(profile),
            MetricSpec::Ring => MetricField::Ring(profile),
        }
    }
}

/// Executes a configured run: build the mesh, render the before figure,
/// optimize, verify final validity, and write the requested artifacts.
/// Returns the adapted mesh together with the optimizer's report.
pub fn run_adapt(config: &RunConfig) -> Result<(Mesh, AdaptReport)> {
    let mut mesh = config.build_mesh()?;
    if let Some(path) = &config.svg_before {
        svg::emit_svg(&mesh, path, config.samples_per_edge)?;
    }
    let field = config.metric_field();
    let report = optimize(&mut mesh, &field, &config.constants, &config.optimizer)?;
    let basis = RefBasis::for_mesh(&mesh)?;
    let min_det = validity_scan(&mesh, &basis);
    if !(min_det > 0.0) {
        return Err(Error::InvalidMesh(format!(
            "adapted mesh is invalid: min det J_M = {min_det}"
        )));
    }
    if let Some(path) = &config.out_mesh {
        io::write_mesh(&mesh, path)?;
    }
    if let Some(path) = &config.report {
        io::write_report(&report, path)?;
    }
    if let Some(path) = &config.svg_after {
        svg::emit_svg(&mesh, path, config.samples_per_edge)?;
    }
    Ok((mesh, report))
}
