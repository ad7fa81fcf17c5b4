//! Experiment configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::density_file::{read_density, DensitySpec};
use crate::energy::{EnergyDensity, Weight};
use crate::expr::Expr;
use crate::geometry::{build_domain, read_mesh, BoundaryTag, DomainSpec, Mesh2D, RegionMap};
use crate::limit_lab::CounterexampleParams;
use crate::solver::{check_zero_mean, InnerMode, SolveSettings};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// One minimization at a fixed λ.
    Solve,
    /// The limit fields only.
    Limits,
    /// Limit fields, a λ sweep and its checks.
    Sweep,
    /// The oscillating-density counterexample.
    Counterexample,
}

impl ExperimentKind {
    fn needs_mesh(self) -> bool {
        self != ExperimentKind::Counterexample
    }

    fn is_limit(self) -> bool {
        matches!(self, ExperimentKind::Limits | ExperimentKind::Sweep)
    }
}

/// A density given inline or as a path to a density file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
#[allow(clippy::large_enum_variant)]
pub enum DensitySource {
    File { file: PathBuf },
    Inline(DensitySpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainSpec>,
    /// Mesh in the plain-text mesh format, instead of `domain`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mesh_file: Option<PathBuf>,
    /// Growth exponents of B and A.
    #[serde(default = "two")]
    pub p: f64,
    #[serde(default = "two")]
    pub q: f64,
    /// Dirichlet data on the outer boundary.
    #[serde(default = "zero")]
    pub f: Expr,
    /// Asymptotic weights of the limit problems.
    #[serde(default)]
    pub beta: Weight,
    #[serde(default)]
    pub alpha: Weight,
    /// Densities of the finite-λ problem; default `β E^p` and `α E^q`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_b: Option<DensitySource>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_a: Option<DensitySource>,
    /// Require `f` to have zero mean on the outer boundary.
    #[serde(default)]
    pub zero_mean: bool,
    #[serde(default = "one")]
    pub lambda: f64,
    #[serde(default)]
    pub inner_mode: InnerMode,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub schedule: Vec<f64>,
    #[serde(default = "yes")]
    pub warm_start: bool,
    #[serde(default)]
    pub settings: SolveSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<CounterexampleParams>,
    /// Output directory used when none is given on the command line.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    /// Directory of the config file; relative paths resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn two() -> f64 {
    2.0
}
fn one() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn zero() -> Expr {
    Expr::constant(0.0)
}

const KNOWN_KEYS: [&str; 18] = [
    "experiment",
    "domain",
    "mesh_file",
    "p",
    "q",
    "f",
    "beta",
    "alpha",
    "density_b",
    "density_a",
    "zero_mean",
    "lambda",
    "inner_mode",
    "schedule",
    "warm_start",
    "settings",
    "counterexample",
    "output",
];

impl ExperimentConfig {
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.base_dir.join(path)
        }
    }

    pub fn mesh(&self) -> Result<(Mesh2D, RegionMap)> {
        match (&self.domain, &self.mesh_file) {
            (Some(spec), None) => build_domain(spec),
            (None, Some(file)) => read_mesh(&self.resolve(file)),
            _ => Err(Error::Config("give exactly one of `domain` and `mesh_file`".into())),
        }
    }

    fn density(&self, source: &Option<DensitySource>, weight: &Weight, exponent: f64) -> Result<EnergyDensity> {
        match source {
            None => EnergyDensity::power_law(weight.clone(), exponent),
            Some(DensitySource::Inline(spec)) => spec.build(),
            Some(DensitySource::File { file }) => read_density(&self.resolve(file))?.build(),
        }
    }

    pub fn density_b(&self) -> Result<EnergyDensity> {
        self.density(&self.density_b, &self.beta, self.p)
    }

    pub fn density_a(&self) -> Result<EnergyDensity> {
        self.density(&self.density_a, &self.alpha, self.q)
    }

    pub fn counterexample_params(&self) -> CounterexampleParams {
        self.counterexample.clone().unwrap_or_default()
    }

    /// Every violation of the config, not only the first.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, v) in [("p", self.p), ("q", self.q)] {
            if !(v > 1.0) || !v.is_finite() {
                out.push(format!("`{name}` must exceed 1, got {v}"));
            }
        }
        if self.experiment.is_limit() && self.p == self.q {
            out.push(format!(
                "unsupported: p = q = {} has no two-phase limit here; the large-data limit theory requires p != q (the equal-exponent case is treated elsewhere)",
                self.p
            ));
        }
        if self.experiment.needs_mesh() {
            match (&self.domain, &self.mesh_file) {
                (Some(spec), None) => {
                    if let Err(e) = spec.validate() {
                        out.push(format!("domain: {e}"));
                    }
                }
                (None, Some(file)) => {
                    let path = self.resolve(file);
                    if !path.is_file() {
                        out.push(format!("mesh file {} does not exist", path.display()));
                    }
                }
                (None, None) => out.push("missing key `domain` (or `mesh_file`)".into()),
                (Some(_), Some(_)) => out.push("give only one of `domain` and `mesh_file`".into()),
            }
        }
        for (name, source) in [("density_b", &self.density_b), ("density_a", &self.density_a)] {
            match source {
                Some(DensitySource::File { file }) => {
                    let path = self.resolve(file);
                    if !path.is_file() {
                        out.push(format!("{name} file {} does not exist", path.display()));
                    } else if let Err(e) = read_density(&path).and_then(|s| s.build()) {
                        out.push(format!("{name}: {e}"));
                    }
                }
                Some(DensitySource::Inline(spec)) => {
                    out.extend(spec.violations().into_iter().map(|v| format!("{name}: {v}")));
                }
                None => {}
            }
        }
        if !(self.lambda > 0.0) || !self.lambda.is_finite() {
            out.push(format!("`lambda` must be positive, got {}", self.lambda));
        }
        if self.experiment == ExperimentKind::Sweep {
            if self.schedule.len() < 4 {
                out.push(format!(
                    "`schedule` needs at least 4 values, got {}",
                    self.schedule.len()
                ));
            }
            if self.schedule.windows(2).any(|w| !(w[1] > w[0])) || self.schedule.iter().any(|&l| !(l > 0.0)) {
                out.push("`schedule` must be positive and strictly increasing".into());
            }
        }
        if let Err(e) = self.settings.validate() {
            out.push(format!("settings: {e}"));
        }
        if let Some(c) = &self.counterexample {
            if let Err(e) = c.validate() {
                out.push(format!("counterexample: {e}"));
            }
        }
        if self.zero_mean && self.experiment.needs_mesh() && out.is_empty() {
            match self.mesh() {
                Ok((mesh, _)) => {
                    let values = mesh
                        .boundary_nodes(BoundaryTag::Outer)
                        .map(|nodes| nodes.iter().map(|&i| (i, self.f.eval_at(mesh.nodes[i]))).collect());
                    if let Err(e) = values.and_then(|v| check_zero_mean(&mesh, &v)) {
                        out.push(format!("`f`: {e}"));
                    }
                }
                Err(e) => out.push(format!("mesh: {e}")),
            }
        }
        out
    }
}

/// Parses and validates a config; relative paths resolve against `base_dir`.
pub fn parse_config_str(text: &str, base_dir: &Path) -> Result<ExperimentConfig> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    let mut problems = Vec::new();
    if !table.contains_key("experiment") {
        problems.push("missing key `experiment`".to_string());
    }
    for key in table.keys() {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            problems.push(format!("unknown key `{key}`"));
        }
    }
    if let Some(kind) = table.get("experiment").and_then(|v| v.as_str()) {
        if kind != "counterexample" && !table.contains_key("f") {
            problems.push("missing key `f`".into());
        }
    }
    if !problems.is_empty() {
        return Err(Error::Config(problems.join("; ")));
    }
    let mut config: ExperimentConfig = table
        .try_into()
        .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
    config.base_dir = base_dir.to_path_buf();
    let violations = config.violations();
    if !violations.is_empty() {
        return Err(Error::Config(violations.join("; ")));
    }
    Ok(config)
}

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("")).to_path_buf();
    parse_config_str(&text, &base).map_err(|e| match e {
        Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn emit_config(config: &ExperimentConfig) -> Result<String> {
    toml::to_string(config).map_err(|e| Error::Config(e.to_string()))
}
