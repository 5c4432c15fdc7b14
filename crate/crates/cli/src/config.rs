//! Declarative run configuration (TOML).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use phfem::assembly::FESpaces;
use phfem::boundary::{BCSpec, Condition};
use phfem::ports::ControlVariant;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Action {
    Check,
    Simulate,
    Modes,
    ExportMatrices,
}

impl Action {
    pub fn name(self) -> &'static str {
        match self {
            Action::Check => "check",
            Action::Simulate => "simulate",
            Action::Modes => "modes",
            Action::ExportMatrices => "export-matrices",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum MeshSource {
    /// Rectangle `[0, a] x [0, b]` split into `nx x ny` cells.
    Structured { a: f64, b: f64, nx: usize, ny: usize },
    /// Mesh file, relative paths taken from the config file's directory.
    File { path: PathBuf },
    /// Uniform interval `[0, length]`.
    Interval { length: f64, elements: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialConfig {
    pub young: f64,
    pub poisson: f64,
    pub density: f64,
    /// Plate thickness, or beam section height.
    pub thickness: f64,
    #[serde(default = "phfem::material::default_shear_correction")]
    pub shear_correction: f64,
    /// Beam section width; defaults to the thickness.
    #[serde(default)]
    pub width: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Initial {
    #[default]
    Zero,
    /// Independent uniform samples in `[-amplitude, amplitude]`.
    Random { seed: u64, amplitude: f64 },
    /// Gaussian bump in the vertical momentum density.
    Bump { center: [f64; 2], width: f64, amplitude: f64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateConfig {
    pub t_end: Option<f64>,
    pub dt: Option<f64>,
    pub initial: Initial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModesConfig {
    pub n_modes: usize,
}

impl Default for ModesConfig {
    fn default() -> Self {
        Self { n_modes: 10 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    pub samples: usize,
    pub seed: u64,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self { samples: 100, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Relative bound for skew, symmetry, Dirac and annihilation residuals.
    pub structure: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { structure: 1e-12 }
    }
}

fn default_formulation() -> String {
    "vectorial".into()
}

fn default_variant() -> ControlVariant {
    ControlVariant::Dynamic
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: String,
    #[serde(default)]
    pub action: Option<Action>,
    pub mesh: MeshSource,
    pub material: MaterialConfig,
    #[serde(default = "default_formulation")]
    pub formulation: String,
    #[serde(default = "default_variant")]
    pub control_variant: ControlVariant,
    #[serde(default)]
    pub spaces: FESpaces,
    /// Boundary tag to condition; the key `default` covers every unlisted tag.
    #[serde(default)]
    pub bc: BTreeMap<String, Condition>,
    #[serde(default)]
    pub simulate: SimulateConfig,
    #[serde(default)]
    pub modes: ModesConfig,
    #[serde(default)]
    pub check: CheckConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub fix_orientation: bool,
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::from_toml(&text)?;
        if let MeshSource::File { path: mesh } = &mut cfg.mesh {
            if mesh.is_relative() {
                if let Some(dir) = path.parent() {
                    *mesh = dir.join(&*mesh);
                }
            }
        }
        if let Some(out) = &mut cfg.output_dir {
            if out.is_relative() {
                if let Some(dir) = path.parent() {
                    *out = dir.join(&*out);
                }
            }
        }
        Ok(cfg)
    }

    /// Merges the command-line action, checking it against the file.
    pub fn resolve_action(&mut self, action: Action) -> Result<(), CliError> {
        match self.action {
            Some(a) if a != action => Err(CliError::Config(format!(
                "config declares action '{}' but '{}' was requested",
                a.name(),
                action.name()
            ))),
            _ => {
                self.action = Some(action);
                Ok(())
            }
        }
    }

    pub fn validate_action(&self) -> Result<(), CliError> {
        match self.action {
            Some(Action::Simulate) => {
                let t_end = self
                    .simulate
                    .t_end
                    .ok_or_else(|| CliError::Config("simulate.t_end is required".into()))?;
                let dt = self
                    .simulate
                    .dt
                    .ok_or_else(|| CliError::Config("simulate.dt is required".into()))?;
                if !(t_end.is_finite() && t_end > 0.0 && dt.is_finite() && dt > 0.0) {
                    return Err(CliError::Config(format!(
                        "simulate.t_end = {t_end} and simulate.dt = {dt} must be positive"
                    )));
                }
                if let Initial::Bump { width, .. } = self.simulate.initial {
                    if !(width > 0.0) {
                        return Err(CliError::Config(format!("initial bump width {width} must be positive")));
                    }
                }
            }
            Some(Action::Modes) if self.modes.n_modes == 0 => {
                return Err(CliError::Config("modes.n_modes must be at least 1".into()));
            }
            Some(Action::Check) if self.check.samples == 0 => {
                return Err(CliError::Config("check.samples must be at least 1".into()));
            }
            _ => {}
        }
        if !(self.tolerances.structure > 0.0) {
            return Err(CliError::Config("tolerances.structure must be positive".into()));
        }
        Ok(())
    }

    /// Boundary specification over `tags`, expanding the `default` entry.
    pub fn bc_spec(&self, tags: &[i64]) -> Result<BCSpec, CliError> {
        let mut spec = BCSpec::new();
        for (key, cond) in &self.bc {
            if key == "default" {
                continue;
            }
            let tag: i64 = key
                .trim()
                .parse()
                .map_err(|_| CliError::Config(format!("boundary key '{key}' is neither an integer tag nor 'default'")))?;
            spec = spec.with(tag, cond.clone());
        }
        if let Some(cond) = self.bc.get("default") {
            for &t in tags {
                if spec.get(t).is_none() {
                    spec = spec.with(t, cond.clone());
                }
            }
        }
        Ok(spec)
    }
}
