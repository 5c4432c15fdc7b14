//! Model registry: each entry builds a ported system from a run configuration.

use phfem::assembly::{assemble_plate, formulation::formulation_by_name, AssembledPlate};
use phfem::material::{BeamMaterial, PlateMaterial};
use phfem::mesh::{parse_mesh2d, structured_rectangle, Mesh1D, Mesh2D, MeshOptions};
use phfem::ports::PortedSystem;
use phfem::timoshenko::{assemble_beam, AssembledBeam};
use serde_json::{json, Value};

use crate::config::{MeshSource, RunConfig};
use crate::error::CliError;

/// An assembled model the driver can check, simulate and analyze.
pub trait Model: PortedSystem {
    /// Mesh and layout facts echoed in the manifest.
    fn describe(&self) -> Value;
    /// State with vertical momentum density `f(x)` and everything else zero.
    fn vertical_momentum(&self, f: &dyn Fn([f64; 2]) -> f64) -> Vec<f64>;
}

pub trait ModelKind: Sync {
    fn name(&self) -> &'static str;
    fn build(&self, cfg: &RunConfig) -> Result<Box<dyn Model>, CliError>;
}

impl Model for AssembledPlate {
    fn describe(&self) -> Value {
        json!({
            "nodes": self.mesh.num_nodes(),
            "triangles": self.mesh.num_triangles(),
            "boundary_edges": self.mesh.boundary_edges().len(),
            "boundary_tags": self.mesh.boundary_tags(),
            "repaired_triangles": self.mesh.repaired_triangles(),
            "dim": self.system.dim(),
            "ports": self.system.num_ports(),
        })
    }

    fn vertical_momentum(&self, f: &dyn Fn([f64; 2]) -> f64) -> Vec<f64> {
        let mut a = vec![0.0; self.system.dim()];
        for (ai, p) in a.iter_mut().zip(self.mesh.nodes()) {
            *ai = f(*p);
        }
        a
    }
}

impl Model for AssembledBeam {
    fn describe(&self) -> Value {
        json!({
            "nodes": self.mesh.num_nodes(),
            "elements": self.mesh.num_elements(),
            "boundary_tags": [self.mesh.left_tag(), self.mesh.right_tag()],
            "dim": self.system.dim(),
            "ports": self.system.num_ports(),
        })
    }

    fn vertical_momentum(&self, f: &dyn Fn([f64; 2]) -> f64) -> Vec<f64> {
        let mut a = vec![0.0; self.system.dim()];
        for (ai, &x) in a.iter_mut().zip(self.mesh.nodes()) {
            *ai = f([x, 0.0]);
        }
        a
    }
}

fn load_mesh2d(cfg: &RunConfig) -> Result<Mesh2D, CliError> {
    let options = MeshOptions {
        fix_orientation: cfg.fix_orientation,
    };
    match &cfg.mesh {
        MeshSource::Structured { a, b, nx, ny } => Ok(structured_rectangle(*a, *b, *nx, *ny)?),
        MeshSource::File { path } => {
            let text =
                std::fs::read_to_string(path).map_err(|e| CliError::Mesh(format!("cannot read {}: {e}", path.display())))?;
            Ok(parse_mesh2d(&text, options)?)
        }
        MeshSource::Interval { .. } => Err(CliError::Config("the mindlin model needs a structured or file mesh".into())),
    }
}

pub struct Mindlin;

impl ModelKind for Mindlin {
    fn name(&self) -> &'static str {
        "mindlin"
    }

    fn build(&self, cfg: &RunConfig) -> Result<Box<dyn Model>, CliError> {
        let kind = formulation_by_name(&cfg.formulation)
            .ok_or_else(|| CliError::Config(format!("unknown formulation '{}' (vectorial, tensorial)", cfg.formulation)))?
            .kind();
        if cfg.material.width.is_some() {
            return Err(CliError::Config("material.width applies to beams only".into()));
        }
        let m = &cfg.material;
        let material =
            PlateMaterial::new(m.young, m.poisson, m.density, m.thickness)?.with_shear_correction(m.shear_correction)?;
        let mesh = load_mesh2d(cfg)?;
        let tags = mesh.boundary_tags();
        let plate = assemble_plate(&mesh, &material, cfg.spaces, kind, cfg.control_variant, &tags)?;
        Ok(Box::new(plate))
    }
}

pub struct Timoshenko;

impl ModelKind for Timoshenko {
    fn name(&self) -> &'static str {
        "timoshenko"
    }

    fn build(&self, cfg: &RunConfig) -> Result<Box<dyn Model>, CliError> {
        let MeshSource::Interval { length, elements } = cfg.mesh else {
            return Err(CliError::Config("the timoshenko model needs an interval mesh".into()));
        };
        let m = &cfg.material;
        let width = m.width.unwrap_or(m.thickness);
        let material = BeamMaterial::rectangular(m.young, m.poisson, m.density, width, m.thickness, m.shear_correction)?;
        let mesh = Mesh1D::uniform(length, elements)?;
        Ok(Box::new(assemble_beam(&mesh, &material, cfg.control_variant)?))
    }
}

static REGISTRY: [&dyn ModelKind; 2] = [&Mindlin, &Timoshenko];

pub fn registry() -> &'static [&'static dyn ModelKind] {
    &REGISTRY
}

pub fn model_by_name(name: &str) -> Result<&'static dyn ModelKind, CliError> {
    registry().iter().copied().find(|m| m.name() == name).ok_or_else(|| {
        let names: Vec<&str> = registry().iter().map(|m| m.name()).collect();
        CliError::Config(format!("unknown model '{name}' (available: {})", names.join(", ")))
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup() {
        assert_eq!(model_by_name("mindlin").unwrap().name(), "mindlin");
        assert_eq!(model_by_name("timoshenko").unwrap().name(), "timoshenko");
        assert_eq!(model_by_name("kirchhoff").err().unwrap().exit_code(), 2);
    }
}
