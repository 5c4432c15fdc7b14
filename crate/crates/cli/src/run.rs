//! Action dispatch and artifact writing.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use phfem::boundary::split_ports;
use phfem::check::structure_report;
use phfem::integrate::simulate;
use phfem::linalg::write_coordinate;
use phfem::spectral::modal_analysis;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Action, Initial, RunConfig};
use crate::error::CliError;
use crate::models::{model_by_name, Model};

pub struct Outputs {
    dir: PathBuf,
    pub files: Vec<String>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::output(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, f: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| CliError::output(&path, e))?;
        let mut w = BufWriter::new(file);
        f(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::output(&path, e))?;
        self.files.push(name.to_string());
        Ok(())
    }

    pub fn write_json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).map_err(|e| CliError::output(&self.dir.join(name), e))?;
        self.write(name, |w| writeln!(w, "{text}"))
    }
}

fn initial_state(model: &dyn Model, initial: &Initial) -> Vec<f64> {
    let n = model.system().dim();
    match *initial {
        Initial::Zero => vec![0.0; n],
        Initial::Random { seed, amplitude } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..n).map(|_| amplitude * rng.gen_range(-1.0..1.0)).collect()
        }
        Initial::Bump {
            center,
            width,
            amplitude,
        } => model.vertical_momentum(&|x| {
            let r2 = (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2);
            amplitude * (-0.5 * r2 / (width * width)).exp()
        }),
    }
}

fn check_tags(cfg: &RunConfig, model: &dyn Model) -> Result<phfem::boundary::BCSpec, CliError> {
    let tags = model.boundary_tags();
    let spec = cfg.bc_spec(&tags)?;
    for &tag in spec.conditions.keys() {
        if !tags.contains(&tag) {
            return Err(phfem::Error::UnknownTag(tag).into());
        }
    }
    Ok(spec)
}

/// Runs `cfg.action` and returns the model facts for the manifest.
pub fn execute(cfg: &RunConfig, out: &mut Outputs) -> Result<Value, CliError> {
    let action = cfg.action.ok_or_else(|| CliError::Config("no action".into()))?;
    let model = model_by_name(&cfg.model)?.build(cfg)?;
    let model = model.as_ref();
    let spec = check_tags(cfg, model)?;
    let mut facts = model.describe();

    match action {
        Action::Check => {
            let report = structure_report(model, cfg.check.samples, cfg.tolerances.structure, cfg.check.seed)?;
            out.write_json("structure_report.json", &report)?;
            if !report.passed {
                return Err(CliError::CheckFailed(format!(
                    "skew {:e}, Dirac {:e}, annihilation {:e}, M SPD {}, Q_d SPD {} (tolerance {:e})",
                    report.skew_residual,
                    report.dirac.max_relative_residual,
                    report.max_annihilation_residual(),
                    report.mass_spd,
                    report.energy_spd,
                    report.tolerance
                )));
            }
        }
        Action::Simulate => {
            let csys = split_ports(model, &spec)?;
            let (t_end, dt) = (cfg.simulate.t_end.unwrap_or_default(), cfg.simulate.dt.unwrap_or_default());
            let tr = simulate(&csys, &initial_state(model, &cfg.simulate.initial), t_end, dt)?;
            out.write("trajectory.csv", |w| tr.write_csv(w))?;
            let h0 = tr.hamiltonian[0];
            let work = tr.total_injected_work();
            let dh = tr.energy_change();
            let balance_scale = h0.abs().max(work.abs());
            let summary = json!({
                "steps": tr.len() - 1,
                "dt": tr.dt,
                "t_end": tr.times[tr.len() - 1],
                "multipliers": csys.num_multipliers(),
                "dependent_multipliers": csys.dependent_labels(),
                "hamiltonian_initial": h0,
                "hamiltonian_final": tr.hamiltonian[tr.len() - 1],
                "energy_change": dh,
                "relative_energy_drift": if h0 > 0.0 { json!(dh.abs() / h0) } else { Value::Null },
                "injected_work": work,
                "multiplier_work": tr.total_multiplier_work(),
                "work_balance_error": if balance_scale > 0.0 { (dh - work).abs() / balance_scale } else { 0.0 },
                "max_power_residual": tr.power_residual.iter().fold(0.0f64, |m, r| m.max(r.abs())),
                "max_relative_power_residual": tr.relative_power_residuals().into_iter().fold(0.0, f64::max),
                "max_constraint_residual": tr.max_constraint_residual(),
            });
            out.write_json("summary.json", &summary)?;
        }
        Action::Modes => {
            let csys = split_ports(model, &spec)?;
            let modes = modal_analysis(&csys, cfg.modes.n_modes)?;
            out.write("modes.csv", |w| modes.write_csv(w))?;
            facts["reduced_dim"] = json!(modes.reduced_dim);
        }
        Action::ExportMatrices => {
            let sys = model.system();
            for (name, m) in [
                ("M", sys.mass()),
                ("Q_d", sys.energy()),
                ("J_d", sys.interconnection()),
                ("B", sys.input()),
            ] {
                out.write(&format!("{name}.txt"), |w| write_coordinate(m, w))?;
            }
            out.write_json("ports.json", model.ports())?;
            facts["layout"] = sys
                .layout()
                .names()
                .map(|n| (n.to_string(), json!(sys.layout().range(n).map(|r| [r.start, r.end]))))
                .collect::<serde_json::Map<_, _>>()
                .into();
        }
    }
    Ok(facts)
}
