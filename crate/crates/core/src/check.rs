//! Structure report for an assembled model.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::linalg::{dot, norm_inf, SpdFactor};
use crate::phcore::{dirac_pairing, DiracReport};
use crate::ports::PortedSystem;

#[derive(Debug, Clone, Serialize)]
pub struct Annihilation {
    pub block: String,
    /// `max |D 1| / max |D|`
    pub relative_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StructureReport {
    pub dim: usize,
    pub ports: usize,
    /// `max |J + J^T| / max |J|`
    pub skew_residual: f64,
    pub mass_symmetry_residual: f64,
    pub energy_symmetry_residual: f64,
    pub mass_spd: bool,
    pub energy_spd: bool,
    /// Smallest `x^T Q x / (max|Q| x^T x)` over the random samples.
    pub energy_min_rayleigh: f64,
    pub dirac: DiracReport,
    pub annihilation: Vec<Annihilation>,
    pub tolerance: f64,
    pub passed: bool,
}

impl StructureReport {
    pub fn max_annihilation_residual(&self) -> f64 {
        self.annihilation.iter().map(|a| a.relative_residual).fold(0.0, f64::max)
    }
}

fn relative(d: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        0.0
    } else {
        d / scale
    }
}

pub fn structure_report<S: PortedSystem + ?Sized>(model: &S, n_samples: usize, tol: f64, seed: u64) -> Result<StructureReport> {
    let sys = model.system();
    let (m, q, j) = (sys.mass(), sys.energy(), sys.interconnection());
    let n = sys.dim();
    let dirac = dirac_pairing(j, sys.input(), n_samples, seed)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9);
    let qmax = q.max_abs();
    let mut energy_min_rayleigh = f64::INFINITY;
    for _ in 0..n_samples {
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        energy_min_rayleigh = energy_min_rayleigh.min(relative(q.quad_form(&x), qmax * dot(&x, &x)));
    }

    let annihilation: Vec<Annihilation> = model
        .derivative_blocks()
        .into_iter()
        .map(|(block, d)| Annihilation {
            relative_residual: relative(norm_inf(&d.mul_vec(&vec![1.0; d.ncols()])), d.max_abs()),
            block,
        })
        .collect();

    let mut report = StructureReport {
        dim: n,
        ports: sys.num_ports(),
        skew_residual: relative(j.skew_defect().0, j.max_abs()),
        mass_symmetry_residual: relative(m.symmetry_defect().0, m.max_abs()),
        energy_symmetry_residual: relative(q.symmetry_defect().0, qmax),
        mass_spd: SpdFactor::new(m, "M").is_ok(),
        energy_spd: SpdFactor::new(q, "Q_d").is_ok(),
        energy_min_rayleigh,
        dirac,
        annihilation,
        tolerance: tol,
        passed: false,
    };
    report.passed = report.skew_residual <= tol
        && report.mass_symmetry_residual <= tol
        && report.energy_symmetry_residual <= tol
        && report.mass_spd
        && report.energy_spd
        && report.energy_min_rayleigh >= -tol
        && report.dirac.max_relative_residual <= tol
        && report.max_annihilation_residual() <= tol;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_plate, FESpaces, Formulation};
    use crate::material::{BeamMaterial, PlateMaterial};
    use crate::mesh::{structured_rectangle, Mesh1D};
    use crate::ports::ControlVariant;
    use crate::timoshenko::assemble_beam;

    #[test]
    fn plate_report_passes() {
        let mesh = structured_rectangle(1.0, 1.0, 4, 4).unwrap();
        let mat = PlateMaterial::new(210e9, 0.3, 7850.0, 0.01).unwrap();
        let p = assemble_plate(
            &mesh,
            &mat,
            FESpaces::default(),
            Formulation::Tensorial,
            ControlVariant::Kinematic,
            &[1, 2, 3, 4],
        )
        .unwrap();
        let r = structure_report(&p, 20, 1e-12, 1).unwrap();
        assert!(r.passed, "{r:?}");
        assert_eq!(r.annihilation.len(), 6);
        assert!(r.energy_min_rayleigh > 0.0);
    }

    #[test]
    fn beam_report_passes() {
        let mat = BeamMaterial::rectangular(210e9, 0.3, 7850.0, 0.01, 0.01, 5.0 / 6.0).unwrap();
        for variant in [ControlVariant::Dynamic, ControlVariant::Kinematic] {
            let b = assemble_beam(&Mesh1D::uniform(1.0, 10).unwrap(), &mat, variant).unwrap();
            let r = structure_report(&b, 20, 1e-12, 1).unwrap();
            assert!(r.passed, "{r:?}");
            assert_eq!(r.annihilation.len(), 2);
        }
    }

    #[test]
    fn report_serializes() {
        let b = assemble_beam(
            &Mesh1D::uniform(1.0, 2).unwrap(),
            &BeamMaterial::rectangular(1.0, 0.0, 1.0, 1.0, 1.0, 1.0).unwrap(),
            ControlVariant::Dynamic,
        )
        .unwrap();
        let r = structure_report(&b, 3, 1e-12, 0).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        assert_eq!(v["annihilation"][0]["block"], "kappa/phi");
        assert_eq!(v["passed"], true);
    }
}
