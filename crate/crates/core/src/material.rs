//! Constitutive and inertial coefficients.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Sym2 = [[f64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlateMaterial {
    pub young: f64,
    pub poisson: f64,
    pub density: f64,
    pub thickness: f64,
    #[serde(default = "default_shear_correction")]
    pub shear_correction: f64,
}

pub fn default_shear_correction() -> f64 {
    5.0 / 6.0
}

impl PlateMaterial {
    pub fn new(young: f64, poisson: f64, density: f64, thickness: f64) -> Result<Self> {
        let m = Self {
            young,
            poisson,
            density,
            thickness,
            shear_correction: default_shear_correction(),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn with_shear_correction(mut self, k: f64) -> Result<Self> {
        self.shear_correction = k;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str, v: f64| Err(Error::InvalidParameter(format!("{what} = {v} is out of range")));
        if !(self.young > 0.0 && self.young.is_finite()) {
            return bad("Young modulus", self.young);
        }
        if !(self.poisson >= 0.0 && self.poisson < 0.5) {
            return bad("Poisson ratio", self.poisson);
        }
        if !(self.density > 0.0 && self.density.is_finite()) {
            return bad("density", self.density);
        }
        if !(self.thickness > 0.0 && self.thickness.is_finite()) {
            return bad("thickness", self.thickness);
        }
        if !(self.shear_correction > 0.0 && self.shear_correction <= 1.0) {
            return bad("shear correction", self.shear_correction);
        }
        Ok(())
    }

    pub fn shear_modulus(&self) -> f64 {
        self.young / (2.0 * (1.0 + self.poisson))
    }

    /// Flexural rigidity `E h^3 / (12 (1 - nu^2))`.
    pub fn flexural_rigidity(&self) -> f64 {
        self.young * self.thickness.powi(3) / (12.0 * (1.0 - self.poisson * self.poisson))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateRigidity {
    /// Bending rigidity acting on `(k_xx, k_yy, k_xy)` with engineering shear.
    pub bending: [[f64; 3]; 3],
    pub shear: Sym2,
    /// Areal mass `rho h`.
    pub areal_mass: f64,
    /// Rotary inertia `rho h^3 / 12`.
    pub rotary_inertia: f64,
    pub flexural: f64,
    pub poisson: f64,
}

pub fn plate_rigidity(mat: &PlateMaterial) -> Result<PlateRigidity> {
    mat.validate()?;
    let d = mat.flexural_rigidity();
    let nu = mat.poisson;
    let ks = mat.shear_correction * mat.shear_modulus() * mat.thickness;
    Ok(PlateRigidity {
        bending: [[d, d * nu, 0.0], [d * nu, d, 0.0], [0.0, 0.0, d * (1.0 - nu) / 2.0]],
        shear: [[ks, 0.0], [0.0, ks]],
        areal_mass: mat.density * mat.thickness,
        rotary_inertia: mat.density * mat.thickness.powi(3) / 12.0,
        flexural: d,
        poisson: nu,
    })
}

/// `1/2 k^T D_b k` for curvatures in engineering convention.
pub fn bending_energy_density(rig: &PlateRigidity, kappa: [f64; 3]) -> f64 {
    let mut s = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            s += kappa[i] * rig.bending[i][j] * kappa[j];
        }
    }
    0.5 * s
}

/// Moment tensor `D [(1 - nu) K + nu tr(K) I]` for a symmetric curvature tensor.
pub fn moment_tensor(rig: &PlateRigidity, k: Sym2) -> Sym2 {
    let d = rig.flexural;
    let nu = rig.poisson;
    let tr = k[0][0] + k[1][1];
    [
        [d * ((1.0 - nu) * k[0][0] + nu * tr), d * (1.0 - nu) * k[0][1]],
        [d * (1.0 - nu) * k[1][0], d * ((1.0 - nu) * k[1][1] + nu * tr)],
    ]
}

/// Double contraction `A : B`.
pub fn contract(a: Sym2, b: Sym2) -> f64 {
    a[0][0] * b[0][0] + a[0][1] * b[0][1] + a[1][0] * b[1][0] + a[1][1] * b[1][1]
}

/// Curvature tensor from engineering components `(k_xx, k_yy, 2 k_xy)`.
pub fn tensor_from_engineering(kappa: [f64; 3]) -> Sym2 {
    [[kappa[0], 0.5 * kappa[2]], [0.5 * kappa[2], kappa[1]]]
}

/// Coefficient profile over 1D elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Profile {
    Constant(f64),
    PerElement(Vec<f64>),
}

impl Profile {
    pub fn at(&self, element: usize) -> f64 {
        match self {
            Profile::Constant(v) => *v,
            Profile::PerElement(v) => v[element],
        }
    }

    fn validate(&self, name: &str, elements: Option<usize>) -> Result<()> {
        let values: &[f64] = match self {
            Profile::Constant(v) => std::slice::from_ref(v),
            Profile::PerElement(v) => {
                if let Some(n) = elements {
                    if v.len() != n {
                        return Err(Error::InvalidParameter(format!(
                            "{name} profile has {} values for {n} elements",
                            v.len()
                        )));
                    }
                }
                v
            }
        };
        if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamMaterial {
    /// Mass per unit length.
    pub rho_a: Profile,
    /// Rotary inertia per unit length.
    pub rho_i: Profile,
    pub ei: Profile,
    /// Shear stiffness `k G A`.
    pub shear: Profile,
}

impl BeamMaterial {
    /// Homogeneous rectangular section `width x height`.
    pub fn rectangular(young: f64, poisson: f64, density: f64, width: f64, height: f64, k: f64) -> Result<Self> {
        if !(0.0..0.5).contains(&poisson) {
            return Err(Error::InvalidParameter(format!("Poisson ratio = {poisson} is out of range")));
        }
        let area = width * height;
        let inertia = width * height.powi(3) / 12.0;
        let g = young / (2.0 * (1.0 + poisson));
        let m = Self {
            rho_a: Profile::Constant(density * area),
            rho_i: Profile::Constant(density * inertia),
            ei: Profile::Constant(young * inertia),
            shear: Profile::Constant(k * g * area),
        };
        m.validate(None)?;
        Ok(m)
    }

    pub fn validate(&self, elements: Option<usize>) -> Result<()> {
        self.rho_a.validate("rho A", elements)?;
        self.rho_i.validate("rho I", elements)?;
        self.ei.validate("EI", elements)?;
        self.shear.validate("shear stiffness", elements)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unit_rigidity() {
        let m = PlateMaterial::new(1.0, 0.0, 1.0, 1.0)
            .unwrap()
            .with_shear_correction(1.0)
            .unwrap();
        let r = plate_rigidity(&m).unwrap();
        assert_eq!(
            r.bending,
            [[1.0 / 12.0, 0.0, 0.0], [0.0, 1.0 / 12.0, 0.0], [0.0, 0.0, 1.0 / 24.0]]
        );
        assert_eq!(r.shear, [[0.5, 0.0], [0.0, 0.5]]);
        let m = PlateMaterial::new(1.0, 0.0, 1.0, 1.0).unwrap();
        let r = plate_rigidity(&m).unwrap();
        assert!((r.shear[0][0] - 5.0 / 12.0).abs() < 1e-16);
        assert!((r.shear[1][1] - 5.0 / 12.0).abs() < 1e-16);
    }

    #[test]
    fn steel_plate_bending() {
        let m = PlateMaterial::new(210e9, 0.3, 7850.0, 0.01).unwrap();
        let r = plate_rigidity(&m).unwrap();
        let expected = 210e9 * 1e-6 / (12.0 * 0.91);
        assert!((r.bending[0][0] - expected).abs() <= 1e-12 * expected);
        assert!((r.bending[0][0] - 1.9231e4).abs() <= 0.5);
        assert_eq!(r.areal_mass, 78.5);
    }

    #[test]
    fn energy_density_examples() {
        let m = PlateMaterial::new(12.0, 0.0, 1.0, 1.0).unwrap();
        let r = plate_rigidity(&m).unwrap();
        assert_eq!(bending_energy_density(&r, [0.0; 3]), 0.0);
        assert_eq!(bending_energy_density(&r, [1.0, 0.0, 0.0]), 0.5);
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(PlateMaterial::new(-1.0, 0.3, 1.0, 1.0).is_err());
        assert!(PlateMaterial::new(1.0, 0.5, 1.0, 1.0).is_err());
        assert!(PlateMaterial::new(1.0, 0.3, 1.0, 0.0).is_err());
        assert!(PlateMaterial::new(1.0, 0.3, 1.0, 1.0)
            .unwrap()
            .with_shear_correction(1.5)
            .is_err());
        let b = BeamMaterial {
            rho_a: Profile::PerElement(vec![1.0, 0.0]),
            rho_i: Profile::Constant(1.0),
            ei: Profile::Constant(1.0),
            shear: Profile::Constant(1.0),
        };
        assert!(b.validate(Some(2)).is_err());
    }

    fn cholesky3(a: [[f64; 3]; 3]) -> bool {
        let mut l = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..=i {
                let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
                if i == j {
                    let d = a[i][i] - s;
                    if d <= 0.0 {
                        return false;
                    }
                    l[i][i] = d.sqrt();
                } else {
                    l[i][j] = (a[i][j] - s) / l[j][j];
                }
            }
        }
        true
    }

    proptest! {
        #[test]
        fn rigidity_is_spd(e in 1e3f64..1e12, nu in 0.0f64..0.499, h in 1e-4f64..1.0, k in 0.01f64..=1.0) {
            let m = PlateMaterial::new(e, nu, 1000.0, h).unwrap().with_shear_correction(k).unwrap();
            let r = plate_rigidity(&m).unwrap();
            prop_assert!(cholesky3(r.bending));
            prop_assert_eq!(r.bending[0][1], r.bending[1][0]);
            prop_assert_eq!(r.bending[0][0], r.bending[1][1]);
            prop_assert!(r.shear[0][0] > 0.0 && r.shear[0][1] == 0.0 && r.shear[0][0] == r.shear[1][1]);
        }

        #[test]
        fn vector_and_tensor_energies_agree(
            nu in 0.0f64..0.499,
            kxx in -10.0f64..10.0, kyy in -10.0f64..10.0, kxy in -10.0f64..10.0,
        ) {
            let m = PlateMaterial::new(210e9, nu, 7850.0, 0.01).unwrap();
            let r = plate_rigidity(&m).unwrap();
            let vec = bending_energy_density(&r, [kxx, kyy, kxy]);
            let k = tensor_from_engineering([kxx, kyy, kxy]);
            let ten = 0.5 * contract(moment_tensor(&r, k), k);
            prop_assert!((vec - ten).abs() <= 1e-13 * vec.abs().max(f64::MIN_POSITIVE));
        }
    }
}
