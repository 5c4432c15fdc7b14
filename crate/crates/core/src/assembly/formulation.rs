//! Curvature-block strategies: engineering vector or symmetric tensor.

use serde::{Deserialize, Serialize};

use crate::material::{contract, moment_tensor, PlateRigidity, Sym2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Formulation {
    Vectorial,
    Tensorial,
}

impl Formulation {
    pub fn name(self) -> &'static str {
        match self {
            Formulation::Vectorial => "vectorial",
            Formulation::Tensorial => "tensorial",
        }
    }
}

/// How the three curvature components enter the element forms. Index `c`
/// runs over curvature components, `i` over rotation components.
pub trait PlateFormulation: Send + Sync + std::fmt::Debug {
    fn kind(&self) -> Formulation;

    fn curvature_names(&self) -> [&'static str; 3];

    /// `W` such that the curvature mass block is `W (x) Mass_s`.
    fn curvature_mass(&self) -> [[f64; 3]; 3];

    /// `C` such that the curvature energy block is `C (x) Mass_s`.
    fn curvature_energy(&self, rig: &PlateRigidity) -> [[f64; 3]; 3];

    /// Coefficient of rotation component `i` in curvature rate `c` for a
    /// scalar rotation basis function with gradient `g`.
    fn curvature_rate(&self, g: [f64; 2]) -> [[f64; 2]; 3];

    /// Coefficient of curvature component `c` in the divergence entering
    /// rotation equation `i`, for a scalar curvature basis with gradient `g`.
    fn moment_divergence(&self, g: [f64; 2]) -> [[f64; 2]; 3];

    /// Weights of `(omega_n, omega_s)` in the boundary pairing of curvature
    /// component `c` on an edge with outward normal `n`.
    fn boundary_traction(&self, n: [f64; 2]) -> [[f64; 2]; 3];

    /// Factors mapping stored curvature coordinates to engineering ones.
    fn engineering_scale(&self) -> [f64; 3];
}

#[derive(Debug, Clone, Copy, Default)]
pub struct VectorialFormulation;

impl PlateFormulation for VectorialFormulation {
    fn kind(&self) -> Formulation {
        Formulation::Vectorial
    }

    fn curvature_names(&self) -> [&'static str; 3] {
        ["kappa_xx", "kappa_yy", "kappa_xy"]
    }

    fn curvature_mass(&self) -> [[f64; 3]; 3] {
        [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]
    }

    fn curvature_energy(&self, rig: &PlateRigidity) -> [[f64; 3]; 3] {
        rig.bending
    }

    fn curvature_rate(&self, g: [f64; 2]) -> [[f64; 2]; 3] {
        [[g[0], 0.0], [0.0, g[1]], [g[1], g[0]]]
    }

    fn moment_divergence(&self, g: [f64; 2]) -> [[f64; 2]; 3] {
        [[g[0], 0.0], [0.0, g[1]], [g[1], g[0]]]
    }

    fn boundary_traction(&self, n: [f64; 2]) -> [[f64; 2]; 3] {
        let (nx, ny) = (n[0], n[1]);
        [[nx * nx, -nx * ny], [ny * ny, nx * ny], [2.0 * nx * ny, nx * nx - ny * ny]]
    }

    fn engineering_scale(&self) -> [f64; 3] {
        [1.0, 1.0, 1.0]
    }
}

/// Symmetric tensor basis `E_xx`, `E_yy`, `E_xy = e_x (x) e_y + e_y (x) e_x`.
const TENSOR_BASIS: [Sym2; 3] = [[[1.0, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.0, 1.0]], [[0.0, 1.0], [1.0, 0.0]]];

fn unit(i: usize) -> [f64; 2] {
    let mut e = [0.0; 2];
    e[i] = 1.0;
    e
}

/// `sym(a (x) b)`
fn sym_outer(a: [f64; 2], b: [f64; 2]) -> Sym2 {
    let mut s = [[0.0; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            s[r][c] = 0.5 * (a[r] * b[c] + a[c] * b[r]);
        }
    }
    s
}

fn apply(t: Sym2, v: [f64; 2]) -> [f64; 2] {
    [t[0][0] * v[0] + t[0][1] * v[1], t[1][0] * v[0] + t[1][1] * v[1]]
}

fn dot2(a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TensorialFormulation;

impl PlateFormulation for TensorialFormulation {
    fn kind(&self) -> Formulation {
        Formulation::Tensorial
    }

    fn curvature_names(&self) -> [&'static str; 3] {
        ["K_xx", "K_yy", "K_xy"]
    }

    fn curvature_mass(&self) -> [[f64; 3]; 3] {
        let mut w = [[0.0; 3]; 3];
        for c in 0..3 {
            for d in 0..3 {
                w[c][d] = contract(TENSOR_BASIS[c], TENSOR_BASIS[d]);
            }
        }
        w
    }

    fn curvature_energy(&self, rig: &PlateRigidity) -> [[f64; 3]; 3] {
        let mut q = [[0.0; 3]; 3];
        for c in 0..3 {
            for d in 0..3 {
                q[c][d] = contract(TENSOR_BASIS[c], moment_tensor(rig, TENSOR_BASIS[d]));
            }
        }
        q
    }

    fn curvature_rate(&self, g: [f64; 2]) -> [[f64; 2]; 3] {
        let mut r = [[0.0; 2]; 3];
        for (c, e) in TENSOR_BASIS.iter().enumerate() {
            for i in 0..2 {
                r[c][i] = contract(*e, sym_outer(unit(i), g));
            }
        }
        r
    }

    fn moment_divergence(&self, g: [f64; 2]) -> [[f64; 2]; 3] {
        let mut r = [[0.0; 2]; 3];
        for (c, e) in TENSOR_BASIS.iter().enumerate() {
            r[c] = apply(*e, g);
        }
        r
    }

    fn boundary_traction(&self, n: [f64; 2]) -> [[f64; 2]; 3] {
        let s = [-n[1], n[0]];
        let mut r = [[0.0; 2]; 3];
        for (c, e) in TENSOR_BASIS.iter().enumerate() {
            let t = apply(*e, n);
            r[c] = [dot2(t, n), dot2(t, s)];
        }
        r
    }

    fn engineering_scale(&self) -> [f64; 3] {
        [1.0, 1.0, 2.0]
    }
}

/// Registered formulations, looked up by kind or name.
pub fn registry() -> Vec<Box<dyn PlateFormulation>> {
    vec![Box::new(VectorialFormulation), Box::new(TensorialFormulation)]
}

pub fn formulation(kind: Formulation) -> Box<dyn PlateFormulation> {
    registry()
        .into_iter()
        .find(|f| f.kind() == kind)
        .expect("every formulation kind is registered")
}

pub fn formulation_by_name(name: &str) -> Option<Box<dyn PlateFormulation>> {
    registry().into_iter().find(|f| f.kind().name() == name)
}
