//! Linear triangles, quadrature rules and local basis evaluation.

use crate::error::{Error, Result};
use crate::mesh::{Mesh2D, Point};

/// Quadrature on the reference triangle in barycentric coordinates.
#[derive(Debug, Clone, Copy)]
pub struct TriangleRule {
    pub points: &'static [[f64; 3]],
    /// Weights summing to 1; multiply by the element area.
    pub weights: &'static [f64],
    pub degree: usize,
}

const TWO_THIRDS: f64 = 2.0 / 3.0;
const ONE_SIXTH: f64 = 1.0 / 6.0;
const ONE_THIRD: f64 = 1.0 / 3.0;

pub const TRIANGLE_DEGREE_1: TriangleRule = TriangleRule {
    points: &[[ONE_THIRD, ONE_THIRD, ONE_THIRD]],
    weights: &[1.0],
    degree: 1,
};

pub const TRIANGLE_DEGREE_2: TriangleRule = TriangleRule {
    points: &[
        [TWO_THIRDS, ONE_SIXTH, ONE_SIXTH],
        [ONE_SIXTH, TWO_THIRDS, ONE_SIXTH],
        [ONE_SIXTH, ONE_SIXTH, TWO_THIRDS],
    ],
    weights: &[ONE_THIRD, ONE_THIRD, ONE_THIRD],
    degree: 2,
};

impl TriangleRule {
    pub fn for_degree(degree: usize) -> Result<Self> {
        match degree {
            0 | 1 => Ok(TRIANGLE_DEGREE_1),
            2 => Ok(TRIANGLE_DEGREE_2),
            d => Err(Error::InvalidParameter(format!("no triangle rule of degree {d}"))),
        }
    }
}

/// Two-point Gauss rule on `[0, 1]`, exact to degree 3.
pub const EDGE_POINTS: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];
pub const EDGE_WEIGHTS: [f64; 2] = [0.5, 0.5];
pub const EDGE_DEGREE: usize = 3;

/// Affine triangle with constant P1 shape gradients.
#[derive(Debug, Clone, Copy)]
pub struct P1Triangle {
    pub nodes: [usize; 3],
    pub points: [Point; 3],
    pub area: f64,
    pub grads: [[f64; 2]; 3],
}

impl P1Triangle {
    pub fn new(mesh: &Mesh2D, t: usize) -> Result<Self> {
        let nodes = mesh.triangles()[t];
        let p = mesh.triangle_points(t);
        let area = mesh.triangle_area(t);
        if !(area > 0.0) || !area.is_finite() {
            return Err(Error::Element {
                element: t,
                message: format!("degenerate triangle with area {area:e}"),
            });
        }
        let mut grads = [[0.0; 2]; 3];
        for i in 0..3 {
            let j = (i + 1) % 3;
            let k = (i + 2) % 3;
            grads[i] = [(p[j][1] - p[k][1]) / (2.0 * area), (p[k][0] - p[j][0]) / (2.0 * area)];
        }
        Ok(Self {
            nodes,
            points: p,
            area,
            grads,
        })
    }

    pub fn map(&self, bary: [f64; 3]) -> Point {
        let mut x = [0.0; 2];
        for i in 0..3 {
            x[0] += bary[i] * self.points[i][0];
            x[1] += bary[i] * self.points[i][1];
        }
        x
    }
}

/// Scalar families used for the strain-type fields.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScalarFamily {
    /// Continuous piecewise linear, one dof per node.
    P1,
    /// Piecewise constant, one dof per triangle.
    P0,
}

impl ScalarFamily {
    pub fn degree(self) -> usize {
        match self {
            ScalarFamily::P1 => 1,
            ScalarFamily::P0 => 0,
        }
    }

    pub fn dim(self, mesh: &Mesh2D) -> usize {
        match self {
            ScalarFamily::P1 => mesh.num_nodes(),
            ScalarFamily::P0 => mesh.num_triangles(),
        }
    }

    pub fn local_dofs(self, t: usize, tri: &P1Triangle) -> LocalDofs {
        match self {
            ScalarFamily::P1 => LocalDofs::Three(tri.nodes),
            ScalarFamily::P0 => LocalDofs::One(t),
        }
    }

    pub fn values(self, bary: [f64; 3]) -> LocalValues {
        match self {
            ScalarFamily::P1 => LocalValues::Three(bary),
            ScalarFamily::P0 => LocalValues::One(1.0),
        }
    }

    /// Gradients of the local basis; `None` for discontinuous constants.
    pub fn grads(self, tri: &P1Triangle) -> Option<[[f64; 2]; 3]> {
        match self {
            ScalarFamily::P1 => Some(tri.grads),
            ScalarFamily::P0 => None,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum LocalDofs {
    One(usize),
    Three([usize; 3]),
}

impl LocalDofs {
    pub fn as_slice(&self) -> &[usize] {
        match self {
            LocalDofs::One(d) => std::slice::from_ref(d),
            LocalDofs::Three(d) => d,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum LocalValues {
    One(f64),
    Three([f64; 3]),
}

impl LocalValues {
    pub fn as_slice(&self) -> &[f64] {
        match self {
            LocalValues::One(v) => std::slice::from_ref(v),
            LocalValues::Three(v) => v,
        }
    }
}

/// `int_T u_a v_b` for local bases of two families.
pub fn local_mass(tri: &P1Triangle, rule: &TriangleRule, u: ScalarFamily, v: ScalarFamily) -> Vec<Vec<f64>> {
    let nu = u.values([1.0, 0.0, 0.0]).as_slice().len();
    let nv = v.values([1.0, 0.0, 0.0]).as_slice().len();
    let mut m = vec![vec![0.0; nv]; nu];
    for (bary, w) in rule.points.iter().zip(rule.weights) {
        let uv = u.values(*bary);
        let vv = v.values(*bary);
        for (a, ua) in uv.as_slice().iter().enumerate() {
            for (b, vb) in vv.as_slice().iter().enumerate() {
                m[a][b] += w * tri.area * ua * vb;
            }
        }
    }
    m
}

/// `int_T u_a` for the local basis of a family.
pub fn local_integrals(tri: &P1Triangle, rule: &TriangleRule, u: ScalarFamily) -> Vec<f64> {
    let n = u.values([1.0, 0.0, 0.0]).as_slice().len();
    let mut s = vec![0.0; n];
    for (bary, w) in rule.points.iter().zip(rule.weights) {
        for (a, ua) in u.values(*bary).as_slice().iter().enumerate() {
            s[a] += w * tri.area * ua;
        }
    }
    s
}
