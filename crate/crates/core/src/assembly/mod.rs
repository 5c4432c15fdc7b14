//! Partitioned finite element assembly of the Mindlin plate.
//!
//! State layout: `w, theta_x, theta_y` on the velocity family (nodal P1),
//! then three curvature components and `gamma_x, gamma_y` on the strain
//! family. The dynamic variant integrates the velocity equations by parts
//! and takes `(Q_n, M_nn, M_ns)` as inputs; the kinematic variant integrates
//! the strain equations by parts and takes `(v, omega_n, omega_s)`.

pub mod element;
pub mod formulation;
pub mod trace;

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::material::{plate_rigidity, PlateMaterial};
use crate::mesh::{Mesh2D, Point};
use crate::phcore::{make_phsystem, BlockLayout, PHSystem};
use crate::ports::{port_label, ControlVariant, PortComponent, PortInfo, PortQuantity, PortedSystem};

pub use element::ScalarFamily;
pub use formulation::{formulation, Formulation, PlateFormulation};
pub use trace::TraceSpace;

use element::{local_integrals, local_mass, P1Triangle, TriangleRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FESpaces {
    pub strain: ScalarFamily,
    pub quadrature_degree: usize,
}

impl Default for FESpaces {
    fn default() -> Self {
        Self {
            strain: ScalarFamily::P1,
            quadrature_degree: 2,
        }
    }
}

impl FESpaces {
    pub fn with_strain(strain: ScalarFamily) -> Self {
        Self {
            strain,
            ..Self::default()
        }
    }

    /// Highest polynomial degree among the assembled bilinear forms.
    pub fn required_degree(&self) -> usize {
        2.max(1 + self.strain.degree())
    }

    fn validate(&self, variant: ControlVariant) -> Result<()> {
        if self.quadrature_degree < self.required_degree() {
            return Err(Error::InvalidParameter(format!(
                "quadrature degree {} is below the form degree {}",
                self.quadrature_degree,
                self.required_degree()
            )));
        }
        if variant == ControlVariant::Kinematic && self.strain == ScalarFamily::P0 {
            return Err(Error::InvalidParameter(
                "the kinematic variant differentiates strain test functions and needs P1 strains".into(),
            ));
        }
        Ok(())
    }
}

pub const VELOCITY_FIELDS: [&str; 3] = ["w", "theta_x", "theta_y"];
pub const SHEAR_FIELDS: [&str; 2] = ["gamma_x", "gamma_y"];

#[derive(Debug, Clone)]
pub struct AssembledPlate {
    pub system: PHSystem,
    pub formulation: Formulation,
    pub variant: ControlVariant,
    pub spaces: FESpaces,
    pub ports: Vec<PortInfo>,
    pub trace: TraceSpace,
    pub mesh: Mesh2D,
    pub control_tags: Vec<i64>,
    n_velocity: usize,
    n_strain: usize,
}

#[derive(Debug, Clone, Copy)]
struct Offsets {
    nv: usize,
    ns: usize,
}

impl Offsets {
    fn w(&self, i: usize) -> usize {
        i
    }
    fn theta(&self, k: usize, i: usize) -> usize {
        (1 + k) * self.nv + i
    }
    fn kappa(&self, c: usize, i: usize) -> usize {
        3 * self.nv + c * self.ns + i
    }
    fn gamma(&self, k: usize, i: usize) -> usize {
        3 * self.nv + (3 + k) * self.ns + i
    }
    fn dim(&self) -> usize {
        3 * self.nv + 5 * self.ns
    }
}

/// Pushes `v` at `(r, c)` and `-v` at `(c, r)`.
fn push_skew(j: &mut TripletBuilder, r: usize, c: usize, v: f64) {
    if v != 0.0 {
        j.push(r, c, v);
        j.push(c, r, -v);
    }
}

pub fn assemble_plate(
    mesh: &Mesh2D,
    material: &PlateMaterial,
    spaces: FESpaces,
    kind: Formulation,
    variant: ControlVariant,
    tags: &[i64],
) -> Result<AssembledPlate> {
    spaces.validate(variant)?;
    let rig = plate_rigidity(material)?;
    let strategy = formulation(kind);
    let rule = TriangleRule::for_degree(spaces.quadrature_degree.min(2))?;
    let sf = spaces.strain;
    let off = Offsets {
        nv: mesh.num_nodes(),
        ns: sf.dim(mesh),
    };
    let n = off.dim();
    let mut mb = TripletBuilder::new(n, n);
    let mut qb = TripletBuilder::new(n, n);
    let mut jb = TripletBuilder::new(n, n);

    let wmass = strategy.curvature_mass();
    let kenergy = strategy.curvature_energy(&rig);
    let inv_mu = 1.0 / rig.areal_mass;
    let inv_rot = 1.0 / rig.rotary_inertia;

    for t in 0..mesh.num_triangles() {
        let tri = P1Triangle::new(mesh, t)?;
        let vd = tri.nodes;
        let sd = sf.local_dofs(t, &tri);
        let sd = sd.as_slice();
        let mv = local_mass(&tri, &rule, ScalarFamily::P1, ScalarFamily::P1);
        let ms = local_mass(&tri, &rule, sf, sf);
        let msv = local_mass(&tri, &rule, sf, ScalarFamily::P1);
        let int_s = local_integrals(&tri, &rule, sf);
        let int_v = local_integrals(&tri, &rule, ScalarFamily::P1);

        for a in 0..3 {
            for b in 0..3 {
                let m = mv[a][b];
                mb.push(off.w(vd[a]), off.w(vd[b]), m);
                qb.push(off.w(vd[a]), off.w(vd[b]), inv_mu * m);
                for k in 0..2 {
                    mb.push(off.theta(k, vd[a]), off.theta(k, vd[b]), m);
                    qb.push(off.theta(k, vd[a]), off.theta(k, vd[b]), inv_rot * m);
                }
            }
        }
        for (a, &ra) in sd.iter().enumerate() {
            for (b, &rb) in sd.iter().enumerate() {
                let m = ms[a][b];
                for c in 0..3 {
                    for d in 0..3 {
                        if wmass[c][d] != 0.0 {
                            mb.push(off.kappa(c, ra), off.kappa(d, rb), wmass[c][d] * m);
                        }
                        if kenergy[c][d] != 0.0 {
                            qb.push(off.kappa(c, ra), off.kappa(d, rb), kenergy[c][d] * m);
                        }
                    }
                }
                for k in 0..2 {
                    mb.push(off.gamma(k, ra), off.gamma(k, rb), m);
                    for l in 0..2 {
                        if rig.shear[k][l] != 0.0 {
                            qb.push(off.gamma(k, ra), off.gamma(l, rb), rig.shear[k][l] * m);
                        }
                    }
                }
            }
        }

        match variant {
            ControlVariant::Dynamic => {
                for (a, &ra) in sd.iter().enumerate() {
                    for b in 0..3 {
                        let g = tri.grads[b];
                        let rate = strategy.curvature_rate(g);
                        for (c, row) in rate.iter().enumerate() {
                            for (i, coef) in row.iter().enumerate() {
                                push_skew(&mut jb, off.kappa(c, ra), off.theta(i, vd[b]), int_s[a] * coef);
                            }
                        }
                        for k in 0..2 {
                            push_skew(&mut jb, off.gamma(k, ra), off.w(vd[b]), int_s[a] * g[k]);
                            push_skew(&mut jb, off.gamma(k, ra), off.theta(k, vd[b]), -msv[a][b]);
                        }
                    }
                }
            }
            ControlVariant::Kinematic => {
                let sgrads = sf.grads(&tri).ok_or_else(|| Error::Element {
                    element: t,
                    message: "strain family has no gradients".into(),
                })?;
                for a in 0..3 {
                    for (b, &rb) in sd.iter().enumerate() {
                        let h = sgrads[b];
                        let div = strategy.moment_divergence(h);
                        for (c, row) in div.iter().enumerate() {
                            for (i, coef) in row.iter().enumerate() {
                                push_skew(&mut jb, off.theta(i, vd[a]), off.kappa(c, rb), int_v[a] * coef);
                            }
                        }
                        for k in 0..2 {
                            push_skew(&mut jb, off.w(vd[a]), off.gamma(k, rb), int_v[a] * h[k]);
                            push_skew(&mut jb, off.theta(k, vd[a]), off.gamma(k, rb), msv[b][a]);
                        }
                    }
                }
            }
        }
    }

    let trace = TraceSpace::new(mesh, tags)?;
    let nt = trace.len();
    let m_ports = 3 * nt;
    let mut bb = TripletBuilder::new(n, m_ports);
    let col = |g: usize, dof: usize| g * nt + dof;
    trace.for_each_edge_mass(mesh, |_, node, dof, nrm, v| {
        let (nx, ny) = (nrm[0], nrm[1]);
        match variant {
            ControlVariant::Dynamic => {
                bb.push(off.w(node), col(0, dof), v);
                bb.push(off.theta(0, node), col(1, dof), nx * v);
                bb.push(off.theta(1, node), col(1, dof), ny * v);
                bb.push(off.theta(0, node), col(2, dof), -ny * v);
                bb.push(off.theta(1, node), col(2, dof), nx * v);
            }
            ControlVariant::Kinematic => {
                bb.push(off.gamma(0, node), col(0, dof), nx * v);
                bb.push(off.gamma(1, node), col(0, dof), ny * v);
                let trac = strategy.boundary_traction(nrm);
                for (c, w) in trac.iter().enumerate() {
                    bb.push(off.kappa(c, node), col(1, dof), w[0] * v);
                    bb.push(off.kappa(c, node), col(2, dof), w[1] * v);
                }
            }
        }
    });

    let mut ports = Vec::with_capacity(m_ports);
    for component in PortComponent::ALL {
        let quantity = PortQuantity::of(variant, component);
        for d in &trace.dofs {
            ports.push(PortInfo {
                label: port_label(quantity, d.tag, d.side, d.node),
                tag: d.tag,
                side: d.side,
                node: d.node,
                arc: d.arc,
                component,
                quantity,
            });
        }
    }
    let labels = ports.iter().map(|p| p.label.clone()).collect();

    let curv = strategy.curvature_names();
    let names = [
        VELOCITY_FIELDS[0],
        VELOCITY_FIELDS[1],
        VELOCITY_FIELDS[2],
        curv[0],
        curv[1],
        curv[2],
        SHEAR_FIELDS[0],
        SHEAR_FIELDS[1],
    ];
    let sizes = [off.nv, off.nv, off.nv, off.ns, off.ns, off.ns, off.ns, off.ns];
    let layout = BlockLayout::from_sizes(&names, &sizes);
    let system = make_phsystem(mb.build(), qb.build(), jb.build(), bb.build(), labels, layout)?;

    let mut control_tags = tags.to_vec();
    control_tags.sort_unstable();
    control_tags.dedup();
    Ok(AssembledPlate {
        system,
        formulation: kind,
        variant,
        spaces,
        ports,
        trace,
        mesh: mesh.clone(),
        control_tags,
        n_velocity: off.nv,
        n_strain: off.ns,
    })
}

/// A smooth field per state block, evaluated at points.
pub type FieldFn<'a> = &'a dyn Fn(Point) -> f64;

impl AssembledPlate {
    pub fn n_velocity(&self) -> usize {
        self.n_velocity
    }

    pub fn n_strain(&self) -> usize {
        self.n_strain
    }

    pub fn velocity_range(&self) -> Range<usize> {
        0..3 * self.n_velocity
    }

    pub fn strain_range(&self) -> Range<usize> {
        3 * self.n_velocity..self.system.dim()
    }

    /// Ranges of the four field groups `(w, theta, curvature, shear)`.
    pub fn field_groups(&self) -> [Range<usize>; 4] {
        let (nv, ns) = (self.n_velocity, self.n_strain);
        [0..nv, nv..3 * nv, 3 * nv..3 * nv + 3 * ns, 3 * nv + 3 * ns..3 * nv + 5 * ns]
    }

    /// Nodal interpolation of the eight block fields (centroid values for
    /// piecewise constants), in stored coordinates.
    pub fn interpolate(&self, fields: [FieldFn<'_>; 8]) -> Vec<f64> {
        let mut a = Vec::with_capacity(self.system.dim());
        for f in &fields[..3] {
            a.extend(self.mesh.nodes().iter().map(|p| f(*p)));
        }
        let strain_points: Vec<Point> = match self.spaces.strain {
            ScalarFamily::P1 => self.mesh.nodes().to_vec(),
            ScalarFamily::P0 => (0..self.mesh.num_triangles())
                .map(|t| {
                    let p = self.mesh.triangle_points(t);
                    [(p[0][0] + p[1][0] + p[2][0]) / 3.0, (p[0][1] + p[1][1] + p[2][1]) / 3.0]
                })
                .collect(),
        };
        for f in &fields[3..] {
            a.extend(strain_points.iter().map(|p| f(*p)));
        }
        a
    }

    /// Stored coordinates to engineering-curvature coordinates.
    pub fn to_engineering(&self, a: &[f64]) -> Vec<f64> {
        self.rescale_curvature(a, false)
    }

    /// Engineering-curvature coordinates to stored coordinates.
    pub fn from_engineering(&self, a: &[f64]) -> Vec<f64> {
        self.rescale_curvature(a, true)
    }

    fn rescale_curvature(&self, a: &[f64], inverse: bool) -> Vec<f64> {
        let scale = formulation(self.formulation).engineering_scale();
        let mut out = a.to_vec();
        let start = 3 * self.n_velocity;
        for (c, s) in scale.iter().enumerate() {
            let r = start + c * self.n_strain..start + (c + 1) * self.n_strain;
            for v in &mut out[r] {
                *v = if inverse { *v / s } else { *v * s };
            }
        }
        out
    }

    /// Pure first-order derivative blocks of `J_d`, named `row/col`.
    pub fn derivative_blocks(&self) -> Vec<(String, CsrMatrix)> {
        let layout = self.system.layout();
        let names: Vec<String> = layout.names().map(str::to_string).collect();
        let pairs: [(usize, usize); 6] = match self.variant {
            ControlVariant::Dynamic => [(3, 1), (4, 2), (5, 1), (5, 2), (6, 0), (7, 0)],
            ControlVariant::Kinematic => [(1, 3), (1, 5), (2, 4), (2, 5), (0, 6), (0, 7)],
        };
        pairs
            .iter()
            .map(|&(r, c)| {
                let rr = layout.blocks[r].1.clone();
                let cr = layout.blocks[c].1.clone();
                (
                    format!("{}/{}", names[r], names[c]),
                    self.system.interconnection().block(rr, cr),
                )
            })
            .collect()
    }
}

impl PortedSystem for AssembledPlate {
    fn system(&self) -> &PHSystem {
        &self.system
    }

    fn ports(&self) -> &[PortInfo] {
        &self.ports
    }

    fn control_variant(&self) -> ControlVariant {
        self.variant
    }

    fn boundary_tags(&self) -> Vec<i64> {
        self.mesh.boundary_tags()
    }

    fn momentum_dim(&self) -> usize {
        3 * self.n_velocity
    }

    fn derivative_blocks(&self) -> Vec<(String, CsrMatrix)> {
        AssembledPlate::derivative_blocks(self)
    }
}

/// Scalar reference blocks assembled directly from closed-form P1 element
/// matrices: velocity mass, strain mass, and `int psi_s d(phi_v)/dx`,
/// `int psi_s d(phi_v)/dy`, `int psi_s phi_v`.
#[derive(Debug, Clone)]
pub struct ScalarBlocks {
    pub mass_v: CsrMatrix,
    pub mass_s: CsrMatrix,
    pub dx: CsrMatrix,
    pub dy: CsrMatrix,
    pub d0: CsrMatrix,
}

pub fn scalar_blocks(mesh: &Mesh2D, strain: ScalarFamily) -> Result<ScalarBlocks> {
    let nv = mesh.num_nodes();
    let ns = strain.dim(mesh);
    let mut mv = TripletBuilder::new(nv, nv);
    let mut ms = TripletBuilder::new(ns, ns);
    let mut dx = TripletBuilder::new(ns, nv);
    let mut dy = TripletBuilder::new(ns, nv);
    let mut d0 = TripletBuilder::new(ns, nv);
    for t in 0..mesh.num_triangles() {
        let tri = P1Triangle::new(mesh, t)?;
        let area = tri.area;
        let vd = tri.nodes;
        for a in 0..3 {
            for b in 0..3 {
                let m = area / 12.0 * if a == b { 2.0 } else { 1.0 };
                mv.push(vd[a], vd[b], m);
                if strain == ScalarFamily::P1 {
                    ms.push(vd[a], vd[b], m);
                    d0.push(vd[a], vd[b], m);
                    dx.push(vd[a], vd[b], area / 3.0 * tri.grads[b][0]);
                    dy.push(vd[a], vd[b], area / 3.0 * tri.grads[b][1]);
                }
            }
        }
        if strain == ScalarFamily::P0 {
            ms.push(t, t, area);
            for b in 0..3 {
                d0.push(t, vd[b], area / 3.0);
                dx.push(t, vd[b], area * tri.grads[b][0]);
                dy.push(t, vd[b], area * tri.grads[b][1]);
            }
        }
    }
    Ok(ScalarBlocks {
        mass_v: mv.build(),
        mass_s: ms.build(),
        dx: dx.build(),
        dy: dy.build(),
        d0: d0.build(),
    })
}

#[cfg(test)]
mod tests;
