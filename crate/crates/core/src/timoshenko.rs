//! Timoshenko beam as a port-Hamiltonian system on continuous P1 elements.
//!
//! Fields `w, phi` (momenta) and `kappa, gamma` (strains). End tags are
//! [`Mesh1D::LEFT_TAG`] at the first node and [`Mesh1D::RIGHT_TAG`] at the last.

use std::ops::Range;

use crate::error::Result;
use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::material::BeamMaterial;
use crate::mesh::Mesh1D;
use crate::phcore::{make_phsystem, BlockLayout, PHSystem};
use crate::ports::{port_label, ControlVariant, PortComponent, PortInfo, PortQuantity, PortedSystem};

pub const BEAM_FIELDS: [&str; 4] = ["w", "phi", "kappa", "gamma"];

#[derive(Debug, Clone)]
pub struct AssembledBeam {
    pub system: PHSystem,
    pub variant: ControlVariant,
    pub ports: Vec<PortInfo>,
    pub mesh: Mesh1D,
    pub material: BeamMaterial,
}

fn push_skew(j: &mut TripletBuilder, r: usize, c: usize, v: f64) {
    if v != 0.0 {
        j.push(r, c, v);
        j.push(c, r, -v);
    }
}

pub fn assemble_beam(mesh: &Mesh1D, material: &BeamMaterial, variant: ControlVariant) -> Result<AssembledBeam> {
    material.validate(Some(mesh.num_elements()))?;
    let nn = mesh.num_nodes();
    let n = 4 * nn;
    let field = |f: usize, i: usize| f * nn + i;
    let (w, phi, kappa, gamma) = (0, 1, 2, 3);
    let mut mb = TripletBuilder::new(n, n);
    let mut qb = TripletBuilder::new(n, n);
    let mut jb = TripletBuilder::new(n, n);
    // int psi_a d(phi_b)/dx on any element
    let slope = [-0.5, 0.5];

    for e in 0..mesh.num_elements() {
        let le = mesh.element_length(e);
        let nodes = mesh.element(e);
        let coef = [
            1.0 / material.rho_a.at(e),
            1.0 / material.rho_i.at(e),
            material.ei.at(e),
            material.shear.at(e),
        ];
        for a in 0..2 {
            for b in 0..2 {
                let m = le / 6.0 * if a == b { 2.0 } else { 1.0 };
                for f in 0..4 {
                    mb.push(field(f, nodes[a]), field(f, nodes[b]), m);
                    qb.push(field(f, nodes[a]), field(f, nodes[b]), coef[f] * m);
                }
                let (ra, cb) = (nodes[a], nodes[b]);
                match variant {
                    ControlVariant::Dynamic => {
                        push_skew(&mut jb, field(kappa, ra), field(phi, cb), slope[b]);
                        push_skew(&mut jb, field(gamma, ra), field(w, cb), slope[b]);
                        push_skew(&mut jb, field(gamma, ra), field(phi, cb), -m);
                    }
                    ControlVariant::Kinematic => {
                        push_skew(&mut jb, field(w, ra), field(gamma, cb), slope[b]);
                        push_skew(&mut jb, field(phi, ra), field(kappa, cb), slope[b]);
                        push_skew(&mut jb, field(phi, ra), field(gamma, cb), m);
                    }
                }
            }
        }
    }

    let last = nn - 1;
    let ends = [(0usize, mesh.left_tag(), 0usize, -1.0), (last, mesh.right_tag(), 1, 1.0)];
    let mut bb = TripletBuilder::new(n, 4);
    let mut ports = Vec::with_capacity(4);
    for (end, &(node, tag, side, sign)) in ends.iter().enumerate() {
        for (k, component) in [PortComponent::Translation, PortComponent::NormalRotation]
            .into_iter()
            .enumerate()
        {
            let col = 2 * end + k;
            match variant {
                ControlVariant::Dynamic => bb.push(field(k, node), col, 1.0),
                ControlVariant::Kinematic => bb.push(field(if k == 0 { gamma } else { kappa }, node), col, sign),
            }
            let quantity = PortQuantity::of(variant, component);
            ports.push(PortInfo {
                label: port_label(quantity, tag, side, node),
                tag,
                side,
                node,
                arc: 0.0,
                component,
                quantity,
            });
        }
    }
    let labels = ports.iter().map(|p| p.label.clone()).collect();
    let layout = BlockLayout::from_sizes(&BEAM_FIELDS, &[nn; 4]);
    let system = make_phsystem(mb.build(), qb.build(), jb.build(), bb.build(), labels, layout)?;
    Ok(AssembledBeam {
        system,
        variant,
        ports,
        mesh: mesh.clone(),
        material: material.clone(),
    })
}

impl AssembledBeam {
    /// Ranges of `(w, phi, kappa, gamma)`.
    pub fn field_groups(&self) -> [Range<usize>; 4] {
        let nn = self.mesh.num_nodes();
        [0..nn, nn..2 * nn, 2 * nn..3 * nn, 3 * nn..4 * nn]
    }

    pub fn interpolate(&self, fields: [&dyn Fn(f64) -> f64; 4]) -> Vec<f64> {
        fields
            .iter()
            .flat_map(|f| self.mesh.nodes().iter().map(move |&x| f(x)))
            .collect()
    }

    /// Pure first-order derivative blocks of `J_d`, named `row/col`.
    pub fn derivative_blocks(&self) -> Vec<(String, CsrMatrix)> {
        let g = self.field_groups();
        let pairs: [(usize, usize); 2] = match self.variant {
            ControlVariant::Dynamic => [(2, 1), (3, 0)],
            ControlVariant::Kinematic => [(0, 3), (1, 2)],
        };
        pairs
            .iter()
            .map(|&(r, c)| {
                (
                    format!("{}/{}", BEAM_FIELDS[r], BEAM_FIELDS[c]),
                    self.system.interconnection().block(g[r].clone(), g[c].clone()),
                )
            })
            .collect()
    }
}

impl PortedSystem for AssembledBeam {
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
        vec![self.mesh.left_tag(), self.mesh.right_tag()]
    }

    fn momentum_dim(&self) -> usize {
        2 * self.mesh.num_nodes()
    }

    fn derivative_blocks(&self) -> Vec<(String, CsrMatrix)> {
        AssembledBeam::derivative_blocks(self)
    }
}
