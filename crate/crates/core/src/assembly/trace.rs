//! Boundary trace space: straight runs of tagged edges ("sides") carrying
//! the restriction of the nodal P1 basis.

use std::collections::BTreeMap;

use serde::Serialize;

use super::element::{EDGE_POINTS, EDGE_WEIGHTS};
use crate::error::{Error, Result};
use crate::mesh::Mesh2D;

const PARALLEL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Side {
    pub tag: i64,
    pub normal: [f64; 2],
    /// Boundary edge indices, ordered along the side.
    pub edges: Vec<usize>,
    /// Nodes ordered along the side.
    pub nodes: Vec<usize>,
    pub arc: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceDof {
    pub side: usize,
    pub node: usize,
    pub tag: i64,
    pub arc: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceSpace {
    pub sides: Vec<Side>,
    pub dofs: Vec<TraceDof>,
    /// `(side, node) -> dof index`
    #[serde(skip)]
    index: BTreeMap<(usize, usize), usize>,
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

impl TraceSpace {
    pub fn new(mesh: &Mesh2D, tags: &[i64]) -> Result<Self> {
        if tags.is_empty() {
            return Err(Error::InvalidParameter("empty boundary tag selection".into()));
        }
        let known = mesh.boundary_tags();
        if let Some(&t) = tags.iter().find(|t| !known.contains(t)) {
            return Err(Error::UnknownTag(t));
        }
        let edges = mesh.boundary_edges();
        let selected: Vec<usize> = (0..edges.len()).filter(|&e| tags.contains(&edges[e].tag)).collect();

        let mut parent: Vec<usize> = (0..selected.len()).collect();
        let mut by_node: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (k, &e) in selected.iter().enumerate() {
            for v in edges[e].nodes {
                by_node.entry(v).or_default().push(k);
            }
        }
        for group in by_node.values() {
            for (x, &a) in group.iter().enumerate() {
                for &b in &group[x + 1..] {
                    let (ea, eb) = (&edges[selected[a]], &edges[selected[b]]);
                    let parallel = (ea.normal[0] - eb.normal[0]).abs() <= PARALLEL_TOL
                        && (ea.normal[1] - eb.normal[1]).abs() <= PARALLEL_TOL;
                    if ea.tag == eb.tag && parallel {
                        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                        if ra != rb {
                            parent[ra.max(rb)] = ra.min(rb);
                        }
                    }
                }
            }
        }
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for k in 0..selected.len() {
            let root = find(&mut parent, k);
            groups.entry(root).or_default().push(selected[k]);
        }

        let mut sides = Vec::with_capacity(groups.len());
        for members in groups.into_values() {
            sides.push(Self::order_side(mesh, members));
        }
        let mut dofs = Vec::new();
        let mut index = BTreeMap::new();
        for (s, side) in sides.iter().enumerate() {
            for (&node, &arc) in side.nodes.iter().zip(&side.arc) {
                index.insert((s, node), dofs.len());
                dofs.push(TraceDof {
                    side: s,
                    node,
                    tag: side.tag,
                    arc,
                });
            }
        }
        Ok(Self { sides, dofs, index })
    }

    fn order_side(mesh: &Mesh2D, members: Vec<usize>) -> Side {
        let edges = mesh.boundary_edges();
        let mut adjacency: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for &e in &members {
            for v in edges[e].nodes {
                adjacency.entry(v).or_default().push(e);
            }
        }
        let start = adjacency
            .iter()
            .find(|(_, es)| es.len() == 1)
            .map(|(&v, _)| v)
            .unwrap_or_else(|| *adjacency.keys().next().expect("side has edges"));
        let mut nodes = vec![start];
        let mut arc = vec![0.0];
        let mut ordered = Vec::with_capacity(members.len());
        let mut current = start;
        let mut used = vec![false; members.len()];
        while ordered.len() < members.len() {
            let next = members
                .iter()
                .enumerate()
                .find(|(k, &e)| !used[*k] && edges[e].nodes.contains(&current));
            let Some((k, &e)) = next else { break };
            used[k] = true;
            ordered.push(e);
            let other = if edges[e].nodes[0] == current {
                edges[e].nodes[1]
            } else {
                edges[e].nodes[0]
            };
            arc.push(arc[arc.len() - 1] + edges[e].length);
            nodes.push(other);
            current = other;
        }
        // a closed run revisits its start node
        if nodes.len() > 1 && nodes[nodes.len() - 1] == nodes[0] {
            nodes.pop();
            arc.pop();
        }
        let first = &edges[members[0]];
        Side {
            tag: first.tag,
            normal: first.normal,
            edges: ordered,
            nodes,
            arc,
        }
    }

    pub fn len(&self) -> usize {
        self.dofs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dofs.is_empty()
    }

    pub fn dof(&self, side: usize, node: usize) -> Option<usize> {
        self.index.get(&(side, node)).copied()
    }

    /// Calls `f(edge, node_i, dof_k, normal, value)` with
    /// `value = int_edge phi_i psi_k ds` for every edge of every side.
    pub fn for_each_edge_mass(&self, mesh: &Mesh2D, mut f: impl FnMut(usize, usize, usize, [f64; 2], f64)) {
        let edges = mesh.boundary_edges();
        for (s, side) in self.sides.iter().enumerate() {
            for &e in &side.edges {
                let edge = &edges[e];
                let mut local = [[0.0; 2]; 2];
                for (t, w) in EDGE_POINTS.iter().zip(EDGE_WEIGHTS) {
                    let phi = [1.0 - t, *t];
                    for a in 0..2 {
                        for b in 0..2 {
                            local[a][b] += w * edge.length * phi[a] * phi[b];
                        }
                    }
                }
                for a in 0..2 {
                    for b in 0..2 {
                        let dof = self.index[&(s, edge.nodes[b])];
                        f(e, edge.nodes[a], dof, edge.normal, local[a][b]);
                    }
                }
            }
        }
    }
}
