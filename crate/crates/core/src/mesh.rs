//! Triangular meshes in 2D and interval meshes in 1D.
//!
//! The text format is line oriented:
//!
//! ```text
//! phmesh 1
//! nodes N
//! x y            (N lines)
//! triangles T
//! i j k          (T lines, 0-based, counterclockwise)
//! boundary E
//! i j tag        (E lines)
//! ```
//!
//! Blank lines and `#` comments are ignored.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub nodes: [usize; 2],
    pub tag: i64,
    /// Outward unit normal.
    pub normal: [f64; 2],
    /// Unit tangent `(-n_y, n_x)`.
    pub tangent: [f64; 2],
    pub length: f64,
    /// Index of the unique triangle containing this edge.
    pub triangle: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MeshOptions {
    /// Reorient clockwise triangles instead of rejecting them.
    pub fix_orientation: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh2D {
    nodes: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<BoundaryEdge>,
    repaired: Vec<usize>,
}

fn signed_area(p: &[Point; 3]) -> f64 {
    0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]))
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl Mesh2D {
    pub fn new(
        nodes: Vec<Point>,
        mut triangles: Vec<[usize; 3]>,
        boundary: Vec<([usize; 2], i64)>,
        options: MeshOptions,
    ) -> Result<Self> {
        for (i, p) in nodes.iter().enumerate() {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(Error::MeshTopology {
                    entity: "node",
                    index: i,
                    message: "non-finite coordinate".into(),
                });
            }
        }
        let n = nodes.len();
        let mut repaired = Vec::new();
        for (t, tri) in triangles.iter_mut().enumerate() {
            if tri.iter().any(|&v| v >= n) {
                return Err(Error::MeshTopology {
                    entity: "triangle",
                    index: t,
                    message: format!("node index out of range (have {n} nodes)"),
                });
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::MeshTopology {
                    entity: "triangle",
                    index: t,
                    message: "repeated vertex".into(),
                });
            }
            let area = signed_area(&[nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]]);
            if area == 0.0 {
                return Err(Error::MeshTopology {
                    entity: "triangle",
                    index: t,
                    message: "degenerate triangle (zero area)".into(),
                });
            }
            if area < 0.0 {
                if options.fix_orientation {
                    tri.swap(1, 2);
                    repaired.push(t);
                } else {
                    return Err(Error::MeshTopology {
                        entity: "triangle",
                        index: t,
                        message: "inverted triangle (clockwise ordering)".into(),
                    });
                }
            }
        }

        let mut edge_owner: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                edge_owner.entry(edge_key(tri[k], tri[(k + 1) % 3])).or_default().push(t);
            }
        }
        if let Some((_, owners)) = edge_owner.iter().find(|(_, o)| o.len() > 2) {
            return Err(Error::MeshTopology {
                entity: "triangle",
                index: owners[2],
                message: "edge shared by more than two triangles".into(),
            });
        }

        let mut seen = BTreeSet::new();
        let mut edges = Vec::with_capacity(boundary.len());
        for (e, &([a, b], tag)) in boundary.iter().enumerate() {
            if a >= n || b >= n || a == b {
                return Err(Error::MeshTopology {
                    entity: "boundary edge",
                    index: e,
                    message: "invalid node indices".into(),
                });
            }
            let key = edge_key(a, b);
            if !seen.insert(key) {
                return Err(Error::MeshTopology {
                    entity: "boundary edge",
                    index: e,
                    message: "duplicate boundary edge".into(),
                });
            }
            let owners = edge_owner.get(&key).map(Vec::as_slice).unwrap_or(&[]);
            let triangle = match owners {
                [t] => *t,
                [] => {
                    return Err(Error::MeshTopology {
                        entity: "boundary edge",
                        index: e,
                        message: "dangling edge (not part of any triangle)".into(),
                    })
                }
                _ => {
                    return Err(Error::MeshTopology {
                        entity: "boundary edge",
                        index: e,
                        message: "interior edge listed as boundary".into(),
                    })
                }
            };
            edges.push(Self::orient_edge(&nodes, &triangles[triangle], [a, b], tag, triangle));
        }
        if let Some((&(a, b), owners)) = edge_owner.iter().find(|(k, o)| o.len() == 1 && !seen.contains(*k)) {
            return Err(Error::MeshTopology {
                entity: "triangle",
                index: owners[0],
                message: format!("boundary edge ({a}, {b}) is missing from the boundary list"),
            });
        }

        let mut degree = vec![0usize; n];
        for e in &edges {
            degree[e.nodes[0]] += 1;
            degree[e.nodes[1]] += 1;
        }
        if let Some(v) = degree.iter().position(|&d| d % 2 == 1) {
            return Err(Error::MeshTopology {
                entity: "node",
                index: v,
                message: "boundary is not closed (odd edge degree)".into(),
            });
        }

        Ok(Self {
            nodes,
            triangles,
            boundary: edges,
            repaired,
        })
    }

    fn orient_edge(nodes: &[Point], tri: &[usize; 3], pair: [usize; 2], tag: i64, triangle: usize) -> BoundaryEdge {
        let pa = nodes[pair[0]];
        let pb = nodes[pair[1]];
        let t = [pb[0] - pa[0], pb[1] - pa[1]];
        let length = t[0].hypot(t[1]);
        let mut normal = [t[1] / length, -t[0] / length];
        let centroid = [
            (nodes[tri[0]][0] + nodes[tri[1]][0] + nodes[tri[2]][0]) / 3.0,
            (nodes[tri[0]][1] + nodes[tri[1]][1] + nodes[tri[2]][1]) / 3.0,
        ];
        let mid = [0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])];
        if normal[0] * (mid[0] - centroid[0]) + normal[1] * (mid[1] - centroid[1]) < 0.0 {
            normal = [-normal[0], -normal[1]];
        }
        BoundaryEdge {
            nodes: pair,
            tag,
            normal,
            tangent: [-normal[1], normal[0]],
            length,
            triangle,
        }
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[BoundaryEdge] {
        &self.boundary
    }

    /// Triangles whose orientation was flipped under `fix_orientation`.
    pub fn repaired_triangles(&self) -> &[usize] {
        &self.repaired
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        let tri = self.triangles[t];
        [self.nodes[tri[0]], self.nodes[tri[1]], self.nodes[tri[2]]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        signed_area(&self.triangle_points(t))
    }

    pub fn total_area(&self) -> f64 {
        (0..self.triangles.len()).map(|t| self.triangle_area(t)).sum()
    }

    /// `(xmin, xmax, ymin, ymax)`
    pub fn extents(&self) -> (f64, f64, f64, f64) {
        self.nodes.iter().fold(
            (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY),
            |(x0, x1, y0, y1), p| (x0.min(p[0]), x1.max(p[0]), y0.min(p[1]), y1.max(p[1])),
        )
    }

    pub fn boundary_tags(&self) -> Vec<i64> {
        let tags: BTreeSet<i64> = self.boundary.iter().map(|e| e.tag).collect();
        tags.into_iter().collect()
    }

    /// Sorted unique nodes lying on any boundary edge carrying one of `tags`.
    pub fn boundary_nodes_by_tag(&self, tags: &[i64]) -> Result<Vec<usize>> {
        if tags.is_empty() {
            return Err(Error::InvalidParameter("empty tag selection".into()));
        }
        let known = self.boundary_tags();
        if let Some(&t) = tags.iter().find(|t| !known.contains(t)) {
            return Err(Error::UnknownTag(t));
        }
        let set: BTreeSet<usize> = self
            .boundary
            .iter()
            .filter(|e| tags.contains(&e.tag))
            .flat_map(|e| e.nodes)
            .collect();
        Ok(set.into_iter().collect())
    }

    /// Area enclosed by the boundary loops, via the shoelace formula over
    /// outward-oriented edges.
    pub fn boundary_polygon_area(&self) -> f64 {
        self.boundary
            .iter()
            .map(|e| {
                let (a, b) = self.oriented_ccw(e);
                0.5 * (a[0] * b[1] - b[0] * a[1])
            })
            .sum()
    }

    /// Edge endpoints ordered so the domain lies to the left.
    pub fn oriented_ccw(&self, e: &BoundaryEdge) -> (Point, Point) {
        let pa = self.nodes[e.nodes[0]];
        let pb = self.nodes[e.nodes[1]];
        let t = [pb[0] - pa[0], pb[1] - pa[1]];
        // counterclockwise traversal has the outward normal on the right: t x n < 0
        if t[0] * e.normal[1] - t[1] * e.normal[0] < 0.0 {
            (pa, pb)
        } else {
            (pb, pa)
        }
    }

    /// Splits every triangle into four through its edge midpoints. Boundary
    /// tags are inherited by the two halves of each boundary edge.
    pub fn refine_uniform(&self) -> Result<Self> {
        let mut nodes = self.nodes.clone();
        let mut mid: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        let mut midpoint = |a: usize, b: usize, nodes: &mut Vec<Point>| -> usize {
            *mid.entry(edge_key(a, b)).or_insert_with(|| {
                let (pa, pb) = (nodes[a], nodes[b]);
                nodes.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                nodes.len() - 1
            })
        };
        let mut triangles = Vec::with_capacity(4 * self.triangles.len());
        for &[i, j, k] in &self.triangles {
            let ij = midpoint(i, j, &mut nodes);
            let jk = midpoint(j, k, &mut nodes);
            let ki = midpoint(k, i, &mut nodes);
            triangles.push([i, ij, ki]);
            triangles.push([ij, j, jk]);
            triangles.push([ki, jk, k]);
            triangles.push([ij, jk, ki]);
        }
        let mut boundary = Vec::with_capacity(2 * self.boundary.len());
        for e in &self.boundary {
            let [a, b] = e.nodes;
            let m = midpoint(a, b, &mut nodes);
            boundary.push(([a, m], e.tag));
            boundary.push(([m, b], e.tag));
        }
        Self::new(nodes, triangles, boundary, MeshOptions::default())
    }

    /// Relabels nodes: new index of old node `i` is `perm[i]`.
    pub fn permute_nodes(&self, perm: &[usize]) -> Result<Self> {
        let n = self.nodes.len();
        let mut check = perm.to_vec();
        check.sort_unstable();
        if perm.len() != n || check.iter().enumerate().any(|(i, &p)| i != p) {
            return Err(Error::InvalidParameter("node permutation is not a bijection".into()));
        }
        let mut nodes = vec![[0.0; 2]; n];
        for (i, p) in self.nodes.iter().enumerate() {
            nodes[perm[i]] = *p;
        }
        let triangles = self.triangles.iter().map(|t| [perm[t[0]], perm[t[1]], perm[t[2]]]).collect();
        let boundary = self
            .boundary
            .iter()
            .map(|e| ([perm[e.nodes[0]], perm[e.nodes[1]]], e.tag))
            .collect();
        Self::new(nodes, triangles, boundary, MeshOptions::default())
    }

    /// Text form accepted by [`parse_mesh2d`]; floats use the shortest
    /// representation that round-trips exactly.
    pub fn serialize(&self) -> String {
        let mut s = String::from("phmesh 1\n");
        s.push_str(&format!("nodes {}\n", self.nodes.len()));
        for p in &self.nodes {
            s.push_str(&format!("{:?} {:?}\n", p[0], p[1]));
        }
        s.push_str(&format!("triangles {}\n", self.triangles.len()));
        for t in &self.triangles {
            s.push_str(&format!("{} {} {}\n", t[0], t[1], t[2]));
        }
        s.push_str(&format!("boundary {}\n", self.boundary.len()));
        for e in &self.boundary {
            s.push_str(&format!("{} {} {}\n", e.nodes[0], e.nodes[1], e.tag));
        }
        s
    }
}

struct LineReader<'a> {
    lines: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

impl<'a> LineReader<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            lines: text.lines().enumerate().peekable(),
        }
    }

    /// Next non-blank line with comments stripped, as `(line_number, tokens)`.
    fn next_tokens(&mut self) -> Option<(usize, Vec<&'a str>)> {
        for (i, raw) in self.lines.by_ref() {
            let content = raw.split('#').next().unwrap_or("");
            let toks: Vec<&str> = content.split_whitespace().collect();
            if !toks.is_empty() {
                return Some((i + 1, toks));
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<(usize, Vec<&'a str>)> {
        self.next_tokens().ok_or_else(|| Error::MeshSyntax {
            line: 0,
            message: format!("unexpected end of file, expected {what}"),
        })
    }

    fn section(&mut self, keyword: &str) -> Result<usize> {
        let (line, toks) = self.expect(keyword)?;
        match toks.as_slice() {
            [k, count] if *k == keyword => count.parse().map_err(|_| Error::MeshSyntax {
                line,
                message: format!("invalid {keyword} count {count:?}"),
            }),
            _ => Err(Error::MeshSyntax {
                line,
                message: format!("expected `{keyword} <count>`"),
            }),
        }
    }
}

fn parse_field<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse().map_err(|_| Error::MeshSyntax {
        line,
        message: format!("invalid {what} {tok:?}"),
    })
}

pub fn parse_mesh2d(text: &str, options: MeshOptions) -> Result<Mesh2D> {
    let mut reader = LineReader::new(text);
    let (line, header) = reader.expect("header")?;
    if header != ["phmesh", "1"] {
        return Err(Error::MeshSyntax {
            line,
            message: "expected header `phmesh 1`".into(),
        });
    }

    let count = reader.section("nodes")?;
    let mut nodes = Vec::with_capacity(count);
    for _ in 0..count {
        let (line, toks) = reader.expect("node coordinates")?;
        if toks.len() != 2 {
            return Err(Error::MeshSyntax {
                line,
                message: "expected `x y`".into(),
            });
        }
        nodes.push([
            parse_field(toks[0], line, "coordinate")?,
            parse_field(toks[1], line, "coordinate")?,
        ]);
    }

    let count = reader.section("triangles")?;
    let mut triangles = Vec::with_capacity(count);
    for _ in 0..count {
        let (line, toks) = reader.expect("triangle")?;
        if toks.len() != 3 {
            return Err(Error::MeshSyntax {
                line,
                message: "expected `i j k`".into(),
            });
        }
        triangles.push([
            parse_field(toks[0], line, "node index")?,
            parse_field(toks[1], line, "node index")?,
            parse_field(toks[2], line, "node index")?,
        ]);
    }

    let count = reader.section("boundary")?;
    let mut boundary = Vec::with_capacity(count);
    for _ in 0..count {
        let (line, toks) = reader.expect("boundary edge")?;
        if toks.len() != 3 {
            return Err(Error::MeshSyntax {
                line,
                message: "expected `i j tag`".into(),
            });
        }
        boundary.push((
            [
                parse_field(toks[0], line, "node index")?,
                parse_field(toks[1], line, "node index")?,
            ],
            parse_field(toks[2], line, "tag")?,
        ));
    }
    if let Some((line, _)) = reader.next_tokens() {
        return Err(Error::MeshSyntax {
            line,
            message: "trailing content after boundary section".into(),
        });
    }
    Mesh2D::new(nodes, triangles, boundary, options)
}

/// Rectangle `[0,a] x [0,b]` with `nx * ny` cells, each split along the
/// diagonal from its lower-left corner. Tags: 1 south, 2 east, 3 north, 4 west.
pub fn structured_rectangle(a: f64, b: f64, nx: usize, ny: usize) -> Result<Mesh2D> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "rectangle sides must be positive, got {a} x {b}"
        )));
    }
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidParameter(
            "rectangle needs at least one cell per direction".into(),
        ));
    }
    let idx = |i: usize, j: usize| j * (nx + 1) + i;
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([a * i as f64 / nx as f64, b * j as f64 / ny as f64]);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (n0, n1, n2, n3) = (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
            triangles.push([n0, n1, n2]);
            triangles.push([n0, n2, n3]);
        }
    }
    let mut boundary = Vec::with_capacity(2 * (nx + ny));
    for i in 0..nx {
        boundary.push(([idx(i, 0), idx(i + 1, 0)], 1));
    }
    for j in 0..ny {
        boundary.push(([idx(nx, j), idx(nx, j + 1)], 2));
    }
    for i in (0..nx).rev() {
        boundary.push(([idx(i + 1, ny), idx(i, ny)], 3));
    }
    for j in (0..ny).rev() {
        boundary.push(([idx(0, j + 1), idx(0, j)], 4));
    }
    Mesh2D::new(nodes, triangles, boundary, MeshOptions::default())
}

/// Interval mesh with boundary point tags at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    nodes: Vec<f64>,
    left_tag: i64,
    right_tag: i64,
}

impl Mesh1D {
    pub const LEFT_TAG: i64 = 1;
    pub const RIGHT_TAG: i64 = 2;

    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidParameter("interval mesh needs at least two nodes".into()));
        }
        if let Some(i) = nodes.iter().position(|x| !x.is_finite()) {
            return Err(Error::MeshTopology {
                entity: "node",
                index: i,
                message: "non-finite coordinate".into(),
            });
        }
        if let Some(i) = nodes.windows(2).position(|w| w[1] <= w[0]) {
            return Err(Error::MeshTopology {
                entity: "node",
                index: i + 1,
                message: "nodes must be strictly increasing".into(),
            });
        }
        Ok(Self {
            nodes,
            left_tag: Self::LEFT_TAG,
            right_tag: Self::RIGHT_TAG,
        })
    }

    pub fn uniform(length: f64, elements: usize) -> Result<Self> {
        if !(length > 0.0) || elements == 0 {
            return Err(Error::InvalidParameter(format!(
                "uniform interval needs positive length and elements, got {length}, {elements}"
            )));
        }
        Self::new((0..=elements).map(|i| length * i as f64 / elements as f64).collect())
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn num_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn num_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn element(&self, e: usize) -> [usize; 2] {
        [e, e + 1]
    }

    pub fn element_length(&self, e: usize) -> f64 {
        self.nodes[e + 1] - self.nodes[e]
    }

    pub fn length(&self) -> f64 {
        self.nodes[self.nodes.len() - 1] - self.nodes[0]
    }

    pub fn left_tag(&self) -> i64 {
        self.left_tag
    }

    pub fn right_tag(&self) -> i64 {
        self.right_tag
    }
}
