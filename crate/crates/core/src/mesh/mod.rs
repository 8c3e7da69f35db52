//! Conforming triangulations of polygonal 2D domains.
//!
//! A [`TriMesh`] is immutable once built: vertex coordinates, counter-clockwise
//! triangles, sorted edge list, boundary markers, vertex adjacency, incident
//! triangles (macroelements) and the symmetric nodes used by the shock detector.

mod generate;
mod io;
mod refine;
mod symmetric;

pub use generate::{generate_disc_mesh, make_delaunay};
pub use io::{mesh_from_str, mesh_to_string, read_mesh, write_mesh};
pub use refine::{refine_region, refine_region_until};
pub use symmetric::{SymNode, SymNodeReport};

use crate::error::{Error, Result};

/// A point in the plane.
pub type Point = [f64; 2];

#[inline]
pub(crate) fn sub(a: Point, b: Point) -> Point {
    [a[0] - b[0], a[1] - b[1]]
}

#[inline]
pub(crate) fn cross(a: Point, b: Point) -> f64 {
    a[0] * b[1] - a[1] * b[0]
}

#[inline]
pub(crate) fn dot(a: Point, b: Point) -> f64 {
    a[0] * b[0] + a[1] * b[1]
}

#[inline]
pub(crate) fn norm(a: Point) -> f64 {
    a[0].hypot(a[1])
}

#[inline]
pub fn dist(a: Point, b: Point) -> f64 {
    norm(sub(a, b))
}

/// Orders triangles by barycenter (`y`, then `x`), so the lowest-index
/// triangle incident to a vertex lies on its lower side everywhere.
pub(crate) fn sort_by_barycenter(vertices: &[Point], triangles: &mut [[usize; 3]]) {
    let key = |t: &[usize; 3]| {
        let y: f64 = t.iter().map(|&v| vertices[v][1]).sum();
        let x: f64 = t.iter().map(|&v| vertices[v][0]).sum();
        (y, x)
    };
    triangles.sort_by(|a, b| key(a).partial_cmp(&key(b)).unwrap_or(std::cmp::Ordering::Equal));
}

/// Signed area of the triangle (a, b, c); positive when counter-clockwise.
#[inline]
pub fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * cross(sub(b, a), sub(c, a))
}

/// Interior angle of triangle (a, b, c) at vertex a.
pub(crate) fn angle_at(a: Point, b: Point, c: Point) -> f64 {
    let u = sub(b, a);
    let v = sub(c, a);
    cross(u, v).abs().atan2(dot(u, v))
}

#[derive(Clone, Debug)]
pub struct TriMesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<bool>,
    edges: Vec<[usize; 2]>,
    edge_triangles: Vec<Vec<usize>>,
    adjacency: Vec<Vec<usize>>,
    incident: Vec<Vec<usize>>,
    sym_nodes: Vec<Vec<Option<SymNode>>>,
    sym_report: SymNodeReport,
}

impl PartialEq for TriMesh {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.triangles == other.triangles
    }
}

impl TriMesh {
    /// Builds the mesh topology from raw coordinates and vertex triples.
    ///
    /// Triangles are reoriented counter-clockwise. Fails on out-of-range
    /// indices, repeated vertices within a triangle, zero-area triangles and
    /// edges shared by more than two triangles.
    pub fn new(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let nv = vertices.len();
        if nv < 3 || triangles.is_empty() {
            return Err(Error::DegenerateMesh(format!(
                "need at least 3 vertices and 1 triangle, got {nv} and {}",
                triangles.len()
            )));
        }
        if let Some(v) = vertices.iter().position(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::DegenerateMesh(format!("vertex {v} has non-finite coordinates")));
        }
        let mut tris = triangles;
        for (t, tri) in tris.iter_mut().enumerate() {
            if tri.iter().any(|&v| v >= nv) {
                return Err(Error::DegenerateMesh(format!("triangle {t} references a missing vertex")));
            }
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::DegenerateMesh(format!("triangle {t} repeats a vertex")));
            }
            let [a, b, c] = tri.map(|v| vertices[v]);
            let area = signed_area(a, b, c);
            let scale = dist(a, b).max(dist(b, c)).max(dist(a, c));
            if area.abs() <= 1e-14 * scale * scale {
                return Err(Error::DegenerateMesh(format!("triangle {t} has zero area")));
            }
            if area < 0.0 {
                tri.swap(1, 2);
            }
        }

        let mut edge_list: Vec<([usize; 2], usize)> = Vec::with_capacity(3 * tris.len());
        for (t, tri) in tris.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                edge_list.push(([a.min(b), a.max(b)], t));
            }
        }
        edge_list.sort_unstable();
        let mut edges: Vec<[usize; 2]> = Vec::new();
        let mut edge_triangles: Vec<Vec<usize>> = Vec::new();
        for (e, t) in edge_list {
            if edges.last() == Some(&e) {
                edge_triangles.last_mut().unwrap().push(t);
            } else {
                edges.push(e);
                edge_triangles.push(vec![t]);
            }
        }
        if let Some(k) = edge_triangles.iter().position(|ts| ts.len() > 2) {
            return Err(Error::DegenerateMesh(format!(
                "edge ({}, {}) is shared by {} triangles",
                edges[k][0],
                edges[k][1],
                edge_triangles[k].len()
            )));
        }

        let mut boundary = vec![false; nv];
        let mut adjacency = vec![Vec::new(); nv];
        for (e, ts) in edges.iter().zip(&edge_triangles) {
            if ts.len() == 1 {
                boundary[e[0]] = true;
                boundary[e[1]] = true;
            }
            adjacency[e[0]].push(e[1]);
            adjacency[e[1]].push(e[0]);
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        let mut incident = vec![Vec::new(); nv];
        for (t, tri) in tris.iter().enumerate() {
            for &v in tri {
                incident[v].push(t);
            }
        }
        if let Some(v) = incident.iter().position(|ts| ts.is_empty()) {
            return Err(Error::DegenerateMesh(format!("vertex {v} belongs to no triangle")));
        }

        let mut mesh = TriMesh {
            vertices,
            triangles: tris,
            boundary,
            edges,
            edge_triangles,
            adjacency,
            incident,
            sym_nodes: Vec::new(),
            sym_report: SymNodeReport::default(),
        };
        mesh.compute_symmetric_nodes();
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Point {
        self.vertices[i]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }

    /// Sorted list of unique edges, each stored as `[a, b]` with `a < b`.
    pub fn edges(&self) -> &[[usize; 2]] {
        &self.edges
    }

    pub fn edge_triangles(&self, edge: usize) -> &[usize] {
        &self.edge_triangles[edge]
    }

    pub fn edge_index(&self, a: usize, b: usize) -> Option<usize> {
        let key = [a.min(b), a.max(b)];
        self.edges.binary_search(&key).ok()
    }

    pub fn is_boundary_edge(&self, edge: usize) -> bool {
        self.edge_triangles[edge].len() == 1
    }

    pub fn is_boundary_vertex(&self, i: usize) -> bool {
        self.boundary[i]
    }

    pub fn boundary_flags(&self) -> &[bool] {
        &self.boundary
    }

    /// Vertices sharing a macroelement with `i` (excluding `i`), sorted.
    pub fn adjacency(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    /// Triangles incident to vertex `i`, in increasing index order.
    pub fn macroelement(&self, i: usize) -> &[usize] {
        &self.incident[i]
    }

    pub fn triangle_points(&self, t: usize) -> [Point; 3] {
        self.triangles[t].map(|v| self.vertices[v])
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_points(t);
        signed_area(a, b, c)
    }

    pub fn area(&self) -> f64 {
        (0..self.num_triangles()).map(|t| self.triangle_area(t)).sum()
    }

    pub fn barycenter(&self, t: usize) -> Point {
        let [a, b, c] = self.triangle_points(t);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    pub fn edge_length(&self, edge: usize) -> f64 {
        let [a, b] = self.edges[edge];
        dist(self.vertices[a], self.vertices[b])
    }

    /// Mesh size `h = max_T diam(T)`.
    pub fn h(&self) -> f64 {
        (0..self.edges.len()).map(|e| self.edge_length(e)).fold(0.0, f64::max)
    }

    /// Symmetric node of the pair (i, j), `None` when the ray from `a_j`
    /// through `a_i` leaves the domain at `a_i`.
    pub fn sym_node(&self, i: usize, j: usize) -> Option<&SymNode> {
        let slot = self.adjacency[i].binary_search(&j).ok()?;
        self.sym_nodes[i][slot].as_ref()
    }

    /// Symmetric nodes of vertex `i`, aligned with [`TriMesh::adjacency`].
    pub fn sym_nodes_of(&self, i: usize) -> &[Option<SymNode>] {
        &self.sym_nodes[i]
    }

    pub fn sym_report(&self) -> &SymNodeReport {
        &self.sym_report
    }

    /// Boundary edges in counter-clockwise cycle order, as vertex chains.
    /// Returns one closed loop per boundary component.
    pub fn boundary_loops(&self) -> Vec<Vec<usize>> {
        // directed boundary edges follow the CCW orientation of their triangle
        let mut next = std::collections::BTreeMap::new();
        for (e, ts) in self.edge_triangles.iter().enumerate() {
            if ts.len() != 1 {
                continue;
            }
            let tri = self.triangles[ts[0]];
            let [a, b] = self.edges[e];
            for k in 0..3 {
                if (tri[k], tri[(k + 1) % 3]) == (a, b) {
                    next.insert(a, b);
                } else if (tri[k], tri[(k + 1) % 3]) == (b, a) {
                    next.insert(b, a);
                }
            }
        }
        let mut loops = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for &start in next.keys() {
            if seen.contains(&start) {
                continue;
            }
            let mut chain = vec![start];
            seen.insert(start);
            let mut cur = next[&start];
            while cur != start {
                if !seen.insert(cur) {
                    break;
                }
                chain.push(cur);
                match next.get(&cur) {
                    Some(&n) => cur = n,
                    None => break,
                }
            }
            loops.push(chain);
        }
        loops
    }

    /// Interior angle of the domain at boundary vertex `i` (sum of the
    /// incident triangle angles).
    pub fn domain_angle(&self, i: usize) -> f64 {
        self.incident[i]
            .iter()
            .map(|&t| {
                let tri = self.triangles[t];
                let k = tri.iter().position(|&v| v == i).unwrap();
                angle_at(
                    self.vertices[i],
                    self.vertices[tri[(k + 1) % 3]],
                    self.vertices[tri[(k + 2) % 3]],
                )
            })
            .sum()
    }

    /// Checks the weak-acuteness condition `(grad phi_i, grad phi_j) <= 0`
    /// on every edge of the assembled P1 stiffness matrix.
    pub fn check_weak_acuteness(&self) -> AcutenessReport {
        let mut offenders = Vec::new();
        for (e, &[a, b]) in self.edges.iter().enumerate() {
            let value: f64 = self.edge_triangles[e]
                .iter()
                .map(|&t| {
                    let tri = self.triangles[t];
                    let c = tri.iter().copied().find(|&v| v != a && v != b).unwrap();
                    let [pa, pb, pc] = [a, b, c].map(|v| self.vertices[v]);
                    // (grad l_a, grad l_b)|T| = -cot(angle at c) / 2
                    let u = sub(pa, pc);
                    let v = sub(pb, pc);
                    -0.5 * dot(u, v) / cross(u, v).abs()
                })
                .sum();
            if value > ACUTENESS_TOL {
                offenders.push((a, b, value));
            }
        }
        AcutenessReport {
            pass: offenders.is_empty(),
            offenders,
        }
    }
}

/// Off-diagonal stiffness entries above this value (dimensionless) fail the audit.
pub const ACUTENESS_TOL: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct AcutenessReport {
    pub pass: bool,
    /// `(i, j, (grad phi_i, grad phi_j))` for each offending edge.
    pub offenders: Vec<(usize, usize, f64)>,
}
