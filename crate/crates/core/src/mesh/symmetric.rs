use super::{cross, dist, norm, sub, Point, TriMesh};

/// Intersection of the ray from `a_j` through `a_i` with the boundary of the
/// macroelement of `a_i`, on the far side of `a_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymNode {
    pub point: Point,
    /// Endpoints of the macroelement-boundary segment containing the point.
    pub segment: [usize; 2],
    /// Position along the segment: `point = (1 - s) a_seg0 + s a_seg1`.
    pub s: f64,
    /// Distance `|a_i - point|`.
    pub distance: f64,
    /// The ray passed within tolerance of a segment endpoint and was snapped.
    pub snapped: bool,
}

impl SymNode {
    /// Linear interpolation of nodal values at the symmetric node.
    #[inline]
    pub fn interpolate(&self, values: &[f64]) -> f64 {
        (1.0 - self.s) * values[self.segment[0]] + self.s * values[self.segment[1]]
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct SymNodeReport {
    /// Number of ordered adjacent pairs (i, j).
    pub pairs: usize,
    pub present: usize,
    /// Ordered pairs whose ray leaves the domain at `a_i` (boundary vertices only).
    pub absent: Vec<(usize, usize)>,
    /// Ordered pairs whose ray hit a macroelement corner within tolerance.
    pub snapped: Vec<(usize, usize)>,
}

impl TriMesh {
    /// Recomputes the symmetric nodes of every adjacent pair.
    pub fn compute_symmetric_nodes(&mut self) -> &SymNodeReport {
        let snap_tol = 1e-10 * self.h();
        let mut report = SymNodeReport::default();
        let mut all = Vec::with_capacity(self.num_vertices());
        for i in 0..self.num_vertices() {
            let mut row = Vec::with_capacity(self.adjacency[i].len());
            for &j in &self.adjacency[i] {
                report.pairs += 1;
                let node = self.locate_sym_node(i, j, snap_tol);
                match &node {
                    Some(n) => {
                        report.present += 1;
                        if n.snapped {
                            report.snapped.push((i, j));
                        }
                    }
                    None => report.absent.push((i, j)),
                }
                row.push(node);
            }
            all.push(row);
        }
        self.sym_nodes = all;
        self.sym_report = report;
        &self.sym_report
    }

    fn locate_sym_node(&self, i: usize, j: usize, snap_tol: f64) -> Option<SymNode> {
        let ai = self.vertices[i];
        let d = sub(ai, self.vertices[j]);
        let dn = norm(d);
        let mut best: Option<SymNode> = None;
        for &t in &self.incident[i] {
            let tri = self.triangles[t];
            let k = tri.iter().position(|&v| v == i).unwrap();
            let (b, c) = (tri[(k + 1) % 3], tri[(k + 2) % 3]);
            let (pb, pc) = (self.vertices[b], self.vertices[c]);
            let e = sub(pc, pb);
            let w = sub(pb, ai);
            // ai + t d = pb + s e
            let det = cross(e, d);
            let elen = norm(e);
            if det.abs() <= 1e-14 * dn * elen {
                continue;
            }
            let tpar = cross(e, w) / det;
            let mut s = cross(d, w) / det;
            if tpar <= 0.0 {
                continue;
            }
            let mut snapped = false;
            if (s * elen).abs() <= snap_tol {
                s = 0.0;
                snapped = true;
            } else if ((1.0 - s) * elen).abs() <= snap_tol {
                s = 1.0;
                snapped = true;
            }
            if !(0.0..=1.0).contains(&s) {
                continue;
            }
            let point = if s == 0.0 {
                pb
            } else if s == 1.0 {
                pc
            } else {
                [pb[0] + s * e[0], pb[1] + s * e[1]]
            };
            let node = SymNode {
                point,
                segment: [b, c],
                s,
                distance: dist(point, ai),
                snapped,
            };
            // adjacent triangles share the corner hit; keep the first one
            if best.is_none() {
                best = Some(node);
            }
        }
        best
    }
}
