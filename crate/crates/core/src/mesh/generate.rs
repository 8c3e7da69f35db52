use std::collections::HashMap;
use std::f64::consts::PI;

use super::{cross, dot, sub, Point, TriMesh};
use crate::error::{Error, Result};

/// Triangulates the disc `B(center; radius)` by concentric rings of
/// vertices, the outer ring being a regular polygon inscribed in the circle.
///
/// Consecutive rings are stitched by advancing along angle, and the result is
/// made Delaunay by edge flips.
pub fn generate_disc_mesh(center: Point, radius: f64, target_h: f64) -> Result<TriMesh> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {radius}")));
    }
    if !(target_h > 0.0 && target_h.is_finite()) {
        return Err(Error::InvalidArgument(format!("target_h must be positive, got {target_h}")));
    }
    let n_boundary = (2.0 * PI * radius / target_h).ceil() as usize;
    if target_h > radius || n_boundary < 3 {
        return Err(Error::DegenerateMesh(format!(
            "target_h {target_h} is too coarse for radius {radius}"
        )));
    }

    let ring_spacing = target_h * 3f64.sqrt() / 2.0;
    let n_rings = ((radius / ring_spacing).ceil() as usize).max(1);
    let mut vertices: Vec<Point> = vec![center];
    // each ring: (first vertex index, count, angular offset)
    let mut rings: Vec<(usize, usize, f64)> = vec![(0, 1, 0.0)];
    for k in 1..=n_rings {
        let r = radius * k as f64 / n_rings as f64;
        let count = if k == n_rings {
            n_boundary
        } else {
            ((2.0 * PI * r / target_h).ceil() as usize).max(6)
        };
        let offset = if k == n_rings || k % 2 == 0 { 0.0 } else { PI / count as f64 };
        let first = vertices.len();
        for p in 0..count {
            let th = offset + 2.0 * PI * p as f64 / count as f64;
            vertices.push([center[0] + r * th.cos(), center[1] + r * th.sin()]);
        }
        rings.push((first, count, offset));
    }

    let mut triangles = Vec::new();
    for w in rings.windows(2) {
        stitch_rings(w[0], w[1], &mut triangles);
    }
    let mesh = TriMesh::new(vertices, triangles)?;
    make_delaunay(&mesh)
}

fn stitch_rings(inner: (usize, usize, f64), outer: (usize, usize, f64), out: &mut Vec<[usize; 3]>) {
    let (ia, na, oa) = inner;
    let (ib, nb, ob) = outer;
    let step_b = 2.0 * PI / nb as f64;
    if na == 1 {
        for m in 0..nb {
            out.push([ia, ib + m, ib + (m + 1) % nb]);
        }
        return;
    }
    let step_a = 2.0 * PI / na as f64;
    // start the outer ring at the vertex angularly closest to inner vertex 0
    let rel = (oa - ob).rem_euclid(2.0 * PI);
    let q0 = ((rel / step_b).round() as usize) % nb;
    let beta0 = ob + q0 as f64 * step_b;
    let beta0 = beta0 - 2.0 * PI * ((beta0 - oa) / (2.0 * PI)).round();
    let a_at = |p: usize| ia + p % na;
    let b_at = |m: usize| ib + (q0 + m) % nb;
    let (mut p, mut m) = (0, 0);
    while p < na || m < nb {
        let advance_a = if m == nb {
            true
        } else if p == na {
            false
        } else {
            let next_a = oa + (p + 1) as f64 * step_a;
            let next_b = beta0 + (m + 1) as f64 * step_b;
            next_a < next_b
        };
        if advance_a {
            out.push([a_at(p), a_at(p + 1), b_at(m)]);
            p += 1;
        } else {
            out.push([a_at(p), b_at(m + 1), b_at(m)]);
            m += 1;
        }
    }
}

/// Sum of cotangents of the two angles opposite the shared edge; negative
/// iff the angles sum to more than pi.
fn cot_sum(a: Point, b: Point, c: Point, d: Point) -> f64 {
    let cot = |apex: Point| {
        let u = sub(a, apex);
        let v = sub(b, apex);
        dot(u, v) / cross(u, v).abs()
    };
    cot(c) + cot(d)
}

/// Applies Lawson edge flips until every interior edge satisfies the
/// empty-circumcircle condition (opposite angles sum to at most pi).
pub fn make_delaunay(mesh: &TriMesh) -> Result<TriMesh> {
    let verts = mesh.vertices().to_vec();
    let mut tris: Vec<[usize; 3]> = mesh.triangles().to_vec();
    let max_passes = 100 + tris.len();
    for _ in 0..max_passes {
        let mut owner: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (t, tri) in tris.iter().enumerate() {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                owner.entry((a.min(b), a.max(b))).or_default().push(t);
            }
        }
        let mut keys: Vec<_> = owner.keys().copied().collect();
        keys.sort_unstable();
        let mut touched = vec![false; tris.len()];
        let mut flips = 0usize;
        for (a, b) in keys {
            let ts = &owner[&(a, b)];
            if ts.len() != 2 || touched[ts[0]] || touched[ts[1]] {
                continue;
            }
            let (t0, t1) = (ts[0], ts[1]);
            let c = opposite(tris[t0], a, b);
            let d = opposite(tris[t1], a, b);
            if cot_sum(verts[a], verts[b], verts[c], verts[d]) < -1e-12 {
                tris[t0] = [c, d, a];
                tris[t1] = [d, c, b];
                for t in [t0, t1] {
                    let [p, q, r] = tris[t].map(|v| verts[v]);
                    if cross(sub(q, p), sub(r, p)) < 0.0 {
                        tris[t].swap(1, 2);
                    }
                }
                touched[t0] = true;
                touched[t1] = true;
                flips += 1;
            }
        }
        if flips == 0 {
            super::sort_by_barycenter(&verts, &mut tris);
            return TriMesh::new(verts, tris);
        }
    }
    Err(Error::DegenerateMesh("edge flipping did not terminate".into()))
}

fn opposite(tri: [usize; 3], a: usize, b: usize) -> usize {
    tri.into_iter().find(|&v| v != a && v != b).unwrap()
}
