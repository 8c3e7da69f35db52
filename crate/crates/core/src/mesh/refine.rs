use super::{Point, TriMesh};
use crate::error::{Error, Result};

const MAX_CLOSURE_PASSES: usize = 1000;

/// Red refinement of every triangle whose barycenter satisfies `inside`,
/// closed conformingly: triangles left with two or more split edges, or a
/// split edge together with a boundary edge, are refined red as well, and
/// triangles with a single split edge are bisected (green).
pub fn refine_region(mesh: &TriMesh, inside: impl Fn(Point) -> bool) -> Result<TriMesh> {
    refine_marked(mesh, |t| inside(mesh.barycenter(t)))
}

/// Repeats [`refine_region`] on triangles inside the region until their
/// longest edge is at most `1.5 * target_h`.
pub fn refine_region_until(
    mesh: &TriMesh,
    inside: impl Fn(Point) -> bool,
    target_h: f64,
) -> Result<TriMesh> {
    if !(target_h > 0.0) {
        return Err(Error::InvalidArgument(format!("target_h must be positive, got {target_h}")));
    }
    let mut current = mesh.clone();
    for _ in 0..32 {
        let tris = current.triangles().to_vec();
        let too_long = |t: usize| {
            let [a, b, c] = tris[t];
            let p = current.vertices();
            let m = super::dist(p[a], p[b]).max(super::dist(p[b], p[c])).max(super::dist(p[a], p[c]));
            m > 1.5 * target_h
        };
        if !(0..tris.len()).any(|t| too_long(t) && inside(current.barycenter(t))) {
            return Ok(current);
        }
        current = refine_marked(&current, |t| too_long(t) && inside(current.barycenter(t)))?;
    }
    Err(Error::RefinementClosure(32))
}

fn refine_marked(mesh: &TriMesh, select: impl Fn(usize) -> bool) -> Result<TriMesh> {
    let nt = mesh.num_triangles();
    let ne = mesh.edges().len();
    let tri_edges: Vec<[usize; 3]> = mesh
        .triangles()
        .iter()
        .map(|tri| {
            [0, 1, 2].map(|k| mesh.edge_index(tri[k], tri[(k + 1) % 3]).unwrap())
        })
        .collect();
    let mut red = vec![false; nt];
    let mut split = vec![false; ne];
    for t in 0..nt {
        if select(t) {
            red[t] = true;
            tri_edges[t].iter().for_each(|&e| split[e] = true);
        }
    }
    if !red.iter().any(|&r| r) {
        return Ok(mesh.clone());
    }

    let mut passes = 0;
    loop {
        let mut changed = false;
        for t in 0..nt {
            if red[t] {
                continue;
            }
            let marked = tri_edges[t].iter().filter(|&&e| split[e]).count();
            let on_boundary = tri_edges[t].iter().any(|&e| mesh.is_boundary_edge(e));
            if marked >= 2 || (marked == 1 && on_boundary) {
                red[t] = true;
                tri_edges[t].iter().for_each(|&e| split[e] = true);
                changed = true;
            }
        }
        passes += 1;
        if !changed {
            break;
        }
        if passes >= MAX_CLOSURE_PASSES {
            return Err(Error::RefinementClosure(passes));
        }
    }

    let mut vertices = mesh.vertices().to_vec();
    let mut midpoint = vec![usize::MAX; ne];
    for (e, &[a, b]) in mesh.edges().iter().enumerate() {
        if split[e] {
            let (pa, pb) = (vertices[a], vertices[b]);
            midpoint[e] = vertices.len();
            vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
        }
    }

    let mut triangles = Vec::with_capacity(nt * 2);
    for (t, &[a, b, c]) in mesh.triangles().iter().enumerate() {
        let [eab, ebc, eca] = tri_edges[t];
        if red[t] {
            let (mab, mbc, mca) = (midpoint[eab], midpoint[ebc], midpoint[eca]);
            triangles.push([a, mab, mca]);
            triangles.push([mab, b, mbc]);
            triangles.push([mca, mbc, c]);
            triangles.push([mab, mbc, mca]);
        } else if split[eab] {
            triangles.push([c, a, midpoint[eab]]);
            triangles.push([c, midpoint[eab], b]);
        } else if split[ebc] {
            triangles.push([a, b, midpoint[ebc]]);
            triangles.push([a, midpoint[ebc], c]);
        } else if split[eca] {
            triangles.push([b, c, midpoint[eca]]);
            triangles.push([b, midpoint[eca], a]);
        } else {
            triangles.push([a, b, c]);
        }
    }
    super::sort_by_barycenter(&vertices, &mut triangles);
    TriMesh::new(vertices, triangles)
}
