#![allow(dead_code)]

use ksns_core::fespace::TaylorHoodSpace;
use ksns_core::mesh::{Point, TriMesh};
use rand::Rng;

/// Regular hexagon around the origin with unit edges.
pub fn hexagon_patch() -> TriMesh {
    let mut v = vec![[0.0, 0.0]];
    for k in 0..6 {
        let th = std::f64::consts::PI / 3.0 * k as f64;
        v.push([th.cos(), th.sin()]);
    }
    let tris = (0..6).map(|k| [0, 1 + k, 1 + (k + 1) % 6]).collect();
    TriMesh::new(v, tris).unwrap()
}

/// Unit square split into four triangles around its center.
pub fn five_vertex_mesh() -> TriMesh {
    let v = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
    TriMesh::new(v, vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]]).unwrap()
}

/// `nx * nx` cells on the unit square with interior vertices jittered by up
/// to `jitter` cell widths and a random diagonal in each cell.
pub fn jittered_square(rng: &mut impl Rng, nx: usize, jitter: f64) -> TriMesh {
    let h = 1.0 / nx as f64;
    let mut v = Vec::new();
    for j in 0..=nx {
        for i in 0..=nx {
            let interior = i > 0 && i < nx && j > 0 && j < nx;
            let (dx, dy) = if interior {
                (rng.gen_range(-jitter..jitter) * h, rng.gen_range(-jitter..jitter) * h)
            } else {
                (0.0, 0.0)
            };
            v.push([i as f64 * h + dx, j as f64 * h + dy]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut t = Vec::new();
    for j in 0..nx {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if rng.gen_bool(0.5) {
                t.push([a, b, c]);
                t.push([a, c, d]);
            } else {
                t.push([a, b, d]);
                t.push([b, c, d]);
            }
        }
    }
    TriMesh::new(v, t).unwrap()
}

/// Gradients of the barycentric coordinates on a triangle, from the
/// rotated opposite edges.
pub fn barycentric_gradients(p: [Point; 3]) -> ([[f64; 2]; 3], f64) {
    let twice = (p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]);
    let mut g = [[0.0; 2]; 3];
    for k in 0..3 {
        let (a, b) = (p[(k + 1) % 3], p[(k + 2) % 3]);
        g[k] = [(a[1] - b[1]) / twice, (b[0] - a[0]) / twice];
    }
    (g, 0.5 * twice.abs())
}

/// Dense P1 stiffness matrix assembled element by element.
pub fn dense_stiffness(mesh: &TriMesh) -> Vec<Vec<f64>> {
    let n = mesh.num_vertices();
    let mut k = vec![vec![0.0; n]; n];
    for tri in mesh.triangles() {
        let (g, area) = barycentric_gradients(tri.map(|v| mesh.vertex(v)));
        for a in 0..3 {
            for b in 0..3 {
                k[tri[a]][tri[b]] += area * (g[a][0] * g[b][0] + g[a][1] * g[b][1]);
            }
        }
    }
    k
}

/// Dense `G[i][j] = (phi_j u, grad phi_i)` from exact barycentric moments
/// `int l1^a l2^b l3^c = 2|T| a! b! c! / (a+b+c+2)!`.
pub fn dense_transport(mesh: &TriMesh, u: &[f64]) -> Vec<Vec<f64>> {
    let nv = mesh.num_vertices();
    let nd = nv + mesh.edges().len();
    let mut g = vec![vec![0.0; nv]; nv];
    for tri in mesh.triangles() {
        let (grad, area) = barycentric_gradients(tri.map(|v| mesh.vertex(v)));
        let edge_dof = |a: usize, b: usize| nv + mesh.edge_index(tri[a], tri[b]).unwrap();
        for j in 0..3 {
            // int_T l_j u
            let mut m = [0.0; 2];
            for k in 0..3 {
                let w = if k == j { area / 30.0 } else { -area / 60.0 };
                m[0] += w * u[tri[k]];
                m[1] += w * u[nd + tri[k]];
            }
            for (a, b) in [(0, 1), (1, 2), (2, 0)] {
                let w = if a == j || b == j { 2.0 * area / 15.0 } else { area / 15.0 };
                let d = edge_dof(a, b);
                m[0] += w * u[d];
                m[1] += w * u[nd + d];
            }
            for i in 0..3 {
                g[tri[i]][tri[j]] += m[0] * grad[i][0] + m[1] * grad[i][1];
            }
        }
    }
    g
}

pub fn log_mean_coefficient(ni: f64, nj: f64) -> f64 {
    let (a, b) = (ni + 1.0, nj + 1.0);
    if a == b {
        a
    } else {
        a * b * (b.ln() - a.ln()) / (b - a)
    }
}

/// Brute-force `(n grad c, grad phi_r)_*` for every vertex `r`, summed over
/// all pairs `i < j`, with the sum of absolute terms as a scale.
pub fn chemotaxis_oracle(mesh: &TriMesh, n: &[f64], c: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let nv = mesh.num_vertices();
    let k = dense_stiffness(mesh);
    let mut oracle = vec![0.0; nv];
    let mut scale = vec![0.0; nv];
    for r in 0..nv {
        let nb = |v: usize| if v == r { 1.0 } else { 0.0 };
        for i in 0..nv {
            for j in i + 1..nv {
                let t = (n[i] * n[j]).sqrt() * (c[j] - c[i]) * (nb(i) - nb(j)) * k[j][i];
                oracle[r] += t;
                scale[r] += t.abs();
            }
        }
    }
    (oracle, scale)
}

/// Brute-force `sum_{i != j} gamma_ij (nb_i - nb_j) G[i][j]` with `nb = phi_r`.
pub fn convection_oracle(g: &[Vec<f64>], n: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let nv = n.len();
    let mut oracle = vec![0.0; nv];
    let mut scale = vec![0.0; nv];
    for i in 0..nv {
        for j in 0..nv {
            if i == j {
                continue;
            }
            let t = log_mean_coefficient(n[i], n[j]) * g[i][j];
            oracle[i] += t;
            oracle[j] -= t;
            scale[i] += t.abs();
            scale[j] += t.abs();
        }
    }
    (oracle, scale)
}

/// Random P2 velocity vanishing on the boundary.
pub fn random_zero_trace(space: &TaylorHoodSpace, rng: &mut impl Rng) -> Vec<f64> {
    let nd = space.p2.num_dofs;
    (0..2 * nd)
        .map(|d| if space.p2.boundary[d % nd] { 0.0 } else { rng.gen_range(-1.0..1.0) })
        .collect()
}

/// Smooth random vector field `a + B x + c sin(w . x)`.
pub fn random_smooth_field(rng: &mut impl Rng) -> impl Fn(Point) -> [f64; 2] {
    let c: [f64; 8] = std::array::from_fn(|_| rng.gen_range(-2.0..2.0));
    move |p: Point| {
        let s = (c[6] * p[0] + c[7] * p[1]).sin();
        [
            c[0] + c[1] * p[0] + c[2] * p[1] + s,
            c[3] + c[4] * p[0] + c[5] * p[1] - s,
        ]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Dense Gaussian elimination with partial pivoting.
pub fn dense_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    x
}
