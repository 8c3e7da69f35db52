//! Shock detector and the graph-Laplacian artificial diffusion operators.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::mesh::{dist, TriMesh};
use crate::operators::gamma_conv;
use crate::sparse::CsrMatrix;

/// Two-sided directional jump of a P1 field across `a_i` along the edge to `a_j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpStats {
    /// `(eta_j - eta_i)/|r_ij| + (eta_sym - eta_i)/|r_sym|`.
    pub jump: f64,
    /// Half the sum of the absolute one-sided slopes.
    pub mean: f64,
}

/// One-sided slopes `(eta_j - eta_i)/|r_ij|` and, when the symmetric node
/// exists, `(eta_sym - eta_i)/|r_sym|`.
fn slopes(mesh: &TriMesh, eta: &[f64], i: usize, slot: usize) -> (f64, Option<f64>) {
    let j = mesh.adjacency(i)[slot];
    let ai = mesh.vertex(i);
    let forward = (eta[j] - eta[i]) / dist(ai, mesh.vertex(j));
    let backward = mesh.sym_nodes_of(i)[slot]
        .as_ref()
        .map(|s| (s.interpolate(eta) - eta[i]) / s.distance);
    (forward, backward)
}

/// Jump statistics of `eta` at vertex `i` towards neighbour `j`. When the
/// symmetric node is absent the one-sided value is used if `fallback` is set.
pub fn gradient_jump_stats(mesh: &TriMesh, eta: &[f64], i: usize, j: usize, fallback: bool) -> Result<JumpStats> {
    let slot = mesh
        .adjacency(i)
        .binary_search(&j)
        .map_err(|_| Error::InvalidArgument(format!("vertices {i} and {j} are not adjacent")))?;
    let (f, b) = slopes(mesh, eta, i, slot);
    match b {
        Some(b) => Ok(JumpStats { jump: f + b, mean: 0.5 * (f.abs() + b.abs()) }),
        None if fallback => Ok(JumpStats { jump: f, mean: 0.5 * f.abs() }),
        None => Err(Error::MissingSymmetricNode { i, j }),
    }
}

/// Shock detector `alpha_i(eta) = ([sum_j jump_ij]_+ / sum_j 2 mean_ij)^q`,
/// zero when the denominator vanishes.
pub fn shock_detector(mesh: &TriMesh, eta: &[f64], i: usize, q: f64) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for slot in 0..mesh.adjacency(i).len() {
        let (f, b) = slopes(mesh, eta, i, slot);
        num += f;
        den += f.abs();
        if let Some(b) = b {
            num += b;
            den += b.abs();
        }
    }
    if den == 0.0 {
        return 0.0;
    }
    let ratio = (num.max(0.0) / den).min(1.0);
    if ratio == 1.0 {
        1.0
    } else {
        ratio.powf(q)
    }
}

/// The detector at every vertex.
pub fn shock_detector_all(mesh: &TriMesh, eta: &[f64], q: f64) -> Vec<f64> {
    (0..mesh.num_vertices()).map(|i| shock_detector(mesh, eta, i, q)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StabilizationKind {
    Density,
    Chemoattractant,
}

/// Row of the diagnostic dump for one edge.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeDiagnostics {
    pub i: usize,
    pub j: usize,
    pub alpha_i: f64,
    pub alpha_j: f64,
    pub f_ij: f64,
    pub f_ji: f64,
    pub nu: f64,
}

/// Symmetric artificial diffusion with coefficients `nu_ij >= 0` on the mesh
/// edges and `nu_ii = sum_j nu_ij`; as a form
/// `(B x, y) = sum_{i<j} nu_ij (x_j - x_i)(y_j - y_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct StabilizationMatrix {
    pub kind: StabilizationKind,
    /// One coefficient per mesh edge, aligned with [`TriMesh::edges`].
    pub nu: Vec<f64>,
    pub diagnostics: Vec<EdgeDiagnostics>,
}

impl StabilizationMatrix {
    pub fn zero(mesh: &TriMesh, kind: StabilizationKind) -> Self {
        StabilizationMatrix { kind, nu: vec![0.0; mesh.edges().len()], diagnostics: Vec::new() }
    }

    pub fn get(&self, mesh: &TriMesh, i: usize, j: usize) -> f64 {
        if i == j {
            return mesh.adjacency(i).iter().map(|&s| self.get(mesh, i, s)).sum();
        }
        mesh.edge_index(i, j).map_or(0.0, |e| self.nu[e])
    }

    /// `B x`.
    pub fn apply(&self, mesh: &TriMesh, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; mesh.num_vertices()];
        for (&[i, j], &nu) in mesh.edges().iter().zip(&self.nu) {
            let d = nu * (x[i] - x[j]);
            out[i] += d;
            out[j] -= d;
        }
        out
    }

    /// `(B x, y)`.
    pub fn form(&self, mesh: &TriMesh, x: &[f64], y: &[f64]) -> f64 {
        mesh.edges()
            .iter()
            .zip(&self.nu)
            .map(|(&[i, j], &nu)| nu * (x[j] - x[i]) * (y[j] - y[i]))
            .sum()
    }

    /// `(row, col, value)` triplets of the assembled matrix.
    pub fn triplets(&self, mesh: &TriMesh) -> Vec<(usize, usize, f64)> {
        let mut t = Vec::with_capacity(4 * self.nu.len());
        for (&[i, j], &nu) in mesh.edges().iter().zip(&self.nu) {
            if nu != 0.0 {
                t.extend([(i, i, nu), (j, j, nu), (i, j, -nu), (j, i, -nu)]);
            }
        }
        t
    }

    pub fn to_csr(&self, mesh: &TriMesh) -> CsrMatrix {
        let n = mesh.num_vertices();
        CsrMatrix::from_triplets(n, n, &self.triplets(mesh))
    }

    /// Text dump of `i j alpha_i alpha_j f_ij f_ji nu_ij` rows.
    pub fn dump(&self) -> String {
        let mut s = String::from("i j alpha_i alpha_j f_ij f_ji nu\n");
        for d in &self.diagnostics {
            let _ = writeln!(
                s,
                "{} {} {:.16e} {:.16e} {:.16e} {:.16e} {:.16e}",
                d.i, d.j, d.alpha_i, d.alpha_j, d.f_ij, d.f_ji, d.nu
            );
        }
        s
    }
}

fn build(
    mesh: &TriMesh,
    kind: StabilizationKind,
    alpha: &[f64],
    f: impl Fn(usize, usize) -> (f64, f64),
) -> StabilizationMatrix {
    let mut nu = Vec::with_capacity(mesh.edges().len());
    let mut diagnostics = Vec::with_capacity(mesh.edges().len());
    for &[i, j] in mesh.edges() {
        let (f_ij, f_ji) = f(i, j);
        let v = (alpha[i] * f_ij).max(alpha[j] * f_ji).max(0.0);
        nu.push(v);
        diagnostics.push(EdgeDiagnostics { i, j, alpha_i: alpha[i], alpha_j: alpha[j], f_ij, f_ji, nu: v });
    }
    StabilizationMatrix { kind, nu, diagnostics }
}

/// `f^n_ij = -(n_i+1)(n_j+1)(g(n_j+1) - g(n_i+1))/(n_j - n_i)^2 T_ij + K_ij`
/// with the antisymmetric transport `T_ij = G[i][j] - G[j][i]`; zero at
/// (nearly) equal values.
pub fn density_f(n: &[f64], transport: &CsrMatrix, stiffness: &CsrMatrix, eps: f64, i: usize, j: usize) -> f64 {
    let d = n[j] - n[i];
    if d.abs() <= 1e-12 * (1.0 + n[i].abs()) {
        return 0.0;
    }
    // (n_i+1)(n_j+1)(g_j - g_i)/(n_j - n_i) is gamma^c
    let t = transport.get(i, j) - transport.get(j, i);
    -gamma_conv(n[i], n[j], eps) / d * t + stiffness.get(i, j)
}

/// Artificial diffusion `B_n(n, u)` of the density equation.
pub fn assemble_bn(
    mesh: &TriMesh,
    n: &[f64],
    transport: &CsrMatrix,
    stiffness: &CsrMatrix,
    eps: f64,
    q: f64,
) -> StabilizationMatrix {
    let alpha = shock_detector_all(mesh, n, q);
    build(mesh, StabilizationKind::Density, &alpha, |i, j| {
        (
            density_f(n, transport, stiffness, eps, i, j),
            density_f(n, transport, stiffness, eps, j, i),
        )
    })
}

/// Artificial diffusion `B_c(c, u)` of the chemoattractant equation, where
/// `operator` is `k^-1 M + C(u) + K + M` whose off-diagonal entries are `f^c_ij`.
pub fn assemble_bc(mesh: &TriMesh, c: &[f64], operator: &CsrMatrix, q: f64) -> StabilizationMatrix {
    let alpha = shock_detector_all(mesh, c, q);
    build(mesh, StabilizationKind::Chemoattractant, &alpha, |i, j| {
        (operator.get(i, j), operator.get(j, i))
    })
}
