//! Edge-based discrete forms of the density equation (geometric-mean
//! chemotaxis, logarithmic-mean convection) and the skew convection matrix
//! of the chemoattractant equation.

use crate::error::Result;
use crate::fespace::{p1_gradients, p2_gradients, p2_values, P1Field, TaylorHoodSpace};
use crate::mesh::TriMesh;
use crate::quadrature;
use crate::sparse::CsrMatrix;

/// Below this magnitude `n + 1` is treated as zero by [`gamma_conv`].
pub const SHIFTED_ZERO: f64 = 1e-30;

/// Logarithm extended linearly below `eps`:
/// `log s` for `s > eps`, `s / eps + log eps - 1` otherwise.
pub fn g_eps(s: f64, eps: f64) -> f64 {
    if s > eps {
        s.ln()
    } else {
        s / eps + eps.ln() - 1.0
    }
}

/// `sqrt([n_i]_+ [n_j]_+)`.
pub fn gamma_chemo(ni: f64, nj: f64) -> f64 {
    (ni.max(0.0) * nj.max(0.0)).sqrt()
}

/// Difference quotient of `g_eps(n + 1)` against `1 / (n + 1)`; `[n_i]_+ + 1`
/// at equal arguments.
pub fn gamma_conv(ni: f64, nj: f64, eps: f64) -> f64 {
    gamma_conv_checked(ni, nj, eps).0
}

/// As [`gamma_conv`], also reporting whether an argument had `|n + 1|`
/// numerically zero (the equal-argument value is returned then).
pub fn gamma_conv_checked(ni: f64, nj: f64, eps: f64) -> (f64, bool) {
    let a = ni + 1.0;
    let b = nj + 1.0;
    let equal = ni.max(0.0) + 1.0;
    if a.abs() < SHIFTED_ZERO || b.abs() < SHIFTED_ZERO {
        return (equal, true);
    }
    if ni == nj {
        return (equal, false);
    }
    let d = nj - ni;
    if a > eps && b > eps {
        // a b log(b/a) / (b - a), accurate for nearly equal arguments
        (a * b * (d / a).ln_1p() / d, false)
    } else {
        ((g_eps(b, eps) - g_eps(a, eps)) / (1.0 / a - 1.0 / b), false)
    }
}

/// A coefficient attached to the unordered vertex pair `i < j`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EdgeCoefficient {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

/// `gamma^ch` on every mesh edge.
pub fn chemotaxis_coefficients(mesh: &TriMesh, n: &[f64]) -> Vec<EdgeCoefficient> {
    mesh.edges()
        .iter()
        .map(|&[i, j]| EdgeCoefficient { i, j, value: gamma_chemo(n[i], n[j]) })
        .collect()
}

/// `gamma^c` on every mesh edge, with the number of flagged pairs.
pub fn convection_coefficients(mesh: &TriMesh, n: &[f64], eps: f64) -> (Vec<EdgeCoefficient>, usize) {
    let mut flagged = 0;
    let coeffs = mesh
        .edges()
        .iter()
        .map(|&[i, j]| {
            let (value, bad) = gamma_conv_checked(n[i], n[j], eps);
            flagged += bad as usize;
            EdgeCoefficient { i, j, value }
        })
        .collect();
    (coeffs, flagged)
}

/// Load of the starred chemotaxis form
/// `sum_{i<j} gamma^ch_ij (c_j - c_i)(nb_i - nb_j)(grad phi_j, grad phi_i)`
/// tested with each basis function: `L_r = sum_s gamma_rs (c_s - c_r) K_rs`.
pub fn chemotaxis_load(
    mesh: &TriMesh,
    stiffness: &CsrMatrix,
    n_frozen: &P1Field,
    c: &P1Field,
) -> Result<Vec<f64>> {
    n_frozen.check(mesh)?;
    c.check(mesh)?;
    let (n, c) = (&n_frozen.values, &c.values);
    let mut load = vec![0.0; mesh.num_vertices()];
    for &[i, j] in mesh.edges() {
        let w = gamma_chemo(n[i], n[j]) * (c[j] - c[i]) * stiffness.get(i, j);
        load[i] += w;
        load[j] -= w;
    }
    Ok(load)
}

/// P1 transport matrix `G[i][j] = (phi_j u, grad phi_i)` for a P2 velocity.
pub fn transport_matrix(mesh: &TriMesh, space: &TaylorHoodSpace, u: &[f64]) -> Result<CsrMatrix> {
    space.check_velocity(u)?;
    let n = mesh.num_vertices();
    let mut trips = Vec::with_capacity(9 * mesh.num_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let (g, area) = p1_gradients(mesh, t);
        // int_T phi_j u for each local j
        let mut m = [[0.0; 2]; 3];
        for (l, w) in quadrature::degree4().iter() {
            let v = space.velocity_at(u, t, l);
            for k in 0..3 {
                m[k][0] += w * area * l[k] * v[0];
                m[k][1] += w * area * l[k] * v[1];
            }
        }
        for a in 0..3 {
            for b in 0..3 {
                trips.push((tri[a], tri[b], m[b][0] * g[a][0] + m[b][1] * g[a][1]));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(n, n, &trips))
}

/// Load of the starred convection form
/// `sum_{i,j} gamma^c_ij (nb_i - nb_j)(phi_j u, grad phi_i)`:
/// `load_r = sum_s gamma^c_rs (G[r][s] - G[s][r])`.
pub fn convection_starred_load(
    mesh: &TriMesh,
    transport: &CsrMatrix,
    n_frozen: &P1Field,
    eps: f64,
) -> Result<Vec<f64>> {
    n_frozen.check(mesh)?;
    let n = &n_frozen.values;
    let mut load = vec![0.0; mesh.num_vertices()];
    for &[i, j] in mesh.edges() {
        let w = gamma_conv(n[i], n[j], eps) * (transport.get(i, j) - transport.get(j, i));
        load[i] += w;
        load[j] -= w;
    }
    Ok(load)
}

/// `A[i][j] = (u . grad phi_j, phi_i) + 1/2 (div u phi_j, phi_i)` on P1.
pub fn c_convection_matrix(mesh: &TriMesh, space: &TaylorHoodSpace, u: &[f64]) -> Result<CsrMatrix> {
    space.check_velocity(u)?;
    let n = mesh.num_vertices();
    let nd = space.p2.num_dofs;
    let mut trips = Vec::with_capacity(9 * mesh.num_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let (g, area) = p1_gradients(mesh, t);
        let dofs = space.p2.tri_dofs[t];
        let mut local = [[0.0; 3]; 3];
        for (l, w) in quadrature::degree4().iter() {
            let phi = p2_values(l);
            let dphi = p2_gradients(l, &g);
            let (mut vx, mut vy, mut div) = (0.0, 0.0, 0.0);
            for k in 0..6 {
                let (ux, uy) = (u[dofs[k]], u[nd + dofs[k]]);
                vx += ux * phi[k];
                vy += uy * phi[k];
                div += ux * dphi[k][0] + uy * dphi[k][1];
            }
            for a in 0..3 {
                for b in 0..3 {
                    let adv = vx * g[b][0] + vy * g[b][1];
                    local[a][b] += w * area * l[a] * (adv + 0.5 * div * l[b]);
                }
            }
        }
        for a in 0..3 {
            for b in 0..3 {
                trips.push((tri[a], tri[b], local[a][b]));
            }
        }
    }
    Ok(CsrMatrix::from_triplets(n, n, &trips))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn g_eps_values() {
        assert_eq!(g_eps(1.0, 1e-6), 0.0);
        let eps: f64 = 1e-6;
        assert!((g_eps(eps, eps) - eps.ln()).abs() < 1e-12);
        assert!((eps / eps + eps.ln() - 1.0 - eps.ln()).abs() < 1e-15);
        assert!((g_eps(-1.0, eps) - (-1e6 + eps.ln() - 1.0)).abs() < 1e-8);
    }

    #[test]
    fn gamma_values() {
        assert_eq!(gamma_chemo(4.0, 9.0), 6.0);
        assert_eq!(gamma_chemo(-1.0, 5.0), 0.0);
        assert_eq!(gamma_conv(2.0, 2.0, 1e-6), 3.0);
        let v = gamma_conv(0.0, E - 1.0, 1e-6);
        assert!((v - E / (E - 1.0)).abs() < 1e-14);
        assert!((gamma_conv(4.0, 4.0 + 1e-8, 1e-6) - 5.0).abs() < 1e-6);
        assert_eq!(gamma_conv(3.0, 7.0, 1e-6), gamma_conv(7.0, 3.0, 1e-6));
        let (v, flagged) = gamma_conv_checked(-1.0, 2.0, 1e-6);
        assert!(flagged);
        assert_eq!(v, 1.0);
    }

    #[test]
    fn gamma_conv_below_eps_uses_linear_branch() {
        let eps = 1e-3;
        let (ni, nj) = (-0.9995, 1.0);
        let a: f64 = ni + 1.0;
        let b: f64 = nj + 1.0;
        let expect = ((b.ln()) - (a / eps + eps.ln() - 1.0)) / (1.0 / a - 1.0 / b);
        assert!((gamma_conv(ni, nj, eps) - expect).abs() < 1e-12 * expect.abs());
    }
}
