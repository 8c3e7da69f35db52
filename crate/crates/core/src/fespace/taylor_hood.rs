use super::p2::{p2_gradients, p2_values, P2Space};
use super::{check_len, map_point, p1_gradients, LumpedMass};
use crate::error::{Error, Result};
use crate::mesh::{Point, TriMesh};
use crate::quadrature;
use crate::sparse::{self, CsrMatrix};

/// Velocity (P2, both components, zero trace) paired with pressure (P1,
/// zero lumped mean). Velocity layout: all x-dofs, then all y-dofs.
#[derive(Clone, Debug, PartialEq)]
pub struct TaylorHoodField {
    pub velocity: Vec<f64>,
    pub pressure: Vec<f64>,
}

impl TaylorHoodField {
    pub fn zeros(space: &TaylorHoodSpace) -> Self {
        TaylorHoodField {
            velocity: vec![0.0; 2 * space.p2.num_dofs],
            pressure: vec![0.0; space.p2.num_vertices],
        }
    }

    /// Velocity at vertex `i` (vertex dofs carry point values).
    pub fn velocity_at_vertex(&self, i: usize) -> [f64; 2] {
        let nd = self.velocity.len() / 2;
        [self.velocity[i], self.velocity[nd + i]]
    }
}

/// Vector-valued Taylor–Hood operators on the full velocity space.
#[derive(Clone, Debug)]
pub struct TaylorHoodOperators {
    pub vector_laplacian: CsrMatrix,
    pub velocity_mass: CsrMatrix,
    /// `B[q][d] = -(div phi_d, psi_q)`.
    pub divergence: CsrMatrix,
    /// `(u . grad w, v) + 1/2 (div u w, v)` for the frozen velocity `u`.
    pub convection: CsrMatrix,
}

/// Precomputed Taylor–Hood structures on one mesh. Scalar P2 blocks apply
/// to each velocity component.
#[derive(Clone, Debug)]
pub struct TaylorHoodSpace {
    pub p2: P2Space,
    pub mass: CsrMatrix,
    pub laplacian: CsrMatrix,
    pub divergence: CsrMatrix,
    pub lumped: LumpedMass,
}

impl TaylorHoodSpace {
    pub fn new(mesh: &TriMesh) -> Self {
        let p2 = P2Space::new(mesh);
        let nd = p2.num_dofs;
        let nv = p2.num_vertices;
        let mut m = Vec::with_capacity(36 * mesh.num_triangles());
        let mut k = Vec::with_capacity(36 * mesh.num_triangles());
        let mut b = Vec::with_capacity(36 * mesh.num_triangles());
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let (g, area) = p1_gradients(mesh, t);
            let dofs = p2.tri_dofs[t];
            let mut lm = [[0.0; 6]; 6];
            let mut lk = [[0.0; 6]; 6];
            let mut lb = [[[0.0; 2]; 6]; 3];
            for (l, w) in quadrature::degree4().iter() {
                let wa = w * area;
                let phi = p2_values(l);
                let dphi = p2_gradients(l, &g);
                for a in 0..6 {
                    for c in 0..6 {
                        lm[a][c] += wa * phi[a] * phi[c];
                        lk[a][c] += wa * (dphi[a][0] * dphi[c][0] + dphi[a][1] * dphi[c][1]);
                    }
                }
                for q in 0..3 {
                    for d in 0..6 {
                        lb[q][d][0] -= wa * l[q] * dphi[d][0];
                        lb[q][d][1] -= wa * l[q] * dphi[d][1];
                    }
                }
            }
            for a in 0..6 {
                for c in 0..6 {
                    m.push((dofs[a], dofs[c], lm[a][c]));
                    k.push((dofs[a], dofs[c], lk[a][c]));
                }
            }
            for q in 0..3 {
                for d in 0..6 {
                    b.push((tri[q], dofs[d], lb[q][d][0]));
                    b.push((tri[q], nd + dofs[d], lb[q][d][1]));
                }
            }
        }
        TaylorHoodSpace {
            mass: CsrMatrix::from_triplets(nd, nd, &m),
            laplacian: CsrMatrix::from_triplets(nd, nd, &k),
            divergence: CsrMatrix::from_triplets(nv, 2 * nd, &b),
            lumped: LumpedMass::new(mesh),
            p2,
        }
    }

    pub fn num_velocity(&self) -> usize {
        2 * self.p2.num_dofs
    }

    pub fn num_pressure(&self) -> usize {
        self.p2.num_vertices
    }

    pub fn check_velocity(&self, u: &[f64]) -> Result<()> {
        check_len(u.len(), self.num_velocity())
    }

    /// Velocity at barycentric point `l` of triangle `t`.
    pub fn velocity_at(&self, u: &[f64], t: usize, l: [f64; 3]) -> [f64; 2] {
        let nd = self.p2.num_dofs;
        [self.p2.eval(&u[..nd], t, l), self.p2.eval(&u[nd..], t, l)]
    }

    /// Scalar convection block `C[i][j] = (u . grad phi_j, phi_i) + 1/2 (div u phi_j, phi_i)`,
    /// integrated with the degree-5 rule (exact for the trilinear P2 integrand).
    pub fn convection(&self, mesh: &TriMesh, u: &[f64]) -> CsrMatrix {
        let nd = self.p2.num_dofs;
        let mut trips = Vec::with_capacity(36 * mesh.num_triangles());
        for t in 0..mesh.num_triangles() {
            let (g, area) = p1_gradients(mesh, t);
            let dofs = self.p2.tri_dofs[t];
            let ux: [f64; 6] = dofs.map(|d| u[d]);
            let uy: [f64; 6] = dofs.map(|d| u[nd + d]);
            let mut lc = [[0.0; 6]; 6];
            for (l, w) in quadrature::degree5().iter() {
                let wa = w * area;
                let phi = p2_values(l);
                let dphi = p2_gradients(l, &g);
                let (mut vx, mut vy, mut div) = (0.0, 0.0, 0.0);
                for a in 0..6 {
                    vx += ux[a] * phi[a];
                    vy += uy[a] * phi[a];
                    div += ux[a] * dphi[a][0] + uy[a] * dphi[a][1];
                }
                for a in 0..6 {
                    for c in 0..6 {
                        let adv = vx * dphi[c][0] + vy * dphi[c][1];
                        lc[a][c] += wa * phi[a] * (adv + 0.5 * div * phi[c]);
                    }
                }
            }
            for a in 0..6 {
                for c in 0..6 {
                    trips.push((dofs[a], dofs[c], lc[a][c]));
                }
            }
        }
        CsrMatrix::from_triplets(nd, nd, &trips)
    }

    /// `||u||_{L^2}`.
    pub fn l2_norm(&self, u: &[f64]) -> f64 {
        let nd = self.p2.num_dofs;
        (self.mass.quadratic_form(&u[..nd]) + self.mass.quadratic_form(&u[nd..])).max(0.0).sqrt()
    }

    /// `||grad u||_{L^2}`.
    pub fn grad_l2_norm(&self, u: &[f64]) -> f64 {
        let nd = self.p2.num_dofs;
        (self.laplacian.quadratic_form(&u[..nd]) + self.laplacian.quadratic_form(&u[nd..]))
            .max(0.0)
            .sqrt()
    }

    /// The vector `((div u, psi_q))_q`.
    pub fn divergence_residual(&self, u: &[f64]) -> Vec<f64> {
        self.divergence.matvec(u).into_iter().map(|v| -v).collect()
    }

    /// Solves the saddle system `[A Bt; B 0] (u, p) = (f, 0)` where `A` acts
    /// componentwise, with homogeneous Dirichlet velocity and zero-mean
    /// pressure.
    pub fn saddle_solve(&self, a: &CsrMatrix, f: &[f64], rel_tol: f64) -> Result<TaylorHoodField> {
        let nd = self.p2.num_dofs;
        let nv = self.p2.num_vertices;
        check_len(f.len(), 2 * nd)?;
        let n = 2 * nd + nv;
        let mut trips = Vec::with_capacity(2 * a.nnz() + 2 * self.divergence.nnz() + nv);
        for i in 0..nd {
            for comp in 0..2 {
                let row = comp * nd + i;
                if self.p2.boundary[i] {
                    trips.push((row, row, 1.0));
                } else {
                    for (j, v) in a.row(i) {
                        trips.push((row, comp * nd + j, v));
                    }
                }
            }
        }
        for q in 0..nv {
            for (d, v) in self.divergence.row(q) {
                if !self.p2.boundary[d % nd] {
                    trips.push((d, 2 * nd + q, v));
                }
                if q != 0 {
                    trips.push((2 * nd + q, d, v));
                }
            }
        }
        // pressure is fixed up to a constant; pin dof 0, then remove the mean
        trips.push((2 * nd, 2 * nd, 1.0));
        let mut rhs = vec![0.0; n];
        for d in 0..2 * nd {
            if !self.p2.boundary[d % nd] {
                rhs[d] = f[d];
            }
        }
        let mat = CsrMatrix::from_triplets(n, n, &trips);
        let x = sparse::solve(&mat, &rhs, rel_tol)?;
        let velocity = x[..2 * nd].to_vec();
        let mut pressure = x[2 * nd..].to_vec();
        let mean = self.lumped.mean(&pressure);
        pressure.iter_mut().for_each(|p| *p -= mean);
        Ok(TaylorHoodField { velocity, pressure })
    }

    /// `((f, phi_d))_d` for a vector function, by the degree-6 rule.
    pub fn load_vector(&self, mesh: &TriMesh, f: &impl Fn(Point) -> [f64; 2]) -> Result<Vec<f64>> {
        let nd = self.p2.num_dofs;
        let mut out = vec![0.0; 2 * nd];
        for t in 0..mesh.num_triangles() {
            let area = mesh.triangle_area(t);
            let dofs = self.p2.tri_dofs[t];
            for (l, w) in quadrature::degree6().iter() {
                let v = f(map_point(mesh, t, l));
                if !v[0].is_finite() || !v[1].is_finite() {
                    return Err(Error::NonFiniteSample(t));
                }
                let phi = p2_values(l);
                for a in 0..6 {
                    out[dofs[a]] += w * area * v[0] * phi[a];
                    out[nd + dofs[a]] += w * area * v[1] * phi[a];
                }
            }
        }
        Ok(out)
    }

    /// `||f||_{L^2}` by the same degree-6 rule as [`TaylorHoodSpace::load_vector`].
    pub fn function_l2_norm(&self, mesh: &TriMesh, f: &impl Fn(Point) -> [f64; 2]) -> f64 {
        let mut acc = 0.0;
        for t in 0..mesh.num_triangles() {
            let area = mesh.triangle_area(t);
            for (l, w) in quadrature::degree6().iter() {
                let v = f(map_point(mesh, t, l));
                acc += w * area * (v[0] * v[0] + v[1] * v[1]);
            }
        }
        acc.sqrt()
    }

    /// Ritz–Darcy projection: `(w, v) + (grad p, v) = (u, v)`, `(div w, q) = 0`.
    pub fn ritz_darcy_project(
        &self,
        mesh: &TriMesh,
        u: impl Fn(Point) -> [f64; 2],
    ) -> Result<TaylorHoodField> {
        let f = self.load_vector(mesh, &u)?;
        self.saddle_solve(&self.mass, &f, 1e-12)
    }
}

/// Assembles the vector-valued Taylor–Hood operators for a frozen velocity.
pub fn assemble_taylor_hood(mesh: &TriMesh, u_frozen: &[f64]) -> Result<TaylorHoodOperators> {
    let space = TaylorHoodSpace::new(mesh);
    space.check_velocity(u_frozen)?;
    let nd = space.p2.num_dofs;
    let block = |m: &CsrMatrix| {
        let mut t = m.triplets();
        let shifted: Vec<_> = t.iter().map(|&(i, j, v)| (i + nd, j + nd, v)).collect();
        t.extend(shifted);
        CsrMatrix::from_triplets(2 * nd, 2 * nd, &t)
    };
    Ok(TaylorHoodOperators {
        vector_laplacian: block(&space.laplacian),
        velocity_mass: block(&space.mass),
        convection: block(&space.convection(mesh, u_frozen)),
        divergence: space.divergence.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_disc_mesh;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_zero_trace(space: &TaylorHoodSpace, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let nd = space.p2.num_dofs;
        (0..2 * nd)
            .map(|d| if space.p2.boundary[d % nd] { 0.0 } else { rng.gen_range(-1.0..1.0) })
            .collect()
    }

    #[test]
    fn zero_velocity_gives_zero_convection() {
        let mesh = generate_disc_mesh([0.0, 0.0], 1.0, 0.4).unwrap();
        let ops = assemble_taylor_hood(&mesh, &vec![0.0; 2 * P2Space::new(&mesh).num_dofs]).unwrap();
        assert_eq!(ops.convection.frobenius_norm(), 0.0);
    }

    #[test]
    fn convection_is_skew_for_zero_trace_velocity() {
        let mesh = generate_disc_mesh([0.0, 0.1], 1.0, 0.3).unwrap();
        let space = TaylorHoodSpace::new(&mesh);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let u = random_zero_trace(&space, &mut rng);
        let c = space.convection(&mesh, &u);
        let scale = c.frobenius_norm();
        for _ in 0..20 {
            let x: Vec<f64> = (0..space.p2.num_dofs).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let xx: f64 = x.iter().map(|v| v * v).sum();
            assert!(c.quadratic_form(&x).abs() <= 1e-12 * scale * xx);
        }
    }

    #[test]
    fn p2_mass_integrates_constants() {
        let mesh = generate_disc_mesh([0.0, 0.0], 1.0, 0.3).unwrap();
        let space = TaylorHoodSpace::new(&mesh);
        let ones = vec![1.0; space.p2.num_dofs];
        assert!((space.mass.quadratic_form(&ones) - mesh.area()).abs() < 1e-12);
        assert!(space.laplacian.matvec(&ones).iter().all(|v| v.abs() < 1e-11));
    }

    #[test]
    fn ritz_darcy_of_rotational_field() {
        let mesh = generate_disc_mesh([0.0, 0.0], 1.0, 0.2).unwrap();
        let space = TaylorHoodSpace::new(&mesh);
        let field = |p: Point| [-p[1] + p[0] * p[0], p[0] * (1.0 + p[1])];
        let w = space.ritz_darcy_project(&mesh, field).unwrap();
        let norm_u = space.function_l2_norm(&mesh, &field);
        let norm_w = space.l2_norm(&w.velocity);
        assert!(norm_w <= norm_u + 1e-10);
        assert!(norm_w > 0.3 * norm_u);
        let div = space.divergence_residual(&w.velocity);
        assert!(sparse::norm2(&div) <= 1e-10 * space.divergence.frobenius_norm() * norm_w);
    }

    #[test]
    fn ritz_darcy_of_constant_field() {
        let mesh = generate_disc_mesh([0.0, 0.1], 1.0, 0.25).unwrap();
        let space = TaylorHoodSpace::new(&mesh);
        let field = |_p: Point| [1.0, 0.0];
        let w = space.ritz_darcy_project(&mesh, field).unwrap();
        let nd = space.p2.num_dofs;
        for d in 0..2 * nd {
            if space.p2.boundary[d % nd] {
                assert_eq!(w.velocity[d], 0.0);
            }
        }
        assert!(space.l2_norm(&w.velocity) <= space.function_l2_norm(&mesh, &field) + 1e-10);
        // a constant field is a gradient, so its projection vanishes
        let div = space.divergence_residual(&w.velocity);
        let scale = space.divergence.frobenius_norm() * space.function_l2_norm(&mesh, &field);
        assert!(sparse::norm2(&div) <= 1e-10 * scale);
        assert!(space.l2_norm(&w.velocity) < 1e-10);
        assert!(space.lumped.integral(&w.pressure).abs() <= 1e-12 * mesh.area() * w.pressure.iter().fold(0.0f64, |m, p| m.max(p.abs())));
        // idempotent on its range
        let again = {
            let f = space.mass.matvec(&w.velocity[..nd]);
            let g = space.mass.matvec(&w.velocity[nd..]);
            let rhs: Vec<f64> = f.into_iter().chain(g).collect();
            space.saddle_solve(&space.mass, &rhs, 1e-12).unwrap()
        };
        for (a, b) in again.velocity.iter().zip(&w.velocity) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}
