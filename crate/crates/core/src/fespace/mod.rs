//! Finite-element spaces: nodal P1 fields with lumped and consistent mass,
//! interpolation operators, and the Taylor–Hood velocity/pressure pair.

mod p2;
mod taylor_hood;

pub use p2::{p2_gradients, p2_values, P2Space, P2_EDGES};
pub use taylor_hood::{assemble_taylor_hood, TaylorHoodField, TaylorHoodOperators, TaylorHoodSpace};

use crate::error::{Error, Result};
use crate::mesh::{Point, TriMesh};
use crate::quadrature;
use crate::sparse::CsrMatrix;

/// Nodal values of a continuous piecewise-linear function.
#[derive(Clone, Debug, PartialEq)]
pub struct P1Field {
    pub values: Vec<f64>,
}

impl P1Field {
    pub fn new(values: Vec<f64>) -> Self {
        P1Field { values }
    }

    pub fn constant(mesh: &TriMesh, value: f64) -> Self {
        P1Field { values: vec![value; mesh.num_vertices()] }
    }

    pub fn zeros(mesh: &TriMesh) -> Self {
        Self::constant(mesh, 0.0)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Fails unless the field has one value per mesh vertex.
    pub fn check(&self, mesh: &TriMesh) -> Result<()> {
        check_len(self.values.len(), mesh.num_vertices())
    }
}

pub fn check_len(got: usize, expected: usize) -> Result<()> {
    if got == expected {
        Ok(())
    } else {
        Err(Error::MeshMismatch { expected, got })
    }
}

/// Gradients of the barycentric coordinates of triangle `t` and its area.
pub fn p1_gradients(mesh: &TriMesh, t: usize) -> ([[f64; 2]; 3], f64) {
    let p = mesh.triangle_points(t);
    let area = mesh.triangle_area(t);
    let mut g = [[0.0; 2]; 3];
    for k in 0..3 {
        let a = p[(k + 1) % 3];
        let b = p[(k + 2) % 3];
        g[k] = [(a[1] - b[1]) / (2.0 * area), (b[0] - a[0]) / (2.0 * area)];
    }
    (g, area)
}

/// Physical point of barycentric coordinates `l` in triangle `t`.
pub fn map_point(mesh: &TriMesh, t: usize, l: [f64; 3]) -> Point {
    let p = mesh.triangle_points(t);
    [
        l[0] * p[0][0] + l[1] * p[1][0] + l[2] * p[2][0],
        l[0] * p[0][1] + l[1] * p[1][1] + l[2] * p[2][1],
    ]
}

/// Diagonal of the lumped mass matrix, `m_i = (1, phi_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct LumpedMass {
    pub weights: Vec<f64>,
}

impl LumpedMass {
    pub fn new(mesh: &TriMesh) -> Self {
        let mut weights = vec![0.0; mesh.num_vertices()];
        for (t, tri) in mesh.triangles().iter().enumerate() {
            let a = mesh.triangle_area(t) / 3.0;
            for &v in tri {
                weights[v] += a;
            }
        }
        LumpedMass { weights }
    }

    /// `|Omega|`.
    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// `(x, 1)_h`.
    pub fn integral(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(m, v)| m * v).sum()
    }

    /// `(x, y)_h`.
    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        self.weights.iter().zip(x).zip(y).map(|((m, a), b)| m * a * b).sum()
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        self.inner(x, x).sqrt()
    }

    pub fn mean(&self, x: &[f64]) -> f64 {
        self.integral(x) / self.total()
    }
}

/// `(x, y)_h = sum_i m_i x_i y_i`.
pub fn lumped_inner_product(lumped: &LumpedMass, x: &P1Field, y: &P1Field) -> Result<f64> {
    check_len(x.len(), lumped.weights.len())?;
    check_len(y.len(), lumped.weights.len())?;
    Ok(lumped.inner(&x.values, &y.values))
}

/// P1 stiffness, consistent mass and lumped mass.
#[derive(Clone, Debug)]
pub struct ScalarMatrices {
    pub stiffness: CsrMatrix,
    pub mass: CsrMatrix,
    pub lumped: LumpedMass,
}

pub fn assemble_scalar_matrices(mesh: &TriMesh) -> ScalarMatrices {
    let n = mesh.num_vertices();
    let mut k = Vec::with_capacity(9 * mesh.num_triangles());
    let mut m = Vec::with_capacity(9 * mesh.num_triangles());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let (g, area) = p1_gradients(mesh, t);
        for a in 0..3 {
            for b in 0..3 {
                k.push((tri[a], tri[b], area * (g[a][0] * g[b][0] + g[a][1] * g[b][1])));
                let mm = if a == b { area / 6.0 } else { area / 12.0 };
                m.push((tri[a], tri[b], mm));
            }
        }
    }
    ScalarMatrices {
        stiffness: CsrMatrix::from_triplets(n, n, &k),
        mass: CsrMatrix::from_triplets(n, n, &m),
        lumped: LumpedMass::new(mesh),
    }
}

/// `i_h f`: nodal values `f(a_i)`.
pub fn nodal_interpolate(mesh: &TriMesh, f: impl Fn(Point) -> f64) -> P1Field {
    P1Field::new(mesh.vertices().iter().map(|&p| f(p)).collect())
}

/// Mean of `f` over triangle `t` by the degree-6 rule.
pub fn triangle_mean(mesh: &TriMesh, t: usize, f: &impl Fn(Point) -> f64) -> Result<f64> {
    let mut acc = 0.0;
    for (l, w) in quadrature::degree6().iter() {
        let v = f(map_point(mesh, t, l));
        if !v.is_finite() {
            return Err(Error::NonFiniteSample(t));
        }
        acc += w * v;
    }
    Ok(acc)
}

/// Averaged interpolation: the value at `a_i` is the mean of `f` over the
/// lowest-index triangle containing `a_i`.
pub fn averaged_interpolate(mesh: &TriMesh, f: impl Fn(Point) -> f64) -> Result<P1Field> {
    let mut cache: Vec<Option<f64>> = vec![None; mesh.num_triangles()];
    let mut values = Vec::with_capacity(mesh.num_vertices());
    for i in 0..mesh.num_vertices() {
        let t = mesh.macroelement(i)[0];
        let v = match cache[t] {
            Some(v) => v,
            None => {
                let v = triangle_mean(mesh, t, &f)?;
                cache[t] = Some(v);
                v
            }
        };
        values.push(v);
    }
    Ok(P1Field::new(values))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::generate_disc_mesh;

    fn reference_triangle() -> TriMesh {
        TriMesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).unwrap()
    }

    fn unit_square() -> TriMesh {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
        TriMesh::new(v, vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]]).unwrap()
    }

    #[test]
    fn reference_stiffness_diagonal() {
        let s = assemble_scalar_matrices(&reference_triangle());
        let d = s.stiffness.diagonal();
        assert!((d[0] - 1.0).abs() < 1e-15);
        assert!((d[1] - 0.5).abs() < 1e-15);
        assert!((d[2] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn partition_of_unity() {
        let mesh = generate_disc_mesh([0.0, 0.1], 1.0, 0.2).unwrap();
        let s = assemble_scalar_matrices(&mesh);
        let ones = vec![1.0; mesh.num_vertices()];
        let scale = s.stiffness.frobenius_norm();
        assert!(s.stiffness.matvec(&ones).iter().all(|v| v.abs() <= 1e-12 * scale));
        for (r, m) in s.mass.row_sums().iter().zip(&s.lumped.weights) {
            assert!((r - m).abs() <= 1e-12 * m);
            assert!(*m > 0.0);
        }
        assert!((s.lumped.total() - mesh.area()).abs() <= 1e-12 * mesh.area());
    }

    #[test]
    fn lumped_inner_product_cases() {
        let sq = unit_square();
        let lm = LumpedMass::new(&sq);
        let one = P1Field::constant(&sq, 1.0);
        assert!((lumped_inner_product(&lm, &one, &one).unwrap() - 1.0).abs() < 1e-15);

        let tri = reference_triangle();
        let lt = LumpedMass::new(&tri);
        let phi = P1Field::new(vec![1.0, 0.0, 0.0]);
        assert!((lumped_inner_product(&lt, &phi, &phi).unwrap() - 0.5 / 3.0).abs() < 1e-15);

        let short = P1Field::new(vec![1.0]);
        assert!(lumped_inner_product(&lt, &short, &phi).is_err());
    }

    #[test]
    fn nodal_interpolation_of_square() {
        let sq = unit_square();
        let f = nodal_interpolate(&sq, |p| p[0] * p[0]);
        for (i, p) in sq.vertices().iter().enumerate() {
            assert_eq!(f.values[i], p[0] * p[0]);
        }
        // barycenter of triangle 0: interpolant differs from x^2
        let b = sq.barycenter(0);
        let tri = sq.triangles()[0];
        let interp: f64 = tri.iter().map(|&v| f.values[v]).sum::<f64>() / 3.0;
        assert!(interp - b[0] * b[0] > 0.0);
    }

    #[test]
    fn averaged_interpolation_properties() {
        let mesh = generate_disc_mesh([0.0, 0.1], 1.0, 0.2).unwrap();
        let c = averaged_interpolate(&mesh, |_| 5.0).unwrap();
        assert!(c.values.iter().all(|&v| (v - 5.0).abs() < 1e-14));
        let g = averaged_interpolate(&mesh, |p| (-100.0 * (p[0] * p[0] + p[1] * p[1])).exp()).unwrap();
        assert!(g.min() > 0.0 && g.max() <= 1.0);
        assert!(matches!(
            averaged_interpolate(&mesh, |_| f64::NAN),
            Err(Error::NonFiniteSample(_))
        ));
    }
}
