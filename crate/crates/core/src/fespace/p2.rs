use crate::mesh::{Point, TriMesh};

/// Local vertex pairs carrying the edge-midpoint dofs 3, 4, 5.
pub const P2_EDGES: [[usize; 2]; 3] = [[0, 1], [1, 2], [2, 0]];

/// Continuous P2 dof map: vertex dofs first, then one dof per edge in the
/// mesh's sorted edge order.
#[derive(Clone, Debug)]
pub struct P2Space {
    pub num_vertices: usize,
    pub num_dofs: usize,
    /// Per triangle: three vertex dofs then the midpoints of its edges
    /// `(0,1), (1,2), (2,0)`.
    pub tri_dofs: Vec<[usize; 6]>,
    pub boundary: Vec<bool>,
    pub points: Vec<Point>,
}

impl P2Space {
    pub fn new(mesh: &TriMesh) -> Self {
        let nv = mesh.num_vertices();
        let ne = mesh.edges().len();
        let tri_dofs = mesh
            .triangles()
            .iter()
            .map(|&[a, b, c]| {
                let e = |x: usize, y: usize| nv + mesh.edge_index(x, y).unwrap();
                [a, b, c, e(a, b), e(b, c), e(c, a)]
            })
            .collect();
        let mut boundary = mesh.boundary_flags().to_vec();
        let mut points = mesh.vertices().to_vec();
        for (e, &[a, b]) in mesh.edges().iter().enumerate() {
            boundary.push(mesh.is_boundary_edge(e));
            let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
            points.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
        }
        P2Space {
            num_vertices: nv,
            num_dofs: nv + ne,
            tri_dofs,
            boundary,
            points,
        }
    }

    /// Evaluates a scalar P2 function given by its dofs at barycentric point `l` of triangle `t`.
    pub fn eval(&self, dofs: &[f64], t: usize, l: [f64; 3]) -> f64 {
        let phi = p2_values(l);
        self.tri_dofs[t].iter().zip(phi).map(|(&d, p)| dofs[d] * p).sum()
    }
}

/// P2 shape functions at barycentric coordinates `l`.
#[inline]
pub fn p2_values(l: [f64; 3]) -> [f64; 6] {
    [
        l[0] * (2.0 * l[0] - 1.0),
        l[1] * (2.0 * l[1] - 1.0),
        l[2] * (2.0 * l[2] - 1.0),
        4.0 * l[0] * l[1],
        4.0 * l[1] * l[2],
        4.0 * l[2] * l[0],
    ]
}

/// Gradients of the P2 shape functions given barycentric gradients `g`.
#[inline]
pub fn p2_gradients(l: [f64; 3], g: &[[f64; 2]; 3]) -> [[f64; 2]; 6] {
    let mut out = [[0.0; 2]; 6];
    for k in 0..3 {
        let s = 4.0 * l[k] - 1.0;
        out[k] = [s * g[k][0], s * g[k][1]];
    }
    for (m, &[a, b]) in P2_EDGES.iter().enumerate() {
        out[3 + m] = [
            4.0 * (l[b] * g[a][0] + l[a] * g[b][0]),
            4.0 * (l[b] * g[a][1] + l[a] * g[b][1]),
        ];
    }
    out
}
