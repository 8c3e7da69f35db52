mod common;

use std::f64::consts::PI;

use ksns_core::fespace::{averaged_interpolate, nodal_interpolate, TaylorHoodSpace};
use ksns_core::mesh::generate_disc_mesh;
use ksns_core::sparse::norm2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn ritz_darcy_on_random_fields() {
    let mesh = generate_disc_mesh([0.0, 0.1], 1.0, 0.2).unwrap();
    let space = TaylorHoodSpace::new(&mesh);
    let nd = space.p2.num_dofs;
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..100 {
        let field = common::random_smooth_field(&mut rng);
        let w = space.ritz_darcy_project(&mesh, &field).unwrap();
        assert!(norm2(&space.divergence_residual(&w.velocity)) <= 1e-8);
        assert!(space.l2_norm(&w.velocity) <= space.function_l2_norm(&mesh, &field) * (1.0 + 1e-12));
        for d in 0..2 * nd {
            if space.p2.boundary[d % nd] {
                assert_eq!(w.velocity[d], 0.0);
            }
        }
    }
}

#[test]
fn ritz_darcy_fixes_discrete_solenoidal_fields() {
    let mesh = generate_disc_mesh([0.0, 0.1], 1.0, 0.25).unwrap();
    let space = TaylorHoodSpace::new(&mesh);
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let w = space.ritz_darcy_project(&mesh, common::random_smooth_field(&mut rng)).unwrap();
    // project the P2 function w itself
    let again = space
        .ritz_darcy_project(&mesh, |p| {
            let (t, l) = locate(&mesh, p);
            space.velocity_at(&w.velocity, t, l)
        })
        .unwrap();
    let diff: Vec<f64> = again.velocity.iter().zip(&w.velocity).map(|(a, b)| a - b).collect();
    assert!(space.l2_norm(&diff) <= 1e-9 * space.l2_norm(&w.velocity));

    let zero = space.ritz_darcy_project(&mesh, |_| [0.0, 0.0]).unwrap();
    assert!(zero.velocity.iter().all(|&v| v == 0.0));
}

/// Triangle and barycentric coordinates of a point inside the mesh.
fn locate(mesh: &ksns_core::mesh::TriMesh, p: [f64; 2]) -> (usize, [f64; 3]) {
    let mut best = (0, [1.0, 0.0, 0.0], f64::NEG_INFINITY);
    for t in 0..mesh.num_triangles() {
        let [a, b, c] = mesh.triangle_points(t);
        let det = (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
        let l1 = ((p[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (p[1] - a[1])) / det;
        let l2 = ((b[0] - a[0]) * (p[1] - a[1]) - (p[0] - a[0]) * (b[1] - a[1])) / det;
        let l = [1.0 - l1 - l2, l1, l2];
        let worst = l.iter().cloned().fold(f64::INFINITY, f64::min);
        if worst > best.2 {
            best = (t, l, worst);
        }
        if worst >= -1e-14 {
            return (t, l);
        }
    }
    (best.0, best.1)
}

#[test]
fn gaussian_initial_density_mass() {
    for (eta0, h) in [(350.0, 0.05), (400.0, 0.05), (450.0, 0.05)] {
        let mesh = generate_disc_mesh([0.0, 0.1], 1.0, h).unwrap();
        let n0 = averaged_interpolate(&mesh, |p| eta0 * (-100.0 * (p[0] * p[0] + p[1] * p[1])).exp()).unwrap();
        assert!(n0.values.iter().all(|&v| v > 0.0));
        assert!(n0.max() <= eta0);
        let lumped = ksns_core::fespace::LumpedMass::new(&mesh);
        let mass = lumped.integral(&n0.values);
        let exact = eta0 * PI / 100.0;
        assert!((mass - exact).abs() <= 0.01 * exact, "eta0 {eta0}: {mass} vs {exact}");
    }
}

#[test]
fn interpolants_are_bounded_by_samples() {
    let mesh = generate_disc_mesh([0.0, 0.1], 1.0, 0.1).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..20 {
        let a: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-3.0..3.0));
        let f = |p: [f64; 2]| a[0] * (a[1] * p[0]).sin() + a[2] * (a[3] * p[1]).cos();
        let bound = a[0].abs() + a[2].abs();
        let avg = averaged_interpolate(&mesh, f).unwrap();
        assert!(avg.values.iter().all(|v| v.abs() <= bound));
        let nod = nodal_interpolate(&mesh, f);
        for (i, &p) in mesh.vertices().iter().enumerate() {
            assert_eq!(nod.values[i], f(p));
        }
    }
    let constant = averaged_interpolate(&mesh, |_| 5.0).unwrap();
    assert!(constant.values.iter().all(|&v| (v - 5.0).abs() < 1e-14));
}
