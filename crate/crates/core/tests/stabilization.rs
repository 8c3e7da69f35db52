mod common;

use common::{dot, jittered_square};
use ksns_core::fespace::P1Field;
use ksns_core::mesh::{generate_disc_mesh, TriMesh};
use ksns_core::operators::gamma_conv;
use ksns_core::solver::{Discretization, StepOperators};
use ksns_core::stabilization::{assemble_bc, assemble_bn, shock_detector_all, StabilizationMatrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const EPS: f64 = 1e-6;
const Q: f64 = 2.0;

fn random_mesh(rng: &mut ChaCha8Rng) -> TriMesh {
    if rng.gen_bool(0.25) {
        let h = rng.gen_range(0.25..0.5);
        generate_disc_mesh([rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)], 1.0, h).unwrap()
    } else {
        let nx = rng.gen_range(2..7);
        let jitter = rng.gen_range(0.0..0.4);
        jittered_square(rng, nx, jitter)
    }
}

fn random_field(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    match rng.gen_range(0..3) {
        0 => (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        1 => (0..n).map(|_| 10f64.powf(rng.gen_range(-4.0..3.0))).collect(),
        // a few repeated levels so plateaus and ties occur
        _ => (0..n).map(|_| rng.gen_range(0..4) as f64).collect(),
    }
}

fn strict_local_min(mesh: &TriMesh, eta: &[f64], i: usize) -> bool {
    mesh.adjacency(i).iter().all(|&j| eta[j] > eta[i])
}

fn full_sym_ring(mesh: &TriMesh, i: usize) -> bool {
    !mesh.is_boundary_vertex(i) && mesh.sym_nodes_of(i).iter().all(Option::is_some)
}

/// Scale of a stabilization matrix for relative tolerances.
fn scale(b: &StabilizationMatrix) -> f64 {
    b.nu.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE)
}

fn check_graph_laplacian(mesh: &TriMesh, b: &StabilizationMatrix, rng: &mut ChaCha8Rng) {
    assert!(b.nu.iter().all(|&v| v >= 0.0 && v.is_finite()));
    let a = b.to_csr(mesh);
    for (i, j, v) in a.triplets() {
        assert_eq!(v, a.get(j, i));
        if i != j {
            assert!(v <= 0.0);
        }
    }
    let s = scale(b);
    let ones = vec![1.0; mesh.num_vertices()];
    let deg = mesh.adjacency(0).len().max(6) as f64;
    assert!(b.apply(mesh, &ones).iter().all(|v| v.abs() <= 1e-13 * s * deg));
    assert!(a.matvec(&ones).iter().all(|v| v.abs() <= 1e-13 * s * deg));
    for _ in 0..50 {
        let x: Vec<f64> = (0..mesh.num_vertices()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let xx = dot(&x, &x);
        assert!(b.form(mesh, &x, &x) >= -1e-12 * s * xx);
        assert!(a.quadratic_form(&x) >= -1e-12 * s * xx);
    }
}

#[test]
fn hexagon_linear_field_gives_zero_detector() {
    let mesh = common::hexagon_patch();
    let eta: Vec<f64> = mesh.vertices().iter().map(|p| 2.0 * p[0] - 0.5 * p[1] + 1.0).collect();
    assert!(shock_detector_all(&mesh, &eta, Q)[0] <= 1e-12);
    let flat = vec![3.0; mesh.num_vertices()];
    assert!(shock_detector_all(&mesh, &flat, Q).iter().all(|&a| a == 0.0));
}

#[test]
fn stabilization_operators_on_disc_states() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let disc = Discretization::new(generate_disc_mesh([0.0, 0.1], 1.0, 0.15).unwrap());
    let mesh = &disc.mesh;
    let nv = mesh.num_vertices();
    for _ in 0..10 {
        let u = common::random_zero_trace(&disc.th, &mut rng);
        let ops = StepOperators::new(&disc, &u, 1e-2).unwrap();
        let n: Vec<f64> = (0..nv).map(|_| 10f64.powf(rng.gen_range(-3.0..2.0))).collect();
        let c: Vec<f64> = (0..nv).map(|_| rng.gen_range(0.0..5.0)).collect();
        let bn = assemble_bn(mesh, &n, &ops.transport, &disc.scalar.stiffness, EPS, Q);
        let bc = assemble_bc(mesh, &c, &ops.c_operator, Q);
        check_graph_laplacian(mesh, &bn, &mut rng);
        check_graph_laplacian(mesh, &bc, &mut rng);

        // where alpha = 1 the stabilized off-diagonal coupling is nonpositive
        let alpha_n = shock_detector_all(mesh, &n, Q);
        let alpha_c = shock_detector_all(mesh, &c, Q);
        for (e, &[i, j]) in mesh.edges().iter().enumerate() {
            for (a, b) in [(i, j), (j, i)] {
                if alpha_c[a] == 1.0 {
                    assert!(ops.c_operator.get(a, b) - bc.nu[e] <= 1e-12 * scale(&bc));
                }
                if alpha_n[a] == 1.0 && n[a] != n[b] {
                    let t = ops.transport.get(a, b) - ops.transport.get(b, a);
                    let coupling = disc.scalar.stiffness.get(a, b) - gamma_conv(n[a], n[b], EPS) * t / (n[b] - n[a]);
                    assert!(coupling - bn.nu[e] <= 1e-12 * scale(&bn));
                }
            }
        }
    }
}

#[test]
fn linear_density_gives_zero_bn() {
    let disc = Discretization::new(generate_disc_mesh([0.0, 0.1], 1.0, 0.2).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let u = common::random_zero_trace(&disc.th, &mut rng);
    let ops = StepOperators::new(&disc, &u, 1e-2).unwrap();
    let n = P1Field::new(disc.mesh.vertices().iter().map(|p| 5.0 + p[0] + 0.3 * p[1]).collect());
    let bn = assemble_bn(&disc.mesh, &n.values, &ops.transport, &disc.scalar.stiffness, EPS, Q);
    let alpha = shock_detector_all(&disc.mesh, &n.values, Q);
    for (e, &[i, j]) in disc.mesh.edges().iter().enumerate() {
        if alpha[i] <= 1e-12 && alpha[j] <= 1e-12 {
            assert!(bn.nu[e] <= 1e-10);
        }
    }
}

#[test]
fn spike_activates_density_diffusion() {
    let disc = Discretization::new(common::five_vertex_mesh());
    // uniform drift: the downstream spike edges see a positive f
    let nd = disc.th.p2.num_dofs;
    let u: Vec<f64> = (0..2 * nd).map(|d| if d < nd { 200.0 } else { 50.0 }).collect();
    let ops = StepOperators::new(&disc, &u, 1e-2).unwrap();
    let n = [1.0, 1.0, 1.0, 1.0, 40.0];
    let bn = assemble_bn(&disc.mesh, &n, &ops.transport, &disc.scalar.stiffness, EPS, Q);
    let spike: Vec<f64> = disc
        .mesh
        .edges()
        .iter()
        .zip(&bn.nu)
        .filter(|(e, _)| e.contains(&4))
        .map(|(_, &v)| v)
        .collect();
    assert!(spike.iter().any(|&v| v > 0.0));
    assert!(bn.form(&disc.mesh, &n, &n) >= 0.0);
}

#[test]
fn smaller_time_step_does_not_shrink_bc() {
    let disc = Discretization::new(generate_disc_mesh([0.0, 0.1], 1.0, 0.2).unwrap());
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let u: Vec<f64> = common::random_zero_trace(&disc.th, &mut rng).iter().map(|v| 0.1 * v).collect();
    let c: Vec<f64> = (0..disc.num_vertices()).map(|_| rng.gen_range(0.0..1.0)).collect();
    let coarse = assemble_bc(&disc.mesh, &c, &StepOperators::new(&disc, &u, 1e-2).unwrap().c_operator, Q);
    let fine = assemble_bc(&disc.mesh, &c, &StepOperators::new(&disc, &u, 1e-4).unwrap().c_operator, Q);
    assert!(coarse.nu.iter().zip(&fine.nu).all(|(a, b)| b >= a));
    assert!(fine.nu.iter().any(|&v| v > 0.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn detector_bounds_and_minima(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mesh = random_mesh(&mut rng);
        for _ in 0..40 {
            let eta = random_field(&mut rng, mesh.num_vertices());
            let alpha = shock_detector_all(&mesh, &eta, Q);
            for (i, &a) in alpha.iter().enumerate() {
                prop_assert!((0.0..=1.0).contains(&a), "alpha {a} at {i}");
                if strict_local_min(&mesh, &eta, i) {
                    prop_assert_eq!(a, 1.0);
                }
            }
        }
    }

    #[test]
    fn detector_vanishes_on_linear_fields(seed in any::<u64>(), gx in -10.0f64..10.0, gy in -10.0f64..10.0, c0 in -5.0f64..5.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mesh = random_mesh(&mut rng);
        let eta: Vec<f64> = mesh.vertices().iter().map(|p| c0 + gx * p[0] + gy * p[1]).collect();
        let alpha = shock_detector_all(&mesh, &eta, Q);
        for i in 0..mesh.num_vertices() {
            if full_sym_ring(&mesh, i) {
                prop_assert!(alpha[i] <= 1e-12, "alpha {} at {}", alpha[i], i);
            }
        }
    }
}
