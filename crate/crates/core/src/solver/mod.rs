//! Semi-implicit time stepping: Picard iteration on the coupled density and
//! chemoattractant equations followed by a linearized Navier–Stokes solve.

mod run;

pub use run::{run_simulation, RunOutcome, Simulation, StopReason};

use crate::diagnostics::{verify_step_invariants, InvariantFlags};
use crate::error::{Error, Result};
use crate::fespace::{
    assemble_scalar_matrices, averaged_interpolate, P1Field, ScalarMatrices, TaylorHoodField, TaylorHoodSpace,
};
use crate::mesh::{Point, TriMesh};
use crate::operators::{c_convection_matrix, chemotaxis_load, convection_starred_load, gamma_chemo, gamma_conv_checked, transport_matrix};
use crate::sparse::{self, CsrMatrix};
use crate::stabilization::{assemble_bc, assemble_bn, StabilizationMatrix};

/// Relative residual required of the scalar linear solves.
pub const SCALAR_RESIDUAL: f64 = 1e-10;
/// Relative residual required of the saddle-point solve.
pub const SADDLE_RESIDUAL: f64 = 1e-8;

/// Mesh plus the operators that depend only on it.
#[derive(Clone, Debug)]
pub struct Discretization {
    pub mesh: TriMesh,
    pub scalar: ScalarMatrices,
    pub th: TaylorHoodSpace,
}

impl Discretization {
    pub fn new(mesh: TriMesh) -> Self {
        let scalar = assemble_scalar_matrices(&mesh);
        let th = TaylorHoodSpace::new(&mesh);
        Discretization { mesh, scalar, th }
    }

    pub fn num_vertices(&self) -> usize {
        self.mesh.num_vertices()
    }
}

/// How the starred fluxes of the density equation enter each Picard sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NLinearization {
    /// Fluxes are frozen pair by pair and advanced by upwinding with respect
    /// to the donor vertex; every sweep is an M-matrix solve.
    Implicit,
    /// Fluxes are evaluated at the previous iterate and moved to the right-hand side.
    Lagged,
}

impl NLinearization {
    pub fn as_str(self) -> &'static str {
        match self {
            NLinearization::Implicit => "implicit",
            NLinearization::Lagged => "lagged",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "implicit" => Some(NLinearization::Implicit),
            "lagged" => Some(NLinearization::Lagged),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverParams {
    pub k: f64,
    pub eps: f64,
    pub q: f64,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    /// Number of times a failed step may be retried with halved substeps.
    pub max_halvings: usize,
    pub linearization: NLinearization,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            k: 1e-2,
            eps: 1e-6,
            q: 2.0,
            picard_tol: 1e-3,
            picard_max_iters: 50,
            max_halvings: 4,
            linearization: NLinearization::Implicit,
        }
    }
}

/// The discrete unknowns at one time level.
#[derive(Clone, Debug, PartialEq)]
pub struct SimState {
    pub n: P1Field,
    pub c: P1Field,
    pub uh_p: TaylorHoodField,
    pub step: usize,
    pub time: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PicardReport {
    pub iterations: usize,
    pub increment_n: f64,
    pub increment_c: f64,
    pub converged: bool,
    /// Edge pairs where `gamma^c` hit the `n + 1 = 0` guard.
    pub gamma_flags: usize,
}

/// `n_0h = I_h n_0`, `c_0h = I_h c_0`, `u_0h = RD_h u_0`.
pub fn initialize(
    disc: &Discretization,
    n0: impl Fn(Point) -> f64,
    c0: impl Fn(Point) -> f64,
    u0: impl Fn(Point) -> [f64; 2],
) -> Result<SimState> {
    let n = averaged_interpolate(&disc.mesh, n0)?;
    if let Some((vertex, &value)) = n.values.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
        return Err(Error::NonPositiveInitialDensity { vertex, value });
    }
    let c = averaged_interpolate(&disc.mesh, c0)?;
    let uh_p = disc.th.ritz_darcy_project(&disc.mesh, u0)?;
    Ok(SimState { n, c, uh_p, step: 0, time: 0.0 })
}

/// Operators fixed during one time step (they depend on `u^m` and `k`).
#[derive(Clone, Debug)]
pub struct StepOperators {
    pub k: f64,
    /// `G[i][j] = (phi_j u, grad phi_i)`.
    pub transport: CsrMatrix,
    /// `k^-1 M + C(u) + K + M`, the chemoattractant operator without stabilization.
    pub c_operator: CsrMatrix,
}

impl StepOperators {
    pub fn new(disc: &Discretization, u: &[f64], k: f64) -> Result<Self> {
        if !(k > 0.0) {
            return Err(Error::InvalidArgument(format!("time step must be positive, got {k}")));
        }
        let transport = transport_matrix(&disc.mesh, &disc.th, u)?;
        let conv = c_convection_matrix(&disc.mesh, &disc.th, u)?;
        let mass_stiff = disc.scalar.mass.linear_combination(1.0 / k + 1.0, &disc.scalar.stiffness, 1.0);
        let c_operator = mass_stiff.linear_combination(1.0, &conv, 1.0);
        Ok(StepOperators { k, transport, c_operator })
    }
}

/// Solves `[M/k + C(u) + K + M + B_c] c = M c_old / k + (n_new, .)_h`.
pub fn solve_c_equation(
    disc: &Discretization,
    n_new: &P1Field,
    c_old: &P1Field,
    ops: &StepOperators,
    stab: &StabilizationMatrix,
) -> Result<P1Field> {
    n_new.check(&disc.mesh)?;
    c_old.check(&disc.mesh)?;
    let n = disc.num_vertices();
    let mut trips = ops.c_operator.triplets();
    trips.extend(stab.triplets(&disc.mesh));
    let a = CsrMatrix::from_triplets(n, n, &trips);
    let mc = disc.scalar.mass.matvec(&c_old.values);
    let rhs: Vec<f64> = (0..n)
        .map(|i| mc[i] / ops.k + disc.scalar.lumped.weights[i] * n_new.values[i])
        .collect();
    Ok(P1Field::new(sparse::solve(&a, &rhs, SCALAR_RESIDUAL)?))
}

/// Density solve with the starred loads lagged at `n_frozen`:
/// `[L/k + K + B_n] n = L n_old / k + conv(n_frozen) + chemo(n_frozen, c_new)`.
pub fn solve_n_equation(
    disc: &Discretization,
    n_old: &P1Field,
    n_frozen: &P1Field,
    c_new: &P1Field,
    ops: &StepOperators,
    eps: f64,
    stab: &StabilizationMatrix,
) -> Result<P1Field> {
    n_old.check(&disc.mesh)?;
    let mesh = &disc.mesh;
    let nv = mesh.num_vertices();
    let lumped = &disc.scalar.lumped.weights;
    let mut trips = disc.scalar.stiffness.triplets();
    trips.extend(stab.triplets(mesh));
    trips.extend((0..nv).map(|i| (i, i, lumped[i] / ops.k)));
    let a = CsrMatrix::from_triplets(nv, nv, &trips);
    let conv = convection_starred_load(mesh, &ops.transport, n_frozen, eps)?;
    let chemo = chemotaxis_load(mesh, &disc.scalar.stiffness, n_frozen, c_new)?;
    let rhs: Vec<f64> = (0..nv)
        .map(|i| lumped[i] * n_old.values[i] / ops.k + conv[i] + chemo[i])
        .collect();
    Ok(P1Field::new(sparse::solve(&a, &rhs, SCALAR_RESIDUAL)?))
}

/// Density solve with implicit upwinded fluxes. For every edge the pair
/// flux into `r`,
/// `F_rs = (gamma^c_rs - 1)(G[r][s] - G[s][r]) + gamma^ch_rs (c_s - c_r) K_rs`,
/// is frozen at `n_frozen` and rescaled by the donor value, so the sweep
/// solves an M-matrix system whose column sums are the lumped masses / k.
/// The constant part of `gamma^c` transports the constant function and sums
/// to the discrete divergence of `u`, which vanishes.
pub fn solve_n_implicit(
    disc: &Discretization,
    n_old: &P1Field,
    n_frozen: &P1Field,
    c_new: &P1Field,
    ops: &StepOperators,
    eps: f64,
    stab: &StabilizationMatrix,
) -> Result<P1Field> {
    n_old.check(&disc.mesh)?;
    n_frozen.check(&disc.mesh)?;
    c_new.check(&disc.mesh)?;
    let mesh = &disc.mesh;
    let nv = mesh.num_vertices();
    let lumped = &disc.scalar.lumped.weights;
    let (nf, c) = (&n_frozen.values, &c_new.values);
    let mut trips: Vec<(usize, usize, f64)> = (0..nv).map(|i| (i, i, lumped[i] / ops.k)).collect();
    let mut rhs: Vec<f64> = (0..nv).map(|i| lumped[i] * n_old.values[i] / ops.k).collect();
    for (e, &[r, s]) in mesh.edges().iter().enumerate() {
        let k_rs = disc.scalar.stiffness.get(r, s);
        let d = stab.nu[e] - k_rs;
        trips.extend([(r, r, d), (s, s, d), (r, s, -d), (s, r, -d)]);
        let t_rs = ops.transport.get(r, s) - ops.transport.get(s, r);
        let (gc, _) = gamma_conv_checked(nf[r], nf[s], eps);
        let flux = (gc - 1.0) * t_rs + gamma_chemo(nf[r], nf[s]) * (c[s] - c[r]) * k_rs;
        if flux == 0.0 {
            continue;
        }
        // flux > 0 moves mass from s to r
        let (donor, receiver) = if flux > 0.0 { (s, r) } else { (r, s) };
        let w = flux.abs();
        if nf[donor] > 1e-300 && nf[donor].is_finite() {
            let coef = w / nf[donor];
            trips.push((donor, donor, coef));
            trips.push((receiver, donor, -coef));
        } else {
            rhs[receiver] += w;
            rhs[donor] -= w;
        }
    }
    let a = CsrMatrix::from_triplets(nv, nv, &trips);
    Ok(P1Field::new(sparse::solve(&a, &rhs, SCALAR_RESIDUAL)?))
}

/// Nodal gradients of the potential, `grad Phi(a_i)`.
pub fn potential_gradients(mesh: &TriMesh, grad: impl Fn(Point) -> [f64; 2]) -> Vec<[f64; 2]> {
    mesh.vertices().iter().map(|&p| grad(p)).collect()
}

/// `(i_h(n grad Phi), v)_h`: lumped forcing, nonzero only on vertex dofs.
pub fn buoyancy_forcing(disc: &Discretization, n: &[f64], grad_phi: &[[f64; 2]]) -> Vec<f64> {
    let nd = disc.th.p2.num_dofs;
    let mut f = vec![0.0; 2 * nd];
    for i in 0..disc.num_vertices() {
        let m = disc.scalar.lumped.weights[i] * n[i];
        f[i] = m * grad_phi[i][0];
        f[nd + i] = m * grad_phi[i][1];
    }
    f
}

/// Linearized Navier–Stokes step:
/// `(u - u_old)/k + (u_old . grad) u + 1/2 (div u_old) u - Laplace u + grad p = i_h(n grad Phi)`,
/// `div u = 0`.
pub fn solve_ns_step(
    disc: &Discretization,
    u_old: &TaylorHoodField,
    n_new: &P1Field,
    grad_phi: &[[f64; 2]],
    k: f64,
) -> Result<TaylorHoodField> {
    if !(k > 0.0) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {k}")));
    }
    n_new.check(&disc.mesh)?;
    disc.th.check_velocity(&u_old.velocity)?;
    let nd = disc.th.p2.num_dofs;
    let conv = disc.th.convection(&disc.mesh, &u_old.velocity);
    let a = disc
        .th
        .mass
        .linear_combination(1.0 / k, &disc.th.laplacian, 1.0)
        .linear_combination(1.0, &conv, 1.0);
    let mut f = buoyancy_forcing(disc, &n_new.values, grad_phi);
    let mx = disc.th.mass.matvec(&u_old.velocity[..nd]);
    let my = disc.th.mass.matvec(&u_old.velocity[nd..]);
    for d in 0..nd {
        f[d] += mx[d] / k;
        f[nd + d] += my[d] / k;
    }
    disc.th.saddle_solve(&a, &f, SADDLE_RESIDUAL)
}

fn relative_increment(lumped: &crate::fespace::LumpedMass, new: &[f64], old: &[f64]) -> f64 {
    let diff: Vec<f64> = new.iter().zip(old).map(|(a, b)| a - b).collect();
    lumped.norm(&diff) / lumped.norm(new).max(1e-30)
}

/// One time step: Picard sweeps (chemoattractant, then density) until the
/// relative lumped-L2 increments fall below `picard_tol`, then the fluid solve.
pub fn picard_step(
    disc: &Discretization,
    state: &SimState,
    params: &SolverParams,
    grad_phi: &[[f64; 2]],
) -> Result<(SimState, PicardReport)> {
    let mesh = &disc.mesh;
    let ops = StepOperators::new(disc, &state.uh_p.velocity, params.k)?;
    let lumped = &disc.scalar.lumped;
    let mut n_it = state.n.clone();
    let mut c_it = state.c.clone();
    let mut report = PicardReport {
        iterations: 0,
        increment_n: f64::INFINITY,
        increment_c: f64::INFINITY,
        converged: false,
        gamma_flags: 0,
    };
    while report.iterations < params.picard_max_iters.max(1) {
        let bc = assemble_bc(mesh, &c_it.values, &ops.c_operator, params.q);
        let c_next = solve_c_equation(disc, &n_it, &state.c, &ops, &bc)?;
        let bn = assemble_bn(mesh, &n_it.values, &ops.transport, &disc.scalar.stiffness, params.eps, params.q);
        let n_next = match params.linearization {
            NLinearization::Implicit => solve_n_implicit(disc, &state.n, &n_it, &c_next, &ops, params.eps, &bn)?,
            NLinearization::Lagged => solve_n_equation(disc, &state.n, &n_it, &c_next, &ops, params.eps, &bn)?,
        };
        report.iterations += 1;
        report.increment_n = relative_increment(lumped, &n_next.values, &n_it.values);
        report.increment_c = relative_increment(lumped, &c_next.values, &c_it.values);
        n_it = n_next;
        c_it = c_next;
        if !report.increment_n.is_finite() || !report.increment_c.is_finite() {
            break;
        }
        if report.increment_n.max(report.increment_c) <= params.picard_tol {
            report.converged = true;
            break;
        }
    }
    if !report.converged {
        return Err(Error::PicardDivergence {
            iterations: report.iterations,
            increment_n: report.increment_n,
            increment_c: report.increment_c,
        });
    }
    report.gamma_flags = crate::operators::convection_coefficients(mesh, &n_it.values, params.eps).1;
    let uh_p = solve_ns_step(disc, &state.uh_p, &n_it, grad_phi, params.k)?;
    Ok((
        SimState {
            n: n_it,
            c: c_it,
            uh_p,
            step: state.step + 1,
            time: state.time + params.k,
        },
        report,
    ))
}

/// Result of advancing one macro step, possibly through halved substeps.
#[derive(Clone, Debug)]
pub struct StepOutcome {
    pub state: SimState,
    pub picard_iters: usize,
    pub substeps: usize,
    pub flags: InvariantFlags,
}

/// Advances one step of size `params.k`. If the Picard iteration or a linear
/// solve fails, the same interval is covered by `2^r` substeps of `k / 2^r`,
/// `r = 1..=max_halvings`.
pub fn advance(
    disc: &Discretization,
    state: &SimState,
    params: &SolverParams,
    grad_phi: &[[f64; 2]],
) -> Result<StepOutcome> {
    let mut last_err = None;
    for r in 0..=params.max_halvings {
        let substeps = 1usize << r;
        let sub = SolverParams { k: params.k / substeps as f64, ..params.clone() };
        let mut current = state.clone();
        let mut iters = 0;
        let mut flags = InvariantFlags::default();
        let mut failed = None;
        for _ in 0..substeps {
            match picard_step(disc, &current, &sub, grad_phi) {
                Ok((next, report)) => {
                    let f = verify_step_invariants(
                        &disc.scalar.lumped,
                        (&current.n.values, &current.c.values),
                        (&next.n.values, &next.c.values),
                        sub.k,
                    );
                    flags.0 |= f.0;
                    if report.gamma_flags > 0 {
                        flags.set(InvariantFlags::GAMMA_GUARD);
                    }
                    iters += report.iterations;
                    current = next;
                }
                Err(e @ (Error::PicardDivergence { .. } | Error::LinearSolver(_))) => {
                    failed = Some(e);
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        match failed {
            None => {
                if r > 0 {
                    flags.set(InvariantFlags::STEP_RETRIED);
                }
                current.step = state.step + 1;
                current.time = state.time + params.k;
                return Ok(StepOutcome { state: current, picard_iters: iters, substeps, flags });
            }
            Some(e) => last_err = Some(e),
        }
    }
    Err(Error::StepFailed {
        time: state.time,
        retries: params.max_halvings,
        source: Box::new(last_err.expect("at least one attempt")),
    })
}
