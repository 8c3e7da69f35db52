use std::fmt;

use super::{advance, initialize, potential_gradients, Discretization, SimState, SolverParams};
use crate::config::ScenarioConfig;
use crate::diagnostics::{classify_regime, energy_functional, verify_step_invariants, DiagnosticsRecord, InvariantFlags, Regime};
use crate::error::{Error, Result};
use crate::mesh::TriMesh;

#[derive(Debug)]
pub enum StopReason {
    FinalTime,
    /// `max n` reached the blow-up ceiling.
    Ceiling,
    /// A step failed after all retries.
    StepFailed(Error),
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopReason::FinalTime => f.write_str("final-time"),
            StopReason::Ceiling => f.write_str("ceiling"),
            StopReason::StepFailed(e) => write!(f, "step-failed ({e})"),
        }
    }
}

#[derive(Debug)]
pub struct RunOutcome {
    pub records: Vec<DiagnosticsRecord>,
    pub regime: Regime,
    pub stop: StopReason,
}

impl RunOutcome {
    pub fn peak_n(&self) -> f64 {
        self.records.iter().map(|r| r.max_n).fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn aborted(&self) -> bool {
        matches!(self.stop, StopReason::StepFailed(_))
    }
}

/// A scenario being integrated in time, with its diagnostics series.
pub struct Simulation {
    pub config: ScenarioConfig,
    pub disc: Discretization,
    pub params: SolverParams,
    pub grad_phi: Vec<[f64; 2]>,
    pub state: SimState,
    pub records: Vec<DiagnosticsRecord>,
}

impl Simulation {
    pub fn new(config: ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let mesh = config.build_mesh()?;
        Self::with_mesh(config, mesh)
    }

    /// Starts from the scenario's initial data on a given mesh.
    pub fn with_mesh(config: ScenarioConfig, mesh: TriMesh) -> Result<Self> {
        config.validate()?;
        let disc = Discretization::new(mesh);
        let state = initialize(&disc, config.initial_density(), |_| 0.0, |_| [0.0, 0.0])?;
        Self::from_state(config, disc, state)
    }

    /// Resumes from an arbitrary state (e.g. a checkpoint).
    pub fn from_state(config: ScenarioConfig, disc: Discretization, state: SimState) -> Result<Self> {
        config.validate()?;
        state.n.check(&disc.mesh)?;
        state.c.check(&disc.mesh)?;
        disc.th.check_velocity(&state.uh_p.velocity)?;
        if config.deterministic {
            faer::set_global_parallelism(faer::Par::Seq);
        }
        let grad_phi = potential_gradients(&disc.mesh, config.potential_gradient());
        let params = config.solver_params();
        let mut sim = Simulation { config, disc, params, grad_phi, state, records: Vec::new() };
        let mut flags = InvariantFlags::default();
        if sim.state.n.values.iter().any(|&v| !(v > 0.0)) {
            flags.set(InvariantFlags::NON_POSITIVE_N);
        }
        if sim.state.c.values.iter().any(|&v| !(v >= 0.0)) {
            flags.set(InvariantFlags::NEGATIVE_C);
        }
        let first = sim.record(0, flags)?;
        sim.records.push(first);
        Ok(sim)
    }

    pub fn record(&self, picard_iters: usize, mut flags: InvariantFlags) -> Result<DiagnosticsRecord> {
        let lumped = &self.disc.scalar.lumped;
        let (n, c) = (&self.state.n, &self.state.c);
        let energy = match energy_functional(lumped, &self.disc.scalar.mass, &n.values, &c.values) {
            Ok(e) => e,
            Err(Error::LogDomain { .. }) => {
                flags.set(InvariantFlags::LOG_DOMAIN);
                f64::NAN
            }
            Err(e) => return Err(e),
        };
        let u = &self.state.uh_p.velocity;
        Ok(DiagnosticsRecord {
            step: self.state.step,
            time: self.state.time,
            mass_n: lumped.integral(&n.values),
            mass_c: lumped.integral(&c.values),
            min_n: n.min(),
            max_n: n.max(),
            min_c: c.min(),
            max_c: c.max(),
            u_l2: self.disc.th.l2_norm(u),
            gradu_l2: self.disc.th.grad_l2_norm(u),
            energy,
            picard_iters,
            flags,
        })
    }

    pub fn last_record(&self) -> &DiagnosticsRecord {
        self.records.last().expect("the initial record always exists")
    }

    /// Advances one step and appends its record.
    pub fn step(&mut self) -> Result<&DiagnosticsRecord> {
        let out = advance(&self.disc, &self.state, &self.params, &self.grad_phi)?;
        let mut flags = out.flags;
        // invariants over the whole macro step, on top of the per-substep checks
        let whole = verify_step_invariants(
            &self.disc.scalar.lumped,
            (&self.state.n.values, &self.state.c.values),
            (&out.state.n.values, &out.state.c.values),
            self.params.k,
        );
        if out.substeps == 1 {
            flags.0 |= whole.0;
        } else {
            flags.0 |= whole.0 & !InvariantFlags::MASS_C;
        }
        self.state = out.state;
        let rec = self.record(out.picard_iters, flags)?;
        self.records.push(rec);
        Ok(self.last_record())
    }

    pub fn classify(&self, aborted: bool) -> Regime {
        classify_regime(&self.records, self.config.blowup_ceiling, self.config.plateau_window, aborted)
    }

    /// Integrates until the final time, the blow-up ceiling or an
    /// unrecoverable step failure. `observer` sees the simulation after every
    /// accepted step (and once before the first).
    pub fn run(&mut self, mut observer: impl FnMut(&Simulation) -> Result<()>) -> Result<RunOutcome> {
        observer(self)?;
        let total = self.config.num_steps();
        let mut stop = StopReason::FinalTime;
        while self.state.step < total {
            if self.last_record().max_n >= self.config.blowup_ceiling {
                stop = StopReason::Ceiling;
                break;
            }
            match self.step() {
                Ok(_) => observer(self)?,
                Err(e @ Error::StepFailed { .. }) => {
                    stop = StopReason::StepFailed(e);
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if matches!(stop, StopReason::FinalTime) && self.last_record().max_n >= self.config.blowup_ceiling {
            stop = StopReason::Ceiling;
        }
        let regime = self.classify(matches!(stop, StopReason::StepFailed(_)));
        Ok(RunOutcome { records: self.records.clone(), regime, stop })
    }
}

/// Runs a scenario end to end without writing any output.
pub fn run_simulation(config: ScenarioConfig) -> Result<RunOutcome> {
    Simulation::new(config)?.run(|_| Ok(()))
}
