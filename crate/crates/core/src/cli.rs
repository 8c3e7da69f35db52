//! Command-line surface of the `ksns` binary.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{load_config, preset_scenario, write_config, ScenarioConfig};
use crate::diagnostics::{classify_regime, domain_constants, threshold_report, DiagnosticsRecord, Regime};
use crate::error::{Error, Result};
use crate::inequalities::{run_verify_suite, SuiteSize};
use crate::mesh::{read_mesh, write_mesh};
use crate::output::{read_checkpoint, read_series_csv, write_atomic, write_checkpoint, write_fields_vtk, write_series_csv};
use crate::solver::{Discretization, Simulation, StopReason};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_CHECK_FAILED: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "ksns", version, about = "Bound-preserving Keller-Segel-Navier-Stokes solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate or audit meshes.
    #[command(subcommand)]
    Mesh(MeshCommand),
    /// Run a scenario and classify its regime.
    Run(RunArgs),
    /// Run the functional-inequality verification suite.
    Verify(VerifyArgs),
    /// Summarize a diagnostics CSV series.
    Report(ReportArgs),
}

#[derive(Subcommand, Debug)]
enum MeshCommand {
    /// Write the mesh of a scenario (disc generation plus optional refinement).
    Gen(MeshGenArgs),
    /// Audit a mesh file for weak acuteness (exit 2 on failure).
    Check { path: PathBuf },
}

#[derive(Args, Debug)]
struct Scenario {
    /// Named preset (case350, case400, case450, case450_refined, case450_phi50).
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Configuration file in `key = value` format.
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Scenario {
    fn load(&self) -> Result<ScenarioConfig> {
        match (&self.preset, &self.config) {
            (Some(p), None) => preset_scenario(p),
            (None, Some(c)) => load_config(c),
            _ => Err(Error::InvalidArgument("exactly one of --preset or --config is required".into())),
        }
    }
}

#[derive(Args, Debug)]
struct MeshGenArgs {
    #[command(flatten)]
    scenario: Scenario,
    /// Override the target mesh size.
    #[arg(long)]
    target_h: Option<f64>,
    #[arg(long, short)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    scenario: Scenario,
    /// Output directory (overrides the configured one).
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    final_time: Option<f64>,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    target_h: Option<f64>,
    #[arg(long)]
    snapshot_cadence: Option<usize>,
    #[arg(long)]
    checkpoint_cadence: Option<usize>,
    /// Resume from a checkpoint written by an earlier run of the same scenario.
    #[arg(long)]
    resume: Option<PathBuf>,
    /// Suppress per-step progress lines.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, default_value_t = 20240501)]
    seed: u64,
    /// CSV report path.
    #[arg(long, default_value = "verify_report.csv")]
    report: PathBuf,
    /// Use 1% of the default sample counts.
    #[arg(long)]
    quick: bool,
}

#[derive(Args, Debug)]
struct ReportArgs {
    series: PathBuf,
    #[arg(long, default_value_t = 1e6)]
    ceiling: f64,
    #[arg(long, default_value_t = 20)]
    window: usize,
    /// Treat the series as ending in an aborted step.
    #[arg(long)]
    aborted: bool,
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Mesh(MeshCommand::Gen(a)) => mesh_gen(a),
        Command::Mesh(MeshCommand::Check { path }) => mesh_check(&path),
        Command::Run(a) => run(a),
        Command::Verify(a) => verify(a),
        Command::Report(a) => report(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::InvalidArgument(_) | Error::UnknownPreset(_) | Error::Config { .. } | Error::Parse { .. } => {
                    EXIT_USAGE
                }
                _ => EXIT_RUNTIME,
            }
        }
    }
}

fn mesh_gen(a: MeshGenArgs) -> Result<i32> {
    let mut cfg = a.scenario.load()?;
    if let Some(h) = a.target_h {
        cfg.target_h = h;
    }
    cfg.validate()?;
    let mesh = cfg.build_mesh()?;
    write_mesh(&mesh, &a.out)?;
    println!(
        "wrote {} ({} vertices, {} triangles, h = {:.4})",
        a.out.display(),
        mesh.num_vertices(),
        mesh.num_triangles(),
        mesh.h()
    );
    Ok(EXIT_OK)
}

fn mesh_check(path: &Path) -> Result<i32> {
    let mesh = read_mesh(path)?;
    let audit = mesh.check_weak_acuteness();
    let sym = mesh.sym_report();
    println!(
        "vertices={} triangles={} h={:.6} sym_nodes={}/{} snapped={}",
        mesh.num_vertices(),
        mesh.num_triangles(),
        mesh.h(),
        sym.present,
        sym.pairs,
        sym.snapped.len()
    );
    for (i, j, v) in audit.offenders.iter().take(20) {
        println!("offender edge ({i}, {j}) stiffness {v:e}");
    }
    if audit.pass {
        println!("weakly-acute=pass");
        Ok(EXIT_OK)
    } else {
        println!("weakly-acute=fail ({} edges)", audit.offenders.len());
        Ok(EXIT_CHECK_FAILED)
    }
}

fn run(a: RunArgs) -> Result<i32> {
    let mut cfg = a.scenario.load()?;
    if let Some(o) = a.output {
        cfg.output_dir = o;
    }
    if let Some(t) = a.final_time {
        cfg.final_time = t;
    }
    if let Some(k) = a.k {
        cfg.k = k;
    }
    if let Some(h) = a.target_h {
        cfg.target_h = h;
    }
    if let Some(c) = a.snapshot_cadence {
        cfg.snapshot_cadence = c;
    }
    if let Some(c) = a.checkpoint_cadence {
        cfg.checkpoint_cadence = c;
    }
    cfg.validate()?;
    let dir = cfg.output_dir.clone();
    std::fs::create_dir_all(&dir)?;
    write_config(&cfg, &dir.join("config.txt"))?;

    let mesh = cfg.build_mesh()?;
    write_mesh(&mesh, &dir.join("mesh.txt"))?;
    let constants = domain_constants(&mesh).ok();
    let mut sim = match &a.resume {
        Some(path) => {
            let state = read_checkpoint(path)?;
            Simulation::from_state(cfg.clone(), Discretization::new(mesh), state)?
        }
        None => Simulation::with_mesh(cfg.clone(), mesh)?,
    };
    if let Some(dc) = constants {
        let t = threshold_report(sim.last_record().mass_n, &dc);
        println!(
            "mass_n={:.6} 2chi={:.6} 4chi={:.6} threshold={}",
            t.mass_n, t.two_chi, t.four_chi, t.regime
        );
    }
    let quiet = a.quiet;
    let outcome = sim.run(|s| {
        let r = s.last_record();
        if !quiet {
            println!(
                "step={} t={:.6} max_n={:.6e} min_n={:.3e} mass_n={:.12} picard={} flags={}",
                r.step, r.time, r.max_n, r.min_n, r.mass_n, r.picard_iters, r.flags.0
            );
        }
        let step = s.state.step;
        if s.config.snapshot_cadence > 0 && step % s.config.snapshot_cadence == 0 {
            write_fields_vtk(&s.disc.mesh, &s.state, &dir.join(format!("fields_{step:06}.vtk")))?;
        }
        if s.config.checkpoint_cadence > 0 && step > 0 && step % s.config.checkpoint_cadence == 0 {
            write_checkpoint(&s.state, &dir.join(format!("checkpoint_{step:06}.txt")))?;
        }
        Ok(())
    })?;
    write_series_csv(&outcome.records, &dir.join("series.csv"))?;
    write_fields_vtk(&sim.disc.mesh, &sim.state, &dir.join("fields_final.vtk"))?;
    write_checkpoint(&sim.state, &dir.join("checkpoint_final.txt"))?;
    let bad = outcome.records.iter().filter(|r| !r.flags.ok()).count();
    println!(
        "stop={} steps={} peak_n={:.6e} flagged_steps={bad}",
        outcome.stop,
        outcome.records.last().map_or(0, |r| r.step),
        outcome.peak_n()
    );
    println!("regime={}", outcome.regime);
    Ok(match (&outcome.stop, outcome.regime) {
        (StopReason::StepFailed(_), r) if r != Regime::BlowUp => EXIT_RUNTIME,
        _ => EXIT_OK,
    })
}

fn verify(a: VerifyArgs) -> Result<i32> {
    let size = if a.quick {
        SuiteSize { log_pairs: 10_000, jensen_pairs: 10, mt_fields: 20 }
    } else {
        SuiteSize::default()
    };
    let report = run_verify_suite(a.seed, size)?;
    for c in &report.checks {
        println!("{c}");
    }
    for f in &report.fits {
        println!("{f}");
    }
    write_atomic(&a.report, report.to_csv().as_bytes())?;
    Ok(if report.all_pass() { EXIT_OK } else { EXIT_CHECK_FAILED })
}

fn summarize(records: &[DiagnosticsRecord], ceiling: f64, window: usize, aborted: bool) -> String {
    let peak = records.iter().max_by(|a, b| a.max_n.total_cmp(&b.max_n));
    let last = records.last();
    let mut s = String::new();
    if let (Some(p), Some(l)) = (peak, last) {
        let first = &records[0];
        let drift = records.iter().map(|r| ((r.mass_n - first.mass_n) / first.mass_n).abs()).fold(0.0, f64::max);
        s.push_str(&format!(
            "records={} final_time={:.6} peak_n={:.6e} at_t={:.6} final_max_n={:.6e} min_n={:.6e} max_c={:.6e} mass_drift={:.3e} flagged={}\n",
            records.len(),
            l.time,
            p.max_n,
            p.time,
            l.max_n,
            records.iter().map(|r| r.min_n).fold(f64::INFINITY, f64::min),
            records.iter().map(|r| r.max_c).fold(f64::NEG_INFINITY, f64::max),
            drift,
            records.iter().filter(|r| !r.flags.ok()).count()
        ));
    }
    s.push_str(&format!("regime={}", classify_regime(records, ceiling, window, aborted)));
    s
}

fn report(a: ReportArgs) -> Result<i32> {
    let records = read_series_csv(&a.series)?;
    if records.is_empty() {
        return Err(Error::InvalidArgument(format!("{} has no records", a.series.display())));
    }
    println!("{}", summarize(&records, a.ceiling, a.window, a.aborted));
    Ok(EXIT_OK)
}
