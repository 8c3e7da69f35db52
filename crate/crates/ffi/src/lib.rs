//! C ABI over `ksns-core`.
//!
//! Every fallible function returns a [`KsnsStatus`]; on failure the message
//! is available from [`ksns_last_error`] on the same thread. Handles are
//! opaque and must be released with their `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use ksns_core::config::{load_config, preset_scenario, ScenarioConfig};
use ksns_core::diagnostics::{DiagnosticsRecord, Regime};
use ksns_core::mesh::{generate_disc_mesh, read_mesh, TriMesh};
use ksns_core::output::{read_checkpoint, write_checkpoint, write_fields_vtk};
use ksns_core::solver::{Discretization, Simulation, StopReason};
use ksns_core::Error;

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KsnsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Mesh = 4,
    Solver = 5,
    Io = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KsnsRegime {
    Bounded = 0,
    BlowUp = 1,
    Undecided = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KsnsStop {
    FinalTime = 0,
    Ceiling = 1,
    StepFailed = 2,
}

/// One row of the diagnostics series.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct KsnsRecord {
    pub step: u64,
    pub time: f64,
    pub mass_n: f64,
    pub mass_c: f64,
    pub min_n: f64,
    pub max_n: f64,
    pub min_c: f64,
    pub max_c: f64,
    pub u_l2: f64,
    pub gradu_l2: f64,
    pub energy: f64,
    pub picard_iters: u32,
    /// Invariant bitmask; zero when every check passed.
    pub flags: u32,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KsnsRunSummary {
    pub steps: u64,
    pub peak_n: f64,
    pub regime: KsnsRegime,
    pub stop: KsnsStop,
}

/// Opaque triangulation.
pub struct KsnsMesh(TriMesh);

/// Opaque time integrator for one scenario.
pub struct KsnsSimulation(Simulation);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_of(err: &Error) -> KsnsStatus {
    match err {
        Error::InvalidArgument(_) | Error::MeshMismatch { .. } | Error::NonFiniteSample(_) => KsnsStatus::InvalidArgument,
        Error::DegenerateMesh(_)
        | Error::RefinementClosure(_)
        | Error::NonConvexDomain { .. }
        | Error::MissingSymmetricNode { .. } => KsnsStatus::Mesh,
        Error::Parse { .. } | Error::Config { .. } | Error::UnknownPreset(_) => KsnsStatus::Config,
        Error::Io(_) => KsnsStatus::Io,
        _ => KsnsStatus::Solver,
    }
}

/// Runs `f`, converting errors and panics into status codes.
fn guard(f: impl FnOnce() -> Result<(), (KsnsStatus, String)>) -> KsnsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            KsnsStatus::Ok
        }
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            KsnsStatus::Panic
        }
    }
}

fn core<T>(r: ksns_core::Result<T>) -> Result<T, (KsnsStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (KsnsStatus, String) {
    (KsnsStatus::NullPointer, format!("`{what}` is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, (KsnsStatus, String)> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| (KsnsStatus::InvalidArgument, format!("`{what}` is not valid UTF-8")))
}

unsafe fn sim_mut<'a>(sim: *mut KsnsSimulation) -> Result<&'a mut Simulation, (KsnsStatus, String)> {
    sim.as_mut().map(|s| &mut s.0).ok_or_else(|| null("sim"))
}

unsafe fn sim_ref<'a>(sim: *const KsnsSimulation) -> Result<&'a Simulation, (KsnsStatus, String)> {
    sim.as_ref().map(|s| &s.0).ok_or_else(|| null("sim"))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), (KsnsStatus, String)> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

fn record(r: &DiagnosticsRecord) -> KsnsRecord {
    KsnsRecord {
        step: r.step as u64,
        time: r.time,
        mass_n: r.mass_n,
        mass_c: r.mass_c,
        min_n: r.min_n,
        max_n: r.max_n,
        min_c: r.min_c,
        max_c: r.max_c,
        u_l2: r.u_l2,
        gradu_l2: r.gradu_l2,
        energy: r.energy,
        picard_iters: r.picard_iters as u32,
        flags: r.flags.0,
    }
}

/// Message of the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn ksns_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ksns_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Generates a weakly acute triangulation of the disc of `radius` around
/// `(cx, cy)` with target edge length `h`.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn ksns_mesh_generate_disc(
    cx: f64,
    cy: f64,
    radius: f64,
    h: f64,
    out: *mut *mut KsnsMesh,
) -> KsnsStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let mesh = core(generate_disc_mesh([cx, cy], radius, h))?;
        out.write(Box::into_raw(Box::new(KsnsMesh(mesh))));
        Ok(())
    })
}

/// Reads a mesh in the text format written by `ksns mesh gen`.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ksns_mesh_read(path: *const c_char, out: *mut *mut KsnsMesh) -> KsnsStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let mesh = core(read_mesh(Path::new(path)))?;
        out.write(Box::into_raw(Box::new(KsnsMesh(mesh))));
        Ok(())
    })
}

/// # Safety
/// `mesh` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ksns_mesh_num_vertices(mesh: *const KsnsMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.0.num_vertices())
}

/// # Safety
/// `mesh` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ksns_mesh_num_triangles(mesh: *const KsnsMesh) -> usize {
    mesh.as_ref().map_or(0, |m| m.0.num_triangles())
}

/// Writes whether every interior edge has opposite angles summing to at
/// most pi (and boundary edges at most pi/2).
///
/// # Safety
/// `mesh` must be a live handle and `weakly_acute` writable.
#[no_mangle]
pub unsafe extern "C" fn ksns_mesh_check(mesh: *const KsnsMesh, weakly_acute: *mut bool) -> KsnsStatus {
    guard(|| {
        let mesh = mesh.as_ref().ok_or_else(|| null("mesh"))?;
        write_out(weakly_acute, mesh.0.check_weak_acuteness().pass, "weakly_acute")
    })
}

/// Copies interleaved vertex coordinates `x0 y0 x1 y1 ...` into `buf`.
///
/// # Safety
/// `mesh` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ksns_mesh_copy_vertices(mesh: *const KsnsMesh, buf: *mut f64, len: usize) -> KsnsStatus {
    guard(|| {
        let mesh = mesh.as_ref().ok_or_else(|| null("mesh"))?;
        let flat: Vec<f64> = mesh.0.vertices().iter().flat_map(|p| [p[0], p[1]]).collect();
        copy_into(&flat, buf, len)
    })
}

/// # Safety
/// `mesh` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ksns_mesh_free(mesh: *mut KsnsMesh) {
    if !mesh.is_null() {
        drop(Box::from_raw(mesh));
    }
}

unsafe fn copy_into(values: &[f64], buf: *mut f64, len: usize) -> Result<(), (KsnsStatus, String)> {
    if buf.is_null() {
        return Err(null("buf"));
    }
    if len < values.len() {
        return Err((KsnsStatus::BufferTooSmall, format!("buffer holds {len} values, {} needed", values.len())));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    Ok(())
}

fn preset_with(name: &str, target_h: f64, final_time: f64) -> Result<ScenarioConfig, (KsnsStatus, String)> {
    let mut cfg = core(preset_scenario(name))?;
    if target_h > 0.0 {
        cfg.target_h = target_h;
    }
    if final_time >= 0.0 {
        cfg.final_time = final_time;
    }
    core(cfg.validate())?;
    Ok(cfg)
}

/// Builds a simulation from a named preset (`case350`, `case400`,
/// `case450`, `case450_refined`, `case450_phi50`). A positive `target_h` and
/// a nonnegative `final_time` override the preset values.
///
/// # Safety
/// `name` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ksns_simulation_from_preset(
    name: *const c_char,
    target_h: f64,
    final_time: f64,
    out: *mut *mut KsnsSimulation,
) -> KsnsStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let sim = core(Simulation::new(preset_with(name, target_h, final_time)?))?;
        out.write(Box::into_raw(Box::new(KsnsSimulation(sim))));
        Ok(())
    })
}

/// Builds a simulation from a preset on a caller-supplied mesh. The mesh
/// handle is borrowed and stays owned by the caller.
///
/// # Safety
/// `name` must be a NUL-terminated string, `mesh` a live handle and `out`
/// writable.
#[no_mangle]
pub unsafe extern "C" fn ksns_simulation_from_preset_on_mesh(
    name: *const c_char,
    mesh: *const KsnsMesh,
    final_time: f64,
    out: *mut *mut KsnsSimulation,
) -> KsnsStatus {
    guard(|| {
        let name = str_arg(name, "name")?;
        let mesh = mesh.as_ref().ok_or_else(|| null("mesh"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        let sim = core(Simulation::with_mesh(preset_with(name, -1.0, final_time)?, mesh.0.clone()))?;
        out.write(Box::into_raw(Box::new(KsnsSimulation(sim))));
        Ok(())
    })
}

/// Builds a simulation from a `key = value` scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ksns_simulation_from_config(path: *const c_char, out: *mut *mut KsnsSimulation) -> KsnsStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let sim = core(load_config(Path::new(path)).and_then(Simulation::new))?;
        out.write(Box::into_raw(Box::new(KsnsSimulation(sim))));
        Ok(())
    })
}

/// Replaces the state of `sim` with a checkpoint taken on the same mesh.
///
/// # Safety
/// `sim` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ksns_simulation_load_checkpoint(sim: *mut KsnsSimulation, path: *const c_char) -> KsnsStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let s = sim_mut(sim)?;
        let state = core(read_checkpoint(Path::new(path)))?;
        let config = s.config.clone();
        let disc = Discretization::new(s.disc.mesh.clone());
        *s = core(Simulation::from_state(config, disc, state))?;
        Ok(())
    })
}

/// Advances one time step and writes its diagnostics record to `out`
/// (which may be NULL).
///
/// # Safety
/// `sim` must be a live handle; `out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn ksns_simulation_step(sim: *mut KsnsSimulation, out: *mut KsnsRecord) -> KsnsStatus {
    guard(|| {
        let s = sim_mut(sim)?;
        let r = record(core(s.step())?);
        if !out.is_null() {
            out.write(r);
        }
        Ok(())
    })
}

/// Integrates to the configured final time, the blow-up ceiling or a step
/// failure. A step failure is reported in the summary with status `Ok`, and
/// its message is left in [`ksns_last_error`].
///
/// # Safety
/// `sim` must be a live handle; `out` NULL or writable.
#[no_mangle]
pub unsafe extern "C" fn ksns_simulation_run(sim: *mut KsnsSimulation, out: *mut KsnsRunSummary) -> KsnsStatus {
    let mut failure = None;
    let status = guard(|| {
        let s = sim_mut(sim)?;
        let outcome = core(s.run(|_| Ok(())))?;
        if let StopReason::StepFailed(e) = &outcome.stop {
            failure = Some(e.to_string());
        }
        let summary = KsnsRunSummary {
            steps: outcome.records.last().map_or(0, |r| r.step as u64),
            peak_n: outcome.peak_n(),
            regime: match outcome.regime {
                Regime::Bounded => KsnsRegime::Bounded,
                Regime::BlowUp => KsnsRegime::BlowUp,
                Regime::Undecided => KsnsRegime::Undecided,
            },
            stop: match outcome.stop {
                StopReason::FinalTime => KsnsStop::FinalTime,
                StopReason::Ceiling => KsnsStop::Ceiling,
                StopReason::StepFailed(_) => KsnsStop::StepFailed,
            },
        };
        if !out.is_null() {
            out.write(summary);
        }
        Ok(())
    });
    if let Some(msg) = failure {
        set_error(msg);
    }
    status
}

/// # Safety
/// `sim` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ksns_simulation_last_record(sim: *const KsnsSimulation, out: *mut KsnsRecord) -> KsnsStatus {
    guard(|| {
        let s = sim_ref(sim)?;
        write_out(out, record(s.last_record()), "out")
    })
}

/// Number of records in the series, including the initial one.
///
/// # Safety
/// `sim` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ksns_simulation_num_records(sim: *const KsnsSimulation) -> usize {
    sim.as_ref().map_or(0, |s| s.0.records.len())
}

/// # Safety
/// `sim` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ksns_simulation_record(sim: *const KsnsSimulation, index: usize, out: *mut KsnsRecord) -> KsnsStatus {
    guard(|| {
        let s = sim_ref(sim)?;
        let r = s.records.get(index).ok_or_else(|| {
            (KsnsStatus::InvalidArgument, format!("record {index} out of range ({} records)", s.records.len()))
        })?;
        write_out(out, record(r), "out")
    })
}

/// # Safety
/// `sim` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ksns_simulation_num_vertices(sim: *const KsnsSimulation) -> usize {
    sim.as_ref().map_or(0, |s| s.0.disc.mesh.num_vertices())
}

/// Copies the nodal cell density into `buf`.
///
/// # Safety
/// `sim` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ksns_simulation_copy_density(sim: *const KsnsSimulation, buf: *mut f64, len: usize) -> KsnsStatus {
    guard(|| copy_into(&sim_ref(sim)?.state.n.values, buf, len))
}

/// Copies the nodal chemoattractant concentration into `buf`.
///
/// # Safety
/// `sim` must be a live handle and `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ksns_simulation_copy_concentration(
    sim: *const KsnsSimulation,
    buf: *mut f64,
    len: usize,
) -> KsnsStatus {
    guard(|| copy_into(&sim_ref(sim)?.state.c.values, buf, len))
}

/// # Safety
/// `sim` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ksns_simulation_write_checkpoint(sim: *const KsnsSimulation, path: *const c_char) -> KsnsStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        core(write_checkpoint(&sim_ref(sim)?.state, Path::new(path)))
    })
}

/// Writes the current fields as a legacy VTK unstructured grid.
///
/// # Safety
/// `sim` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ksns_simulation_write_vtk(sim: *const KsnsSimulation, path: *const c_char) -> KsnsStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let s = sim_ref(sim)?;
        core(write_fields_vtk(&s.disc.mesh, &s.state, Path::new(path)))
    })
}

/// # Safety
/// `sim` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ksns_simulation_free(sim: *mut KsnsSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}
