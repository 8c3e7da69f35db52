use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use ksns_ffi::*;

fn last_error() -> String {
    let p = ksns_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn cstr(s: &str) -> CString {
    CString::new(s).unwrap()
}

#[test]
fn mesh_handle_round_trip() {
    unsafe {
        let mut mesh = ptr::null_mut();
        assert_eq!(ksns_mesh_generate_disc(0.0, 0.1, 1.0, 0.25, &mut mesh), KsnsStatus::Ok);
        assert!(ksns_last_error().is_null());
        let nv = ksns_mesh_num_vertices(mesh);
        assert!(nv > 20);
        assert!(ksns_mesh_num_triangles(mesh) > nv);
        let mut acute = false;
        assert_eq!(ksns_mesh_check(mesh, &mut acute), KsnsStatus::Ok);
        assert!(acute);

        let mut xy = vec![0.0; 2 * nv];
        assert_eq!(ksns_mesh_copy_vertices(mesh, xy.as_mut_ptr(), xy.len()), KsnsStatus::Ok);
        assert!(xy.chunks(2).all(|p| p[0].hypot(p[1] - 0.1) <= 1.0 + 1e-12));
        assert_eq!(ksns_mesh_copy_vertices(mesh, xy.as_mut_ptr(), nv), KsnsStatus::BufferTooSmall);
        assert!(last_error().contains("buffer"));
        ksns_mesh_free(mesh);
        ksns_mesh_free(ptr::null_mut());

        assert_eq!(ksns_mesh_generate_disc(0.0, 0.0, 1.0, -1.0, &mut mesh), KsnsStatus::InvalidArgument);
        assert_eq!(ksns_mesh_num_vertices(ptr::null()), 0);
    }
}

#[test]
fn simulation_steps_preserve_invariants() {
    unsafe {
        let mut sim = ptr::null_mut();
        let name = cstr("case350");
        assert_eq!(ksns_simulation_from_preset(name.as_ptr(), 0.2, 0.03, &mut sim), KsnsStatus::Ok);
        let nv = ksns_simulation_num_vertices(sim);
        let mut first = KsnsRecord::default();
        assert_eq!(ksns_simulation_last_record(sim, &mut first), KsnsStatus::Ok);
        assert_eq!(first.step, 0);

        let mut rec = KsnsRecord::default();
        assert_eq!(ksns_simulation_step(sim, &mut rec), KsnsStatus::Ok);
        assert_eq!(rec.step, 1);
        assert!(rec.min_n > 0.0 && rec.min_c >= 0.0);
        assert!((rec.mass_n - first.mass_n).abs() <= 1e-8 * first.mass_n);

        let mut summary = KsnsRunSummary { steps: 0, peak_n: 0.0, regime: KsnsRegime::Undecided, stop: KsnsStop::StepFailed };
        assert_eq!(ksns_simulation_run(sim, &mut summary), KsnsStatus::Ok);
        assert_eq!(summary.stop, KsnsStop::FinalTime);
        assert_eq!(summary.steps, 3);
        assert_eq!(ksns_simulation_num_records(sim), 4);
        assert!(summary.peak_n >= first.max_n);

        let mut n = vec![0.0; nv];
        let mut c = vec![0.0; nv];
        assert_eq!(ksns_simulation_copy_density(sim, n.as_mut_ptr(), nv), KsnsStatus::Ok);
        assert_eq!(ksns_simulation_copy_concentration(sim, c.as_mut_ptr(), nv), KsnsStatus::Ok);
        assert!(n.iter().all(|&v| v > 0.0) && c.iter().all(|&v| v >= 0.0));
        let mut last = KsnsRecord::default();
        assert_eq!(ksns_simulation_record(sim, 3, &mut last), KsnsStatus::Ok);
        assert_eq!(last.max_n, n.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        assert_eq!(ksns_simulation_record(sim, 4, &mut last), KsnsStatus::InvalidArgument);
        ksns_simulation_free(sim);
    }
}

#[test]
fn checkpoint_and_vtk_through_the_abi() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = cstr(dir.path().join("ck.txt").to_str().unwrap());
    let vtk = cstr(dir.path().join("f.vtk").to_str().unwrap());
    unsafe {
        let mut mesh = ptr::null_mut();
        assert_eq!(ksns_mesh_generate_disc(0.0, 0.1, 1.0, 0.25, &mut mesh), KsnsStatus::Ok);
        let name = cstr("case400");
        let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
        assert_eq!(ksns_simulation_from_preset_on_mesh(name.as_ptr(), mesh, 0.05, &mut a), KsnsStatus::Ok);
        assert_eq!(ksns_simulation_from_preset_on_mesh(name.as_ptr(), mesh, 0.05, &mut b), KsnsStatus::Ok);
        ksns_mesh_free(mesh);

        for _ in 0..2 {
            assert_eq!(ksns_simulation_step(a, ptr::null_mut()), KsnsStatus::Ok);
        }
        assert_eq!(ksns_simulation_write_checkpoint(a, ckpt.as_ptr()), KsnsStatus::Ok);
        assert_eq!(ksns_simulation_write_vtk(a, vtk.as_ptr()), KsnsStatus::Ok);
        assert_eq!(ksns_simulation_load_checkpoint(b, ckpt.as_ptr()), KsnsStatus::Ok);

        let (mut ra, mut rb) = (KsnsRecord::default(), KsnsRecord::default());
        assert_eq!(ksns_simulation_step(a, &mut ra), KsnsStatus::Ok);
        assert_eq!(ksns_simulation_step(b, &mut rb), KsnsStatus::Ok);
        assert_eq!(ra, rb);
        ksns_simulation_free(a);
        ksns_simulation_free(b);
    }
    let text = std::fs::read_to_string(dir.path().join("f.vtk")).unwrap();
    assert!(text.contains("SCALARS n double"));
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut sim = ptr::null_mut();
        let bad = cstr("case999");
        assert_eq!(ksns_simulation_from_preset(bad.as_ptr(), -1.0, -1.0, &mut sim), KsnsStatus::Config);
        assert!(last_error().contains("case999"));
        assert!(sim.is_null());

        assert_eq!(ksns_simulation_from_preset(ptr::null(), -1.0, -1.0, &mut sim), KsnsStatus::NullPointer);
        let name = cstr("case350");
        assert_eq!(ksns_simulation_from_preset(name.as_ptr(), 0.2, 0.0, ptr::null_mut()), KsnsStatus::NullPointer);
        assert_eq!(ksns_simulation_step(ptr::null_mut(), ptr::null_mut()), KsnsStatus::NullPointer);
        let missing = cstr("/nonexistent/case.cfg");
        assert_eq!(ksns_simulation_from_config(missing.as_ptr(), &mut sim), KsnsStatus::Io);
        let mut mesh = ptr::null_mut();
        assert_eq!(ksns_mesh_read(missing.as_ptr(), &mut mesh), KsnsStatus::Io);
    }
    let v = unsafe { CStr::from_ptr(ksns_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_the_abi_and_compiles() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/ksns.h");
    let text = std::fs::read_to_string(header).unwrap();
    for sym in [
        "typedef struct KsnsSimulation KsnsSimulation;",
        "typedef struct KsnsMesh KsnsMesh;",
        "KSNS_STATUS_NULL_POINTER = 1",
        "const char *ksns_last_error(void);",
        "enum KsnsStatus ksns_simulation_step(struct KsnsSimulation *sim, struct KsnsRecord *out);",
        "void ksns_simulation_free(struct KsnsSimulation *sim);",
    ] {
        assert!(text.contains(sym), "header lacks `{sym}`");
    }

    let Ok(cc) = which_cc() else { return };
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"ksns.h\"\n\
         int main(void) {\n\
           KsnsSimulation *sim = NULL;\n\
           KsnsRecord rec;\n\
           KsnsStatus s = ksns_simulation_from_preset(\"case350\", 0.2, 0.1, &sim);\n\
           if (s == KSNS_STATUS_OK) { ksns_simulation_step(sim, &rec); ksns_simulation_free(sim); }\n\
           return s == KSNS_STATUS_OK ? 0 : (int)s;\n\
         }\n",
    )
    .unwrap();
    let out = Command::new(cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(concat!(env!("CARGO_MANIFEST_DIR"), "/include"))
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

fn which_cc() -> Result<&'static str, ()> {
    ["cc", "gcc", "clang"]
        .into_iter()
        .find(|c| Command::new(c).arg("--version").output().is_ok_and(|o| o.status.success()))
        .ok_or(())
}
