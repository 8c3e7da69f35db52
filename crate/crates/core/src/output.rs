//! File output: atomic writes, legacy VTK snapshots, CSV series and checkpoints.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::diagnostics::{DiagnosticsRecord, CSV_HEADER};
use crate::error::{Error, Result};
use crate::fespace::{check_len, P1Field, TaylorHoodField};
use crate::mesh::TriMesh;
use crate::solver::SimState;

/// Writes `bytes` to a temporary sibling file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => std::path::PathBuf::from("."),
    };
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Legacy VTK ASCII unstructured grid with point data `n`, `c`, `p` and the
/// velocity `u` sampled at the vertices.
pub fn vtk_string(mesh: &TriMesh, state: &SimState) -> Result<String> {
    let nv = mesh.num_vertices();
    state.n.check(mesh)?;
    state.c.check(mesh)?;
    check_len(state.uh_p.pressure.len(), nv)?;
    let mut s = String::new();
    let _ = writeln!(s, "# vtk DataFile Version 3.0");
    let _ = writeln!(s, "ksns step {} time {:e}", state.step, state.time);
    let _ = writeln!(s, "ASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(s, "POINTS {nv} double");
    for p in mesh.vertices() {
        let _ = writeln!(s, "{:.16e} {:.16e} 0", p[0], p[1]);
    }
    let nt = mesh.num_triangles();
    let _ = writeln!(s, "CELLS {nt} {}", 4 * nt);
    for t in mesh.triangles() {
        let _ = writeln!(s, "3 {} {} {}", t[0], t[1], t[2]);
    }
    let _ = writeln!(s, "CELL_TYPES {nt}");
    for _ in 0..nt {
        let _ = writeln!(s, "5");
    }
    let _ = writeln!(s, "POINT_DATA {nv}");
    for (name, values) in [("n", &state.n.values), ("c", &state.c.values), ("p", &state.uh_p.pressure)] {
        let _ = writeln!(s, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for v in values.iter() {
            let _ = writeln!(s, "{v:.16e}");
        }
    }
    let _ = writeln!(s, "VECTORS u double");
    for i in 0..nv {
        let u = state.uh_p.velocity_at_vertex(i);
        let _ = writeln!(s, "{:.16e} {:.16e} 0", u[0], u[1]);
    }
    Ok(s)
}

pub fn write_fields_vtk(mesh: &TriMesh, state: &SimState, path: &Path) -> Result<()> {
    write_atomic(path, vtk_string(mesh, state)?.as_bytes())
}

pub fn series_to_csv(records: &[DiagnosticsRecord]) -> String {
    let mut s = String::with_capacity(256 * (records.len() + 1));
    s.push_str(CSV_HEADER);
    s.push('\n');
    for r in records {
        s.push_str(&r.to_csv_row());
        s.push('\n');
    }
    s
}

pub fn write_series_csv(records: &[DiagnosticsRecord], path: &Path) -> Result<()> {
    write_atomic(path, series_to_csv(records).as_bytes())
}

pub fn series_from_csv(text: &str, origin: &Path) -> Result<Vec<DiagnosticsRecord>> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    match lines.next() {
        Some((_, h)) if h.trim() == CSV_HEADER => {}
        Some((i, _)) => return Err(Error::parse(origin, i + 1, "unexpected CSV header")),
        None => return Err(Error::parse(origin, 1, "empty series file")),
    }
    lines
        .map(|(i, l)| DiagnosticsRecord::from_csv_row(l).ok_or_else(|| Error::parse(origin, i + 1, "malformed record")))
        .collect()
}

pub fn read_series_csv(path: &Path) -> Result<Vec<DiagnosticsRecord>> {
    series_from_csv(&std::fs::read_to_string(path)?, path)
}

const CHECKPOINT_MAGIC: &str = "ksns-checkpoint 1";

/// Serializes a state with shortest round-trip float formatting, so reading
/// it back reproduces every value bit for bit.
pub fn checkpoint_string(state: &SimState) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{CHECKPOINT_MAGIC}");
    let _ = writeln!(s, "step {}", state.step);
    let _ = writeln!(s, "time {:e}", state.time);
    let sections: [(&str, &[f64]); 4] = [
        ("n", &state.n.values),
        ("c", &state.c.values),
        ("velocity", &state.uh_p.velocity),
        ("pressure", &state.uh_p.pressure),
    ];
    for (name, values) in sections {
        let _ = writeln!(s, "{name} {}", values.len());
        for v in values {
            let _ = writeln!(s, "{v:e}");
        }
    }
    s
}

pub fn checkpoint_from_str(text: &str, origin: &Path) -> Result<SimState> {
    let lines: Vec<(usize, &str)> = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty())
        .collect();
    let mut pos = 0;
    let mut next = |what: &str| {
        let item = lines.get(pos).copied();
        pos += 1;
        item.ok_or_else(|| Error::parse(origin, 0, format!("unexpected end of file, expected {what}")))
    };
    let (l, magic) = next("header")?;
    if magic != CHECKPOINT_MAGIC {
        return Err(Error::parse(origin, l, format!("expected `{CHECKPOINT_MAGIC}`")));
    }
    let keyed = |(l, line): (usize, &str), key: &str| match line.split_once(' ') {
        Some((k, v)) if k == key => Ok((l, v.trim().to_string())),
        _ => Err(Error::parse(origin, l, format!("expected `{key} <value>`"))),
    };
    let (l, v) = keyed(next("step")?, "step")?;
    let step = v.parse().map_err(|_| Error::parse(origin, l, "invalid step"))?;
    let (l, v) = keyed(next("time")?, "time")?;
    let time = v.parse().map_err(|_| Error::parse(origin, l, "invalid time"))?;
    let mut arrays = Vec::with_capacity(4);
    for name in ["n", "c", "velocity", "pressure"] {
        let (l, v) = keyed(next(name)?, name)?;
        let count: usize = v.parse().map_err(|_| Error::parse(origin, l, format!("invalid length for `{name}`")))?;
        let mut values = Vec::with_capacity(count);
        for _ in 0..count {
            let (l, v) = next(name)?;
            values.push(v.parse::<f64>().map_err(|_| Error::parse(origin, l, format!("invalid value `{v}`")))?);
        }
        arrays.push(values);
    }
    if let Ok((l, _)) = next("end of file") {
        return Err(Error::parse(origin, l, "trailing data after checkpoint"));
    }
    let pressure = arrays.pop().unwrap_or_default();
    let velocity = arrays.pop().unwrap_or_default();
    let c = P1Field::new(arrays.pop().unwrap_or_default());
    let n = P1Field::new(arrays.pop().unwrap_or_default());
    for got in [c.len(), pressure.len()] {
        check_len(got, n.len())?;
    }
    Ok(SimState { n, c, uh_p: TaylorHoodField { velocity, pressure }, step, time })
}

pub fn write_checkpoint(state: &SimState, path: &Path) -> Result<()> {
    write_atomic(path, checkpoint_string(state).as_bytes())
}

pub fn read_checkpoint(path: &Path) -> Result<SimState> {
    checkpoint_from_str(&std::fs::read_to_string(path)?, path)
}
