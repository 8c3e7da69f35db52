use std::fmt::Write as _;
use std::path::Path;

use super::TriMesh;
use crate::error::{Error, Result};
use crate::output::write_atomic;

/// Serializes a mesh in the `trimesh 1` text format.
pub fn mesh_to_string(mesh: &TriMesh) -> String {
    let mut s = String::new();
    s.push_str("trimesh 1\n");
    let _ = writeln!(s, "vertices {}", mesh.num_vertices());
    for (i, p) in mesh.vertices().iter().enumerate() {
        let _ = writeln!(s, "{:.16e} {:.16e} {}", p[0], p[1], mesh.is_boundary_vertex(i) as u8);
    }
    let _ = writeln!(s, "triangles {}", mesh.num_triangles());
    for t in mesh.triangles() {
        let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
    }
    s
}

pub fn write_mesh(mesh: &TriMesh, path: &Path) -> Result<()> {
    write_atomic(path, mesh_to_string(mesh).as_bytes())
}

pub fn read_mesh(path: &Path) -> Result<TriMesh> {
    let text = std::fs::read_to_string(path)?;
    mesh_from_str(&text, &path.display().to_string())
}

/// Parses the `trimesh 1` format. Blank lines and `#` comments are skipped;
/// boundary flags must agree with the boundary computed from the topology.
pub fn mesh_from_str(text: &str, origin: &str) -> Result<TriMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(n, l)| (n + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let mut next = |what: &str| {
        lines
            .next()
            .ok_or_else(|| Error::parse(origin, 0, format!("unexpected end of file, expected {what}")))
    };

    let (n, header) = next("header")?;
    if header.split_whitespace().collect::<Vec<_>>() != ["trimesh", "1"] {
        return Err(Error::parse(origin, n, format!("expected `trimesh 1`, found `{header}`")));
    }
    let count = |line: (usize, &str), key: &str| -> Result<usize> {
        let mut it = line.1.split_whitespace();
        match (it.next(), it.next().map(str::parse::<usize>), it.next()) {
            (Some(k), Some(Ok(v)), None) if k == key => Ok(v),
            _ => Err(Error::parse(origin, line.0, format!("expected `{key} <count>`, found `{}`", line.1))),
        }
    };

    let nv = count(next("vertex count")?, "vertices")?;
    let mut vertices = Vec::with_capacity(nv);
    let mut flags = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (n, l) = next("vertex line")?;
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 3 {
            return Err(Error::parse(origin, n, "vertex line needs `x y flag`"));
        }
        let x: f64 = f[0].parse().map_err(|_| Error::parse(origin, n, format!("bad coordinate `{}`", f[0])))?;
        let y: f64 = f[1].parse().map_err(|_| Error::parse(origin, n, format!("bad coordinate `{}`", f[1])))?;
        let flag = match f[2] {
            "0" => false,
            "1" => true,
            other => return Err(Error::parse(origin, n, format!("boundary flag must be 0 or 1, got `{other}`"))),
        };
        vertices.push([x, y]);
        flags.push((n, flag));
    }

    let nt = count(next("triangle count")?, "triangles")?;
    let mut triangles = Vec::with_capacity(nt);
    for _ in 0..nt {
        let (n, l) = next("triangle line")?;
        let idx: Vec<usize> = l
            .split_whitespace()
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(origin, n, "triangle line needs three vertex indices"))?;
        if idx.len() != 3 {
            return Err(Error::parse(origin, n, "triangle line needs three vertex indices"));
        }
        if let Some(bad) = idx.iter().find(|&&v| v >= nv) {
            return Err(Error::parse(origin, n, format!("vertex index {bad} out of range")));
        }
        triangles.push([idx[0], idx[1], idx[2]]);
    }
    if let Some((n, l)) = lines.next() {
        return Err(Error::parse(origin, n, format!("trailing content `{l}`")));
    }

    let mesh = TriMesh::new(vertices, triangles)?;
    for (i, &(n, flag)) in flags.iter().enumerate() {
        if flag != mesh.is_boundary_vertex(i) {
            return Err(Error::parse(
                origin,
                n,
                format!("boundary flag of vertex {i} disagrees with the topology"),
            ));
        }
    }
    Ok(mesh)
}
