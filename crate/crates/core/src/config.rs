//! Scenario configuration: presets, a flat `key = value` file format and
//! mesh construction.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mesh::{generate_disc_mesh, make_delaunay, read_mesh, refine_region_until, Point, TriMesh};
use crate::solver::{NLinearization, SolverParams};

pub const PRESET_NAMES: [&str; 5] = ["case350", "case400", "case450", "case450_refined", "case450_phi50"];

#[derive(Clone, Debug, PartialEq)]
pub enum DomainSpec {
    Disc { center: Point, radius: f64 },
    MeshFile(PathBuf),
}

/// Axis-aligned box whose triangles are refined down to `target_h`.
#[derive(Clone, Debug, PartialEq)]
pub struct RefineSpec {
    pub x: [f64; 2],
    pub y: [f64; 2],
    pub target_h: f64,
}

impl RefineSpec {
    pub fn contains(&self, p: Point) -> bool {
        p[0] >= self.x[0] && p[0] <= self.x[1] && p[1] >= self.y[0] && p[1] <= self.y[1]
    }
}

/// What to do when the mesh fails the weak-acuteness audit.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AcutenessPolicy {
    Warn,
    Abort,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub domain: DomainSpec,
    pub target_h: f64,
    pub refine: Option<RefineSpec>,
    /// Amplitude of `n_0 = eta0 exp(-100 |x|^2)`.
    pub eta0: f64,
    /// Strength of the potential `Phi = -phi0 y`.
    pub phi0: f64,
    pub k: f64,
    pub final_time: f64,
    pub eps: f64,
    pub q: f64,
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    pub max_halvings: usize,
    pub n_linearization: NLinearization,
    pub blowup_ceiling: f64,
    pub plateau_window: usize,
    /// Steps between VTK snapshots; 0 disables them.
    pub snapshot_cadence: usize,
    /// Steps between checkpoints; 0 disables them.
    pub checkpoint_cadence: usize,
    pub deterministic: bool,
    pub acuteness: AcutenessPolicy,
    pub output_dir: PathBuf,
}

/// Center of the disc used by every preset.
pub const PRESET_CENTER: Point = [0.0, 0.1];

pub fn preset_scenario(name: &str) -> Result<ScenarioConfig> {
    let mut cfg = ScenarioConfig {
        name: name.to_string(),
        domain: DomainSpec::Disc { center: PRESET_CENTER, radius: 1.0 },
        target_h: 0.05,
        refine: None,
        eta0: 350.0,
        phi0: 10.0,
        k: 1e-2,
        final_time: 1.0,
        eps: 1e-6,
        q: 2.0,
        picard_tol: 1e-3,
        picard_max_iters: 50,
        max_halvings: 4,
        n_linearization: NLinearization::Implicit,
        blowup_ceiling: 1e6,
        plateau_window: 20,
        snapshot_cadence: 0,
        checkpoint_cadence: 0,
        deterministic: true,
        acuteness: AcutenessPolicy::Warn,
        output_dir: PathBuf::from("out").join(name),
    };
    match name {
        "case350" => {}
        "case400" => cfg.eta0 = 400.0,
        "case450" => {
            cfg.eta0 = 450.0;
            cfg.k = 1e-3;
            cfg.plateau_window = 200;
        }
        "case450_refined" => {
            cfg.eta0 = 450.0;
            cfg.k = 1e-3;
            cfg.plateau_window = 200;
            cfg.refine = Some(RefineSpec { x: [-0.25, 0.25], y: [-1.0, 0.2], target_h: 0.02 });
        }
        "case450_phi50" => {
            cfg.eta0 = 450.0;
            cfg.phi0 = 50.0;
            cfg.k = 1e-3;
            cfg.plateau_window = 200;
        }
        _ => return Err(Error::UnknownPreset(name.to_string())),
    }
    Ok(cfg)
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, field: &str, msg: &str| if ok { Ok(()) } else { Err(Error::config(field, msg)) };
        check(!self.name.is_empty() && !self.name.chars().any(char::is_whitespace), "name", "must be a non-empty word")?;
        if let DomainSpec::Disc { center, radius } = &self.domain {
            check(center.iter().all(|v| v.is_finite()), "center", "must be finite")?;
            check(radius.is_finite() && *radius > 0.0, "radius", "must be positive")?;
            check(self.target_h.is_finite() && self.target_h > 0.0 && self.target_h <= *radius, "target_h", "must lie in (0, radius]")?;
        }
        if let Some(r) = &self.refine {
            check(r.x[0] < r.x[1] && r.y[0] < r.y[1], "refine_box", "must satisfy x0 < x1 and y0 < y1")?;
            check(r.target_h.is_finite() && r.target_h > 0.0, "refine_h", "must be positive")?;
        }
        check(self.eta0.is_finite() && self.eta0 > 0.0, "eta0", "must be positive")?;
        check(self.phi0.is_finite(), "phi0", "must be finite")?;
        check(self.k.is_finite() && self.k > 0.0, "k", "must be positive")?;
        check(self.final_time.is_finite() && self.final_time >= 0.0, "final_time", "must be nonnegative")?;
        check(self.eps > 0.0 && self.eps < 1.0, "eps", "must lie in (0, 1)")?;
        check(self.q.is_finite() && self.q > 0.0, "q", "must be positive")?;
        check(self.picard_tol > 0.0, "picard_tol", "must be positive")?;
        check(self.picard_max_iters > 0, "picard_max_iters", "must be positive")?;
        check(self.max_halvings <= 30, "max_halvings", "must be at most 30")?;
        check(self.blowup_ceiling > 0.0, "blowup_ceiling", "must be positive")?;
        check(self.plateau_window > 0, "plateau_window", "must be positive")?;
        Ok(())
    }

    pub fn solver_params(&self) -> SolverParams {
        SolverParams {
            k: self.k,
            eps: self.eps,
            q: self.q,
            picard_tol: self.picard_tol,
            picard_max_iters: self.picard_max_iters,
            max_halvings: self.max_halvings,
            linearization: self.n_linearization,
        }
    }

    /// Number of steps needed to reach `final_time`.
    pub fn num_steps(&self) -> usize {
        let m = self.final_time / self.k;
        // tolerate round-off in T/k
        (m - 1e-9 * m.max(1.0)).ceil().max(0.0) as usize
    }

    pub fn initial_density(&self) -> impl Fn(Point) -> f64 {
        let eta0 = self.eta0;
        move |p: Point| eta0 * (-100.0 * (p[0] * p[0] + p[1] * p[1])).exp()
    }

    /// `grad Phi` for `Phi = -phi0 y`.
    pub fn potential_gradient(&self) -> impl Fn(Point) -> [f64; 2] {
        let phi0 = self.phi0;
        move |_| [0.0, -phi0]
    }

    /// Builds the mesh: generation or loading, optional strip refinement
    /// followed by edge flips, then the weak-acuteness audit.
    pub fn build_mesh(&self) -> Result<TriMesh> {
        let mut mesh = match &self.domain {
            DomainSpec::Disc { center, radius } => generate_disc_mesh(*center, *radius, self.target_h)?,
            DomainSpec::MeshFile(path) => read_mesh(path)?,
        };
        if let Some(r) = &self.refine {
            mesh = refine_region_until(&mesh, |p| r.contains(p), r.target_h)?;
            mesh = make_delaunay(&mesh)?;
        }
        let audit = mesh.check_weak_acuteness();
        if !audit.pass {
            let (i, j, v) = audit.offenders[0];
            let msg = format!(
                "mesh is not weakly acute: {} offending edges, first ({i}, {j}) with stiffness {v:e}",
                audit.offenders.len()
            );
            match self.acuteness {
                AcutenessPolicy::Abort => return Err(Error::DegenerateMesh(msg)),
                AcutenessPolicy::Warn => eprintln!("warning: {msg}"),
            }
        }
        Ok(mesh)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("name", self.name.clone());
        match &self.domain {
            DomainSpec::Disc { center, radius } => {
                kv("domain", "disc".into());
                kv("center", format!("{} {}", center[0], center[1]));
                kv("radius", radius.to_string());
            }
            DomainSpec::MeshFile(p) => {
                kv("domain", "file".into());
                kv("mesh_file", p.display().to_string());
            }
        }
        kv("target_h", self.target_h.to_string());
        match &self.refine {
            Some(r) => {
                kv("refine_box", format!("{} {} {} {}", r.x[0], r.x[1], r.y[0], r.y[1]));
                kv("refine_h", r.target_h.to_string());
            }
            None => kv("refine_box", "none".into()),
        }
        kv("eta0", self.eta0.to_string());
        kv("phi0", self.phi0.to_string());
        kv("k", self.k.to_string());
        kv("final_time", self.final_time.to_string());
        kv("eps", self.eps.to_string());
        kv("q", self.q.to_string());
        kv("picard_tol", self.picard_tol.to_string());
        kv("picard_max_iters", self.picard_max_iters.to_string());
        kv("max_halvings", self.max_halvings.to_string());
        kv("n_linearization", self.n_linearization.as_str().into());
        kv("blowup_ceiling", self.blowup_ceiling.to_string());
        kv("plateau_window", self.plateau_window.to_string());
        kv("snapshot_cadence", self.snapshot_cadence.to_string());
        kv("checkpoint_cadence", self.checkpoint_cadence.to_string());
        kv("deterministic", self.deterministic.to_string());
        kv(
            "acuteness",
            match self.acuteness {
                AcutenessPolicy::Warn => "warn",
                AcutenessPolicy::Abort => "abort",
            }
            .into(),
        );
        kv("output_dir", self.output_dir.display().to_string());
        s
    }

    /// Parses the `key = value` format. Every key is required except
    /// `refine_h` (only with a refine box) and the domain keys of the other
    /// domain kind; unknown or repeated keys are errors.
    pub fn from_text(text: &str, origin: &Path) -> Result<Self> {
        let mut entries: Vec<(&str, &str, usize)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(origin, line_no, format!("expected `key = value`, got `{line}`")))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(Error::parse(origin, line_no, format!("unknown key `{k}`")));
            }
            if entries.iter().any(|(e, _, _)| *e == k) {
                return Err(Error::parse(origin, line_no, format!("duplicate key `{k}`")));
            }
            entries.push((k, v, line_no));
        }
        let find = |k: &str| entries.iter().find(|(e, _, _)| *e == k).map(|&(_, v, l)| (v, l));
        let get = |k: &str| find(k).ok_or_else(|| Error::parse(origin, 0, format!("missing key `{k}`")));
        fn num<T: FromStr>(origin: &Path, k: &str, (v, l): (&str, usize)) -> Result<T> {
            v.parse::<T>()
                .map_err(|_| Error::parse(origin, l, format!("invalid value `{v}` for `{k}`")))
        }
        let nums = |k: &str, count: usize| -> Result<Vec<f64>> {
            let (v, l) = get(k)?;
            let parts: Vec<&str> = v.split_whitespace().collect();
            if parts.len() != count {
                return Err(Error::parse(origin, l, format!("`{k}` expects {count} numbers")));
            }
            parts.iter().map(|p| num(origin, k, (p, l))).collect()
        };
        let f = |k: &str| -> Result<f64> { num(origin, k, get(k)?) };
        let u = |k: &str| -> Result<usize> { num(origin, k, get(k)?) };

        let domain = match get("domain")? {
            ("disc", _) => {
                let c = nums("center", 2)?;
                DomainSpec::Disc { center: [c[0], c[1]], radius: f("radius")? }
            }
            ("file", _) => DomainSpec::MeshFile(PathBuf::from(get("mesh_file")?.0)),
            (v, l) => return Err(Error::parse(origin, l, format!("domain must be `disc` or `file`, got `{v}`"))),
        };
        let refine = match get("refine_box")? {
            ("none", _) => None,
            _ => {
                let b = nums("refine_box", 4)?;
                Some(RefineSpec { x: [b[0], b[1]], y: [b[2], b[3]], target_h: f("refine_h")? })
            }
        };
        let (lin, lin_line) = get("n_linearization")?;
        let n_linearization = NLinearization::parse(lin)
            .ok_or_else(|| Error::parse(origin, lin_line, format!("n_linearization must be `implicit` or `lagged`, got `{lin}`")))?;
        let acuteness = match get("acuteness")? {
            ("warn", _) => AcutenessPolicy::Warn,
            ("abort", _) => AcutenessPolicy::Abort,
            (v, l) => return Err(Error::parse(origin, l, format!("acuteness must be `warn` or `abort`, got `{v}`"))),
        };
        let cfg = ScenarioConfig {
            name: get("name")?.0.to_string(),
            domain,
            target_h: f("target_h")?,
            refine,
            eta0: f("eta0")?,
            phi0: f("phi0")?,
            k: f("k")?,
            final_time: f("final_time")?,
            eps: f("eps")?,
            q: f("q")?,
            picard_tol: f("picard_tol")?,
            picard_max_iters: u("picard_max_iters")?,
            max_halvings: u("max_halvings")?,
            n_linearization,
            blowup_ceiling: f("blowup_ceiling")?,
            plateau_window: u("plateau_window")?,
            snapshot_cadence: u("snapshot_cadence")?,
            checkpoint_cadence: u("checkpoint_cadence")?,
            deterministic: num(origin, "deterministic", get("deterministic")?)?,
            acuteness,
            output_dir: PathBuf::from(get("output_dir")?.0),
        };
        cfg.validate().map_err(|e| match e {
            Error::Config { field, message } => {
                let line = find(&field).map(|(_, l)| l).unwrap_or(0);
                Error::parse(origin, line, format!("`{field}` {message}"))
            }
            other => other,
        })?;
        Ok(cfg)
    }
}

const KEYS: [&str; 25] = [
    "name",
    "domain",
    "center",
    "radius",
    "mesh_file",
    "target_h",
    "refine_box",
    "refine_h",
    "eta0",
    "phi0",
    "k",
    "final_time",
    "eps",
    "q",
    "picard_tol",
    "picard_max_iters",
    "max_halvings",
    "n_linearization",
    "blowup_ceiling",
    "plateau_window",
    "snapshot_cadence",
    "checkpoint_cadence",
    "deterministic",
    "acuteness",
    "output_dir",
];

pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    ScenarioConfig::from_text(&text, path)
}

pub fn write_config(config: &ScenarioConfig, path: &Path) -> Result<()> {
    config.validate()?;
    crate::output::write_atomic(path, config.to_text().as_bytes())
}
