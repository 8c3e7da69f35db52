//! Numerical checks of the discrete functional inequalities behind the a
//! priori bounds. Statements free of unknown constants are checked pass/fail;
//! those with existential constants are fitted and reported.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::diagnostics::domain_constants;
use crate::error::{Error, Result};
use crate::fespace::{assemble_scalar_matrices, averaged_interpolate, LumpedMass, P1Field};
use crate::mesh::{generate_disc_mesh, TriMesh};

/// Relative tolerance of the pointwise log inequality.
pub const LOG_TOL: f64 = 1e-12;
/// Scaled tolerance of the Jensen duality step.
pub const JENSEN_TOL: f64 = 1e-10;

/// Outcome of a pass/fail check. `worst_slack` is the largest scaled excess
/// of the side that should be smaller, so `pass` iff `worst_slack <= tolerance`.
#[derive(Clone, Debug, PartialEq)]
pub struct InequalityCheckResult {
    pub name: String,
    pub samples: usize,
    pub worst_slack: f64,
    pub worst_input: String,
    pub tolerance: f64,
    pub pass: bool,
}

impl InequalityCheckResult {
    fn new(name: &str, tolerance: f64) -> Self {
        InequalityCheckResult {
            name: name.to_string(),
            samples: 0,
            worst_slack: f64::NEG_INFINITY,
            worst_input: String::new(),
            tolerance,
            pass: true,
        }
    }

    /// Records one sample; ties keep the earliest sample.
    fn push(&mut self, slack: f64, input: impl FnOnce() -> String) {
        self.samples += 1;
        let slack = if slack.is_nan() { f64::INFINITY } else { slack };
        if slack > self.worst_slack {
            self.worst_slack = slack;
            self.worst_input = input();
        }
        self.pass = self.worst_slack <= self.tolerance;
    }

    fn merge(&mut self, other: InequalityCheckResult) {
        self.samples += other.samples;
        if other.worst_slack > self.worst_slack {
            self.worst_slack = other.worst_slack;
            self.worst_input = other.worst_input;
        }
        self.pass = self.worst_slack <= self.tolerance;
    }

    pub fn csv_row(&self) -> String {
        format!("{},{},{:.16e},{}", self.name, self.samples, self.worst_slack, self.pass)
    }
}

impl fmt::Display for InequalityCheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: samples={} worst_slack={:.3e} tol={:.0e} worst_input=[{}]",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.samples,
            self.worst_slack,
            self.tolerance,
            self.worst_input
        )
    }
}

pub const REPORT_HEADER: &str = "name,samples,worst_slack,pass";

/// Both sides of `(log(x+1) - log(y+1))^2 <= (x-y)^2 / ((x+1)(y+1))`.
pub fn log_inequality_sides(x: f64, y: f64) -> (f64, f64) {
    let d = (x - y) / (y + 1.0);
    let lhs = d.ln_1p().powi(2);
    let rhs = (x - y).powi(2) / ((x + 1.0) * (y + 1.0));
    (lhs, rhs)
}

pub fn check_pointwise_log(samples: &[(f64, f64)]) -> InequalityCheckResult {
    let mut res = InequalityCheckResult::new("pointwise_log", LOG_TOL);
    for &(x, y) in samples {
        let (lhs, rhs) = log_inequality_sides(x, y);
        let scale = rhs.max(f64::MIN_POSITIVE);
        res.push((lhs - rhs) / scale, || format!("x={x:e} y={y:e}"));
    }
    res
}

/// `int i_h(e^eta)` evaluated as `e^M sum_i m_i e^(eta_i - M)`, `M = max eta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LumpedExponential {
    pub value: f64,
    /// Logarithm of the integral, finite even when `value` overflows.
    pub log_value: f64,
    pub overflow: bool,
}

pub fn lumped_exponential_integral(lumped: &LumpedMass, eta: &P1Field) -> Result<LumpedExponential> {
    crate::fespace::check_len(eta.len(), lumped.weights.len())?;
    if let Some((i, _)) = eta.values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!("non-finite value at vertex {i}")));
    }
    let m = eta.max();
    let s: f64 = lumped.weights.iter().zip(&eta.values).map(|(w, v)| w * (v - m).exp()).sum();
    let value = s * m.exp();
    Ok(LumpedExponential { value, log_value: m + s.ln(), overflow: !value.is_finite() })
}

fn require_positive(name: &str, f: &P1Field) -> Result<()> {
    match f.values.iter().enumerate().find(|(_, &v)| !(v > 0.0 && v.is_finite())) {
        Some((vertex, &value)) => Err(Error::InvalidArgument(format!(
            "{name} must be positive and finite, got {value:e} at vertex {vertex}"
        ))),
        None => Ok(()),
    }
}

/// Both sides of
/// `log int i_h e^(mu psi) >= (mu (phi, psi)_h - (phi, log(phi / mean phi))_h) / ||phi||_1 + log |Omega|`,
/// returned as `(left, right)`.
pub fn jensen_sides(lumped: &LumpedMass, phi: &P1Field, psi: &P1Field, mu: f64) -> Result<(f64, f64)> {
    require_positive("phi", phi)?;
    crate::fespace::check_len(psi.len(), phi.len())?;
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument(format!("mu must be positive, got {mu}")));
    }
    let scaled = P1Field::new(psi.values.iter().map(|v| mu * v).collect());
    let lhs = lumped_exponential_integral(lumped, &scaled)?.log_value;
    let l1 = lumped.integral(&phi.values);
    let area = lumped.total();
    let mean = l1 / area;
    let entropy: f64 = lumped
        .weights
        .iter()
        .zip(&phi.values)
        .map(|(w, p)| w * p * (p / mean).ln())
        .sum();
    let rhs = (mu * lumped.inner(&phi.values, &psi.values) - entropy) / l1 + area.ln();
    Ok((lhs, rhs))
}

fn jensen_slack(lhs: f64, rhs: f64) -> f64 {
    (rhs - lhs) / 1f64.max(lhs.abs()).max(rhs.abs())
}

pub fn check_jensen_duality(lumped: &LumpedMass, phi: &P1Field, psi: &P1Field, mu: f64) -> Result<InequalityCheckResult> {
    let (lhs, rhs) = jensen_sides(lumped, phi, psi, mu)?;
    let mut res = InequalityCheckResult::new("jensen_duality", JENSEN_TOL);
    res.push(jensen_slack(lhs, rhs), || format!("mu={mu} lhs={lhs:e} rhs={rhs:e}"));
    Ok(res)
}

/// The entropy bound in its constant-free form: the Jensen step with
/// `psi = i_h log(phi + 1)` and `mu = 2`.
pub fn check_entropy_bound(lumped: &LumpedMass, phi: &P1Field) -> Result<InequalityCheckResult> {
    require_positive("phi", phi)?;
    let psi = P1Field::new(phi.values.iter().map(|v| v.ln_1p()).collect());
    let mut res = check_jensen_duality(lumped, phi, &psi, 2.0)?;
    res.name = "entropy_bound".into();
    Ok(res)
}

/// Checks `||i_h log(phi + 1)||_1 <= ||phi||_1`.
pub fn check_log_l1(lumped: &LumpedMass, phi: &P1Field) -> Result<InequalityCheckResult> {
    require_positive("phi", phi)?;
    let log_part: Vec<f64> = phi.values.iter().map(|v| v.ln_1p()).collect();
    let (lhs, rhs) = (lumped.integral(&log_part), lumped.integral(&phi.values));
    let mut res = InequalityCheckResult::new("log_l1", LOG_TOL);
    res.push((lhs - rhs) / rhs, || format!("lhs={lhs:e} rhs={rhs:e}"));
    Ok(res)
}

/// Fit of `R(eta) = log int i_h e^eta - beta^2 (1 + lambda) / (8 alpha) ||grad eta||^2`
/// (optionally minus `log(1 + ||grad eta||^2)`) against `a + C ||eta||_1^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct MtFitReport {
    pub lambda: f64,
    pub with_prefactor: bool,
    pub samples: usize,
    pub skipped_overflow: usize,
    pub intercept: f64,
    pub slope: f64,
    /// Largest `R - (a + C ||eta||_1^2)` over the samples.
    pub sup_residual: f64,
    pub sup_ratio: f64,
}

impl fmt::Display for MtFitReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "REPORT mt_ratio: lambda={} prefactor={} samples={} skipped={} fit R = {:.4e} + {:.4e} * |eta|_1^2, sup residual {:.3e}, sup R {:.4e}",
            self.lambda,
            self.with_prefactor,
            self.samples,
            self.skipped_overflow,
            self.intercept,
            self.slope,
            self.sup_residual,
            self.sup_ratio
        )
    }
}

pub fn estimate_mt_ratio(mesh: &TriMesh, fields: &[P1Field], lambda: f64, with_prefactor: bool) -> Result<MtFitReport> {
    let dc = domain_constants(mesh)?;
    let mats = assemble_scalar_matrices(mesh);
    let coef = dc.beta * dc.beta * (1.0 + lambda) / (8.0 * dc.alpha);
    let mut pts = Vec::with_capacity(fields.len());
    let mut skipped = 0;
    for eta in fields {
        let e = lumped_exponential_integral(&mats.lumped, eta)?;
        if e.overflow && !e.log_value.is_finite() {
            skipped += 1;
            continue;
        }
        let grad2 = mats.stiffness.quadratic_form(&eta.values);
        let mut r = e.log_value - coef * grad2;
        if with_prefactor {
            r -= grad2.ln_1p();
        }
        let l1: f64 = mats.lumped.weights.iter().zip(&eta.values).map(|(w, v)| w * v.abs()).sum();
        pts.push((l1 * l1, r));
    }
    let n = pts.len() as f64;
    let (intercept, slope) = if pts.len() >= 2 {
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
        (my - slope * mx, slope)
    } else {
        (pts.first().map_or(0.0, |p| p.1), 0.0)
    };
    let sup_residual = pts.iter().map(|p| p.1 - intercept - slope * p.0).fold(f64::NEG_INFINITY, f64::max);
    let sup_ratio = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    Ok(MtFitReport {
        lambda,
        with_prefactor,
        samples: pts.len(),
        skipped_overflow: skipped,
        intercept,
        slope,
        sup_residual,
        sup_ratio,
    })
}

/// Nodal values log-uniform in `[lo, hi]`.
pub fn log_uniform_field(rng: &mut impl Rng, len: usize, lo: f64, hi: f64) -> P1Field {
    let (a, b) = (lo.ln(), hi.ln());
    P1Field::new((0..len).map(|_| rng.gen_range(a..=b).exp()).collect())
}

/// A Gaussian bump `amp exp(-|x - x0|^2 / w^2)` plus a floor, interpolated nodally.
pub fn bump_field(mesh: &TriMesh, center: [f64; 2], amp: f64, width: f64, floor: f64) -> P1Field {
    crate::fespace::nodal_interpolate(mesh, |p| {
        let r2 = (p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2);
        floor + amp * (-r2 / (width * width)).exp()
    })
}

/// The initial density of the experiments, `eta0 exp(-100 |x|^2)`, by averaged interpolation.
pub fn gaussian_initial_field(mesh: &TriMesh, eta0: f64) -> Result<P1Field> {
    averaged_interpolate(mesh, |p| eta0 * (-100.0 * (p[0] * p[0] + p[1] * p[1])).exp())
}

/// Sample counts of the verification suite.
#[derive(Clone, Copy, Debug)]
pub struct SuiteSize {
    pub log_pairs: usize,
    pub jensen_pairs: usize,
    pub mt_fields: usize,
}

impl Default for SuiteSize {
    fn default() -> Self {
        SuiteSize { log_pairs: 1_000_000, jensen_pairs: 1_000, mt_fields: 200 }
    }
}

pub struct SuiteReport {
    pub checks: Vec<InequalityCheckResult>,
    pub fits: Vec<MtFitReport>,
}

impl SuiteReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from(REPORT_HEADER);
        s.push('\n');
        for c in &self.checks {
            s.push_str(&c.csv_row());
            s.push('\n');
        }
        s
    }
}

pub const JENSEN_MUS: [f64; 3] = [0.5, 1.0, 2.0];

/// Runs every check on the experiments' disc with a seeded generator.
pub fn run_verify_suite(seed: u64, size: SuiteSize) -> Result<SuiteReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (lo, hi) = (1e-6f64.ln(), 1e6f64.ln());
    let pairs: Vec<(f64, f64)> = (0..size.log_pairs)
        .map(|_| (rng.gen_range(lo..=hi).exp(), rng.gen_range(lo..=hi).exp()))
        .collect();
    let mut checks = vec![check_pointwise_log(&pairs)];

    let mesh = generate_disc_mesh([0.0, 0.1], 1.0, 0.1)?;
    let lumped = LumpedMass::new(&mesh);
    let nv = mesh.num_vertices();
    let mut jensen = InequalityCheckResult::new("jensen_duality", JENSEN_TOL);
    let mut log_l1 = InequalityCheckResult::new("log_l1", LOG_TOL);
    for s in 0..size.jensen_pairs {
        let phi = log_uniform_field(&mut rng, nv, 1e-3, 1e3);
        let psi = log_uniform_field(&mut rng, nv, 1e-3, 1e3);
        for mu in JENSEN_MUS {
            let mut r = check_jensen_duality(&lumped, &phi, &psi, mu)?;
            r.worst_input = format!("pair {s} {}", r.worst_input);
            jensen.merge(r);
        }
        log_l1.merge(check_log_l1(&lumped, &phi)?);
    }
    checks.push(jensen);

    let mut entropy = InequalityCheckResult::new("entropy_bound", JENSEN_TOL);
    let gaussian = gaussian_initial_field(&mesh, 350.0)?;
    let mut spike = P1Field::constant(&mesh, 1.0);
    spike.values[nv / 2] = 1e4;
    for (label, phi) in [("gaussian eta0=350", &gaussian), ("spike 1e4", &spike)] {
        let mut r = check_entropy_bound(&lumped, phi)?;
        r.worst_input = format!("{label} {}", r.worst_input);
        entropy.merge(r);
    }
    checks.push(entropy);
    checks.push(log_l1);

    let mut fields = Vec::with_capacity(size.mt_fields);
    for s in 0..size.mt_fields {
        let amp = 10f64.powf(-2.0 + 4.0 * s as f64 / size.mt_fields.max(1) as f64);
        let cx = rng.gen_range(-0.5..0.5);
        let cy = rng.gen_range(-0.4..0.6);
        fields.push(bump_field(&mesh, [cx, cy], amp, rng.gen_range(0.1..0.5), 1e-3));
    }
    let fits = vec![
        estimate_mt_ratio(&mesh, &fields, 0.1, false)?,
        estimate_mt_ratio(&mesh, &fields, 0.1, true)?,
    ];
    Ok(SuiteReport { checks, fits })
}
