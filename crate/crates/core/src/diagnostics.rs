//! Per-step invariant monitors, the energy functional, domain threshold
//! constants and regime classification.

use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};
use crate::fespace::LumpedMass;
use crate::mesh::TriMesh;
use crate::sparse::CsrMatrix;

/// Bitmask of invariant failures; zero means every check passed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub struct InvariantFlags(pub u32);

impl InvariantFlags {
    /// Some `n_i <= 0`.
    pub const NON_POSITIVE_N: u32 = 1;
    /// Some `c_i < 0`.
    pub const NEGATIVE_C: u32 = 1 << 1;
    /// Lumped mass of `n` changed.
    pub const MASS_N: u32 = 1 << 2;
    /// `(1 + k) m_c' = m_c + k m_n'` violated.
    pub const MASS_C: u32 = 1 << 3;
    /// Some `n_i <= -1`, so the energy is undefined.
    pub const LOG_DOMAIN: u32 = 1 << 4;
    /// `gamma^c` met a numerically vanishing `n + 1`.
    pub const GAMMA_GUARD: u32 = 1 << 5;
    /// The step was accepted only after time-step halving.
    pub const STEP_RETRIED: u32 = 1 << 6;

    pub fn ok(self) -> bool {
        self.0 == 0
    }

    pub fn has(self, bit: u32) -> bool {
        self.0 & bit != 0
    }

    pub fn set(&mut self, bit: u32) {
        self.0 |= bit;
    }

    /// True when positivity of `n` and nonnegativity of `c` hold.
    pub fn bounds_ok(self) -> bool {
        !self.has(Self::NON_POSITIVE_N) && !self.has(Self::NEGATIVE_C)
    }
}

/// Relative tolerance of the per-step mass checks.
pub const MASS_TOL: f64 = 1e-8;

/// Compares consecutive states: positivity, conservation of the lumped
/// mass of `n`, the chemoattractant mass recursion and the log domain.
pub fn verify_step_invariants(
    lumped: &LumpedMass,
    prev: (&[f64], &[f64]),
    next: (&[f64], &[f64]),
    k: f64,
) -> InvariantFlags {
    let (n0, c0) = prev;
    let (n1, c1) = next;
    let mut f = InvariantFlags::default();
    if n1.iter().any(|&v| !(v > 0.0)) {
        f.set(InvariantFlags::NON_POSITIVE_N);
    }
    if c1.iter().any(|&v| !(v >= 0.0)) {
        f.set(InvariantFlags::NEGATIVE_C);
    }
    if n1.iter().any(|&v| !(v > -1.0)) {
        f.set(InvariantFlags::LOG_DOMAIN);
    }
    let (m0, m1) = (lumped.integral(n0), lumped.integral(n1));
    if !((m1 - m0).abs() <= MASS_TOL * m0.abs().max(m1.abs())) {
        f.set(InvariantFlags::MASS_N);
    }
    let lhs = (1.0 + k) * lumped.integral(c1);
    let rhs = lumped.integral(c0) + k * m1;
    if !((lhs - rhs).abs() <= MASS_TOL * lhs.abs().max(rhs.abs()).max(f64::MIN_POSITIVE)) {
        f.set(InvariantFlags::MASS_C);
    }
    f
}

/// `F_h(n, c) = -(log(n + 1), 1)_h + ||c||^2_{L^2}` with the consistent mass for `c`.
pub fn energy_functional(lumped: &LumpedMass, mass: &CsrMatrix, n: &[f64], c: &[f64]) -> Result<f64> {
    let mut acc = 0.0;
    for (i, (&m, &v)) in lumped.weights.iter().zip(n).enumerate() {
        if !(v > -1.0) {
            return Err(Error::LogDomain { vertex: i, value: v });
        }
        acc -= m * v.ln_1p();
    }
    Ok(acc + mass.quadratic_form(c))
}

/// `(n, log(n / nbar0))_h`.
pub fn relative_entropy(lumped: &LumpedMass, n: &[f64], nbar0: f64) -> Result<f64> {
    if !(nbar0 > 0.0) {
        return Err(Error::InvalidArgument(format!("reference mean must be positive, got {nbar0}")));
    }
    let mut acc = 0.0;
    for (i, (&m, &v)) in lumped.weights.iter().zip(n).enumerate() {
        if !(v > 0.0) {
            return Err(Error::LogDomain { vertex: i, value: v });
        }
        acc += m * v * (v / nbar0).ln();
    }
    Ok(acc)
}

/// Constants of a convex polygonal domain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DomainConstants {
    /// Minimum interior angle of the boundary polygon.
    pub alpha: f64,
    pub beta: f64,
    pub chi: f64,
    pub two_chi: f64,
    pub four_chi: f64,
}

/// Computes `alpha`, `beta = 1` and `chi = alpha / beta^2` for a convex
/// simply connected polygonal mesh.
pub fn domain_constants(mesh: &TriMesh) -> Result<DomainConstants> {
    let loops = mesh.boundary_loops();
    if loops.len() != 1 {
        return Err(Error::InvalidArgument(format!(
            "expected one boundary component, found {}",
            loops.len()
        )));
    }
    let mut alpha = f64::INFINITY;
    for &v in &loops[0] {
        let angle = mesh.domain_angle(v);
        if angle > PI + 1e-12 {
            return Err(Error::NonConvexDomain { vertex: v, angle });
        }
        alpha = alpha.min(angle);
    }
    let beta = 1.0;
    let chi = alpha / (beta * beta);
    Ok(DomainConstants {
        alpha,
        beta,
        chi,
        two_chi: 2.0 * chi,
        four_chi: 4.0 * chi,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MassRegime {
    /// Mass below `2 chi`: global existence is known.
    SubcriticalExistence,
    /// Between `2 chi` and `4 chi`.
    ConjecturedWindow,
    /// At or above `4 chi`.
    Supercritical,
}

impl fmt::Display for MassRegime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MassRegime::SubcriticalExistence => "subcritical-existence",
            MassRegime::ConjecturedWindow => "conjectured-window",
            MassRegime::Supercritical => "supercritical",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdReport {
    pub mass_n: f64,
    pub two_chi: f64,
    pub four_chi: f64,
    pub regime: MassRegime,
}

pub fn threshold_report(mass_n: f64, constants: &DomainConstants) -> ThresholdReport {
    let regime = if mass_n < constants.two_chi {
        MassRegime::SubcriticalExistence
    } else if mass_n < constants.four_chi {
        MassRegime::ConjecturedWindow
    } else {
        MassRegime::Supercritical
    };
    ThresholdReport {
        mass_n,
        two_chi: constants.two_chi,
        four_chi: constants.four_chi,
        regime,
    }
}

/// One row of the time series.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub step: usize,
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
    pub picard_iters: usize,
    pub flags: InvariantFlags,
}

pub const CSV_HEADER: &str =
    "step,time,mass_n,mass_c,min_n,max_n,min_c,max_c,u_l2,gradu_l2,energy,picard_iters,flags";

impl DiagnosticsRecord {
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{},{}",
            self.step,
            self.time,
            self.mass_n,
            self.mass_c,
            self.min_n,
            self.max_n,
            self.min_c,
            self.max_c,
            self.u_l2,
            self.gradu_l2,
            self.energy,
            self.picard_iters,
            self.flags.0
        )
    }

    pub fn from_csv_row(line: &str) -> Option<Self> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 13 {
            return None;
        }
        let x = |k: usize| f[k].parse::<f64>().ok();
        Some(DiagnosticsRecord {
            step: f[0].parse().ok()?,
            time: x(1)?,
            mass_n: x(2)?,
            mass_c: x(3)?,
            min_n: x(4)?,
            max_n: x(5)?,
            min_c: x(6)?,
            max_c: x(7)?,
            u_l2: x(8)?,
            gradu_l2: x(9)?,
            // energy may be NaN when the log domain was violated
            energy: x(10)?,
            picard_iters: f[11].parse().ok()?,
            flags: InvariantFlags(f[12].parse().ok()?),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    Bounded,
    BlowUp,
    Undecided,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Regime::Bounded => "bounded",
            Regime::BlowUp => "blow-up",
            Regime::Undecided => "undecided",
        })
    }
}

/// Relative spread of `max n` over the trailing window that counts as a plateau.
pub const PLATEAU_TOL: f64 = 0.05;

/// Blow-up when `max n` reached the ceiling, or the run aborted while
/// `max n` grew monotonically over the trailing window; bounded when `max n`
/// varied by at most 5% over the trailing window of an unaborted run.
pub fn classify_regime(series: &[DiagnosticsRecord], ceiling: f64, window: usize, aborted: bool) -> Regime {
    if series.iter().any(|r| r.max_n >= ceiling) {
        return Regime::BlowUp;
    }
    let window = window.max(1);
    if series.len() < window {
        return Regime::Undecided;
    }
    let tail = &series[series.len() - window..];
    if aborted {
        let growing = tail.windows(2).all(|w| w[1].max_n > w[0].max_n);
        return if growing { Regime::BlowUp } else { Regime::Undecided };
    }
    let hi = tail.iter().map(|r| r.max_n).fold(f64::NEG_INFINITY, f64::max);
    let lo = tail.iter().map(|r| r.max_n).fold(f64::INFINITY, f64::min);
    if hi > 0.0 && (hi - lo) / hi <= PLATEAU_TOL {
        Regime::Bounded
    } else {
        Regime::Undecided
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fespace::assemble_scalar_matrices;
    use crate::mesh::generate_disc_mesh;

    fn record(step: usize, max_n: f64) -> DiagnosticsRecord {
        DiagnosticsRecord {
            step,
            time: step as f64,
            mass_n: 1.0,
            mass_c: 0.0,
            min_n: 0.1,
            max_n,
            min_c: 0.0,
            max_c: 0.0,
            u_l2: 0.0,
            gradu_l2: 0.0,
            energy: 0.0,
            picard_iters: 1,
            flags: InvariantFlags::default(),
        }
    }

    fn unit_square() -> TriMesh {
        let v = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [0.5, 0.5]];
        TriMesh::new(v, vec![[0, 1, 4], [1, 2, 4], [2, 3, 4], [3, 0, 4]]).unwrap()
    }

    #[test]
    fn energy_examples() {
        let m = unit_square();
        let s = assemble_scalar_matrices(&m);
        let zero = vec![0.0; 5];
        assert_eq!(energy_functional(&s.lumped, &s.mass, &zero, &zero).unwrap(), 0.0);
        let n = vec![std::f64::consts::E - 1.0; 5];
        assert!((energy_functional(&s.lumped, &s.mass, &n, &zero).unwrap() + 1.0).abs() < 1e-14);
        let c: Vec<f64> = (0..5).map(|i| i as f64 * 0.3).collect();
        let c2: Vec<f64> = c.iter().map(|v| 2.0 * v).collect();
        let e1 = energy_functional(&s.lumped, &s.mass, &zero, &c).unwrap();
        let e2 = energy_functional(&s.lumped, &s.mass, &zero, &c2).unwrap();
        assert!((e2 - 4.0 * e1).abs() < 1e-14);
        let bad = vec![-1.5; 5];
        assert!(matches!(energy_functional(&s.lumped, &s.mass, &bad, &zero), Err(Error::LogDomain { .. })));
    }

    #[test]
    fn relative_entropy_examples() {
        let m = unit_square();
        let l = LumpedMass::new(&m);
        assert_eq!(relative_entropy(&l, &[2.0; 5], 2.0).unwrap(), 0.0);
        let n = [1.0, 2.0, 3.0, 4.0, 5.0];
        let a = relative_entropy(&l, &n, 3.0).unwrap();
        let b = relative_entropy(&l, &n, 1.5).unwrap();
        assert!((b - a - l.integral(&n) * 2f64.ln()).abs() < 1e-13);
        assert!(relative_entropy(&l, &[0.0; 5], 1.0).is_err());
    }

    #[test]
    fn domain_constants_examples() {
        let sq = domain_constants(&unit_square()).unwrap();
        assert!((sq.alpha - PI / 2.0).abs() < 1e-14);
        let tri = TriMesh::new(vec![[0.0, 0.0], [1.0, 0.0], [0.5, 3f64.sqrt() / 2.0]], vec![[0, 1, 2]]).unwrap();
        assert!((domain_constants(&tri).unwrap().alpha - PI / 3.0).abs() < 1e-14);
        // 64 boundary segments
        let disc = generate_disc_mesh([0.0, 0.0], 1.0, 2.0 * PI / 64.0 + 1e-12).unwrap();
        let d = domain_constants(&disc).unwrap();
        assert!((d.alpha - PI * (1.0 - 2.0 / 64.0)).abs() < 1e-12);
        assert!((d.four_chi - 4.0 * PI).abs() / (4.0 * PI) < 0.04);
    }

    #[test]
    fn non_convex_rejected() {
        let v = vec![[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [1.0, 0.5], [0.0, 2.0]];
        let m = TriMesh::new(v, vec![[0, 1, 3], [1, 2, 3], [0, 3, 4]]).unwrap();
        assert!(matches!(domain_constants(&m), Err(Error::NonConvexDomain { .. })));
    }

    #[test]
    fn threshold_classification() {
        let c = DomainConstants { alpha: PI, beta: 1.0, chi: PI, two_chi: 2.0 * PI, four_chi: 4.0 * PI };
        assert_eq!(threshold_report(5.0, &c).regime, MassRegime::SubcriticalExistence);
        assert_eq!(threshold_report(11.0, &c).regime, MassRegime::ConjecturedWindow);
        assert_eq!(threshold_report(14.1, &c).regime, MassRegime::Supercritical);
    }

    #[test]
    fn regime_rules() {
        let rising: Vec<_> = (0..10).map(|s| record(s, 10f64.powi(s as i32))).collect();
        assert_eq!(classify_regime(&rising, 1e6, 5, false), Regime::BlowUp);
        let flat: Vec<_> = (0..30).map(|s| record(s, 100.0)).collect();
        assert_eq!(classify_regime(&flat, 1e6, 20, false), Regime::Bounded);
        assert_eq!(classify_regime(&flat[..3], 1e6, 20, false), Regime::Undecided);
        let growing: Vec<_> = (0..30).map(|s| record(s, 100.0 + 10.0 * s as f64)).collect();
        assert_eq!(classify_regime(&growing, 1e6, 10, false), Regime::Undecided);
        assert_eq!(classify_regime(&growing, 1e6, 10, true), Regime::BlowUp);
    }

    #[test]
    fn invariant_flags_catch_faults() {
        let m = unit_square();
        let l = LumpedMass::new(&m);
        let n = vec![1.0; 5];
        let c = vec![0.5; 5];
        let k = 0.1;
        // constant steady state: c' solves (1+k) c' = c + k n
        let c1: Vec<f64> = c.iter().zip(&n).map(|(c, n)| (c + k * n) / (1.0 + k)).collect();
        assert!(verify_step_invariants(&l, (&n, &c), (&n, &c1), k).ok());
        let mut bad = n.clone();
        bad[2] = -0.1;
        assert!(verify_step_invariants(&l, (&n, &c), (&bad, &c1), k).has(InvariantFlags::NON_POSITIVE_N));
        let drift: Vec<f64> = n.iter().map(|v| v * (1.0 + 1e-4)).collect();
        assert!(verify_step_invariants(&l, (&n, &c), (&drift, &c1), k).has(InvariantFlags::MASS_N));
    }

    #[test]
    fn csv_row_round_trip() {
        let r = record(3, 123.25);
        assert_eq!(DiagnosticsRecord::from_csv_row(&r.to_csv_row()), Some(r));
        assert_eq!(CSV_HEADER.split(',').count(), 13);
    }
}
