//! Initial densities: even, nonnegative, nondecreasing on `[0, 1/2]` and
//! vanishing at the origin, plus a strictly positive contrast family.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::grid::{DensityField, PeriodicGrid};
use crate::quadrature::gl16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialKind {
    /// `1 - cos(2πx)`.
    Cccf,
    /// Vacuum on `[-x0, x0]`, a C^∞ ramp of the given width, then a plateau.
    VacuumPlateau,
    /// `ρ_max sin⁴(πx)`.
    SmoothMonotone,
    /// `offset - cos(2πx)`, bounded away from zero.
    PositiveControl,
}

impl InitialKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Cccf => "cccf",
            Self::VacuumPlateau => "vacuum_plateau",
            Self::SmoothMonotone => "smooth_monotone",
            Self::PositiveControl => "positive_control",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialDataSpec {
    pub kind: InitialKind,
    #[serde(default = "default_rho_max")]
    pub rho_max: f64,
    #[serde(default = "default_x0")]
    pub x0: f64,
    #[serde(default = "default_width")]
    pub transition_width: f64,
    #[serde(default = "default_offset")]
    pub offset: f64,
}

fn default_rho_max() -> f64 {
    2.0
}
fn default_x0() -> f64 {
    0.15
}
fn default_width() -> f64 {
    0.1
}
fn default_offset() -> f64 {
    1.5
}

impl InitialDataSpec {
    pub fn new(kind: InitialKind) -> Self {
        Self {
            kind,
            rho_max: default_rho_max(),
            x0: default_x0(),
            transition_width: default_width(),
            offset: default_offset(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rho_max > 0.0) {
            return Err(invalid(format!("rho_max must be positive, got {}", self.rho_max)));
        }
        match self.kind {
            InitialKind::VacuumPlateau => check_plateau(self.x0, self.transition_width),
            InitialKind::PositiveControl => check_offset(self.offset),
            _ => Ok(()),
        }
    }

    /// Largest value the generated field may take.
    pub fn upper_bound(&self) -> f64 {
        match self.kind {
            InitialKind::Cccf => 2.0,
            InitialKind::PositiveControl => self.offset + 1.0,
            _ => self.rho_max,
        }
    }

    pub fn generate(&self, grid: &PeriodicGrid) -> Result<DensityField> {
        self.validate()?;
        match self.kind {
            InitialKind::Cccf => Ok(gen_cccf(grid)),
            InitialKind::VacuumPlateau => gen_vacuum_plateau(grid, self.x0, self.transition_width, self.rho_max),
            InitialKind::SmoothMonotone => gen_smooth_monotone(grid, self.rho_max),
            InitialKind::PositiveControl => gen_positive_control(grid, self.offset),
        }
    }
}

fn check_plateau(x0: f64, width: f64) -> Result<()> {
    if !(x0 > 0.0) || !(width > 0.0) || x0 + width > 0.5 {
        return Err(invalid(format!(
            "vacuum half-width {x0} and transition width {width} must be positive with x0 + width <= 1/2"
        )));
    }
    Ok(())
}

fn check_offset(offset: f64) -> Result<()> {
    if !(offset > 1.0) {
        return Err(invalid(format!("offset must exceed 1, got {offset}")));
    }
    Ok(())
}

pub fn gen_cccf(grid: &PeriodicGrid) -> DensityField {
    grid.sample(|x| 1.0 - (2.0 * PI * x).cos())
        .expect("closed-form samples are finite")
}

pub fn gen_positive_control(grid: &PeriodicGrid, offset: f64) -> Result<DensityField> {
    check_offset(offset)?;
    grid.sample(|x| offset - (2.0 * PI * x).cos())
}

pub fn gen_smooth_monotone(grid: &PeriodicGrid, rho_max: f64) -> Result<DensityField> {
    if !(rho_max > 0.0) {
        return Err(invalid(format!("rho_max must be positive, got {rho_max}")));
    }
    grid.sample(|x| rho_max * (PI * x).sin().powi(4))
}

fn bump(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        (-1.0 / (t * (1.0 - t))).exp()
    }
}

fn bump_integral(s: f64) -> f64 {
    const PANELS: usize = 16;
    let rule = gl16();
    let h = s / PANELS as f64;
    (0..PANELS)
        .map(|p| rule.integrate(p as f64 * h, (p + 1) as f64 * h, bump))
        .sum()
}

/// C^∞ step: 0 for `s <= 0`, 1 for `s >= 1`, the normalized primitive of
/// `exp(-1/(t(1-t)))` in between.
pub fn smooth_step(s: f64) -> f64 {
    static TOTAL: OnceLock<f64> = OnceLock::new();
    if s <= 0.0 {
        return 0.0;
    }
    if s >= 1.0 {
        return 1.0;
    }
    let total = *TOTAL.get_or_init(|| bump_integral(1.0));
    // Integrate from the nearer end so both flat ends are reproduced exactly.
    if s <= 0.5 {
        bump_integral(s) / total
    } else {
        1.0 - bump_integral(1.0 - s) / total
    }
}

pub fn gen_vacuum_plateau(grid: &PeriodicGrid, x0: f64, width: f64, rho_max: f64) -> Result<DensityField> {
    check_plateau(x0, width)?;
    if !(rho_max > 0.0) {
        return Err(invalid(format!("rho_max must be positive, got {rho_max}")));
    }
    grid.sample(|x| rho_max * smooth_step((x.abs() - x0) / width))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HypothesisReport {
    /// Even symmetry.
    pub h1: bool,
    /// Nonnegativity (the upper bound is the observed maximum).
    pub h2: bool,
    /// Vanishing at the origin and nondecreasing on `[0, 1/2]`.
    pub h3: bool,
    pub m: f64,
    pub rho_max_observed: f64,
    /// Last node `x >= 0` before the density first exceeds `tol`.
    pub x0: f64,
}

/// Checks the structural hypotheses to absolute tolerance `tol`; the slope
/// check is relative to `max(1, max|∂xρ|)`.
pub fn validate_hypotheses(rho0: &DensityField, tol: f64) -> HypothesisReport {
    let grid = rho0.grid();
    let v = rho0.values();
    let n = grid.n_points();
    let half = n / 2;
    let scale = rho0.max_abs().max(1.0);
    let h1 = (0..n).all(|j| (v[j] - v[grid.mirror(j)]).abs() <= tol * scale);
    let h2 = rho0.min() >= -tol;
    let zeta = rho0.derivative();
    let z = zeta.values();
    let slope_tol = tol * zeta.max_abs().max(1.0);
    let h3 = v[half].abs() <= tol && z[half..].iter().all(|&d| d >= -slope_tol);
    let first = (half..n).find(|&j| v[j] > tol);
    let x0 = match first {
        Some(j) if j > half => grid.node(j - 1),
        Some(_) => 0.0,
        None => 0.5,
    };
    HypothesisReport {
        h1,
        h2,
        h3,
        m: rho0.mean(),
        rho_max_observed: rho0.max(),
        x0,
    }
}

/// [`validate_hypotheses`] with the tolerance `1e-10 ρ_max`.
pub fn validate_hypotheses_default(rho0: &DensityField) -> HypothesisReport {
    validate_hypotheses(rho0, 1e-10 * rho0.max().max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> PeriodicGrid {
        PeriodicGrid::new(n).unwrap()
    }

    #[test]
    fn cccf_values_and_mass() {
        let g = grid(64);
        let r = gen_cccf(&g);
        assert_eq!(r.values()[32], 0.0);
        assert_eq!(r.values()[0], 2.0);
        assert!((r.mean() - 1.0).abs() < 1e-12);
        let rep = validate_hypotheses(&r, 1e-10);
        assert!(rep.h1 && rep.h2 && rep.h3);
        assert_eq!(rep.x0, 0.0);
    }

    #[test]
    fn smooth_step_is_monotone_and_flat() {
        assert_eq!(smooth_step(-0.1), 0.0);
        assert_eq!(smooth_step(1.2), 1.0);
        assert!((smooth_step(0.5) - 0.5).abs() < 1e-15);
        let mut prev = 0.0;
        for i in 1..1000 {
            let s = smooth_step(i as f64 / 1000.0);
            assert!(s >= prev);
            prev = s;
        }
        // symmetric about 1/2
        assert!((smooth_step(0.3) + smooth_step(0.7) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn vacuum_plateau_shape() {
        let g = grid(1024);
        let r = gen_vacuum_plateau(&g, 0.15, 0.1, 2.0).unwrap();
        assert!(r.interpolate(0.0).abs() < 1e-9);
        assert_eq!(r.values()[512], 0.0);
        assert_eq!(r.values()[0], 2.0);
        let rep = validate_hypotheses(&r, 1e-10);
        assert!(rep.h1 && rep.h2 && rep.h3);
        let rep0 = validate_hypotheses(&r, 0.0);
        assert!((rep0.x0 - 0.15).abs() <= g.dx());
    }

    #[test]
    fn plateau_rejects_overlap() {
        let g = grid(64);
        assert!(gen_vacuum_plateau(&g, 0.45, 0.1, 1.0).is_err());
        assert!(gen_vacuum_plateau(&g, 0.0, 0.1, 1.0).is_err());
        assert!(gen_vacuum_plateau(&g, 0.1, 0.1, -1.0).is_err());
    }

    #[test]
    fn positive_control_properties() {
        let g = grid(128);
        let r = gen_positive_control(&g, 1.1).unwrap();
        assert!((r.min() - 0.1).abs() < 1e-14);
        assert!((r.mean() - 1.1).abs() < 1e-14);
        let rep = validate_hypotheses(&r, 1e-10);
        assert!(rep.h1 && rep.h2 && !rep.h3);
        assert!(gen_positive_control(&g, 1.0).is_err());
    }

    #[test]
    fn shifted_field_is_not_even() {
        let g = grid(64);
        let r = g.sample(|x| 1.0 - (2.0 * PI * (x - 0.05)).cos()).unwrap();
        assert!(!validate_hypotheses(&r, 1e-10).h1);
    }

    #[test]
    fn smooth_monotone_passes() {
        let g = grid(64);
        let r = gen_smooth_monotone(&g, 3.0).unwrap();
        let rep = validate_hypotheses(&r, 1e-10);
        assert!(rep.h1 && rep.h2 && rep.h3);
        assert!((rep.m - 3.0 * 3.0 / 8.0).abs() < 1e-12);
    }

    #[test]
    fn spec_round_trips_through_toml() {
        let s = InitialDataSpec::new(InitialKind::VacuumPlateau);
        let text = toml::to_string(&s).unwrap();
        let back: InitialDataSpec = toml::from_str(&text).unwrap();
        assert_eq!(s, back);
    }
}
