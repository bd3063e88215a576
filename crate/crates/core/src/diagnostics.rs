//! Per-snapshot observables, the invariant checks built on them, the bathtub
//! minimization, the enhanced velocity bound audited link by link, and
//! run classification by C¹ growth.

use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::grid::DensityField;
use crate::initial::validate_hypotheses_default;
use crate::nonlocal::{compute_a, compute_delta, decompose_velocity, evenness_residue, OperatorParams};
use crate::quadrature;
use crate::solver::{Observer, RunOutput, SimulationState, Solver, StopReason};

/// Data-dependent constants of the velocity estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TheoremConstants {
    pub alpha: f64,
    /// Total mass, equal to the mean on the unit torus.
    pub m: f64,
    pub rho_max: f64,
    pub delta: f64,
    #[serde(rename = "A")]
    pub a: f64,
}

impl TheoremConstants {
    pub fn new(alpha: f64, m: f64, rho_max: f64) -> Result<Self> {
        Ok(Self {
            alpha,
            m,
            rho_max,
            delta: compute_delta(alpha),
            a: compute_a(alpha, m, rho_max)?,
        })
    }

    pub fn for_density(alpha: f64, rho0: &DensityField) -> Result<Self> {
        Self::new(alpha, rho0.mean(), rho0.max())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub rho_min: f64,
    pub rho_max: f64,
    /// Minimum of `∂xρ` over `[0, 1/2]`.
    pub zeta_min_half: f64,
    /// `max |∂xρ|`.
    pub c1_norm: f64,
    /// Maximum of `u` over `[0, δ]`.
    pub u_max_on_delta: f64,
    /// Maximum of `u(x) + A x` over `x in [0, δ]` with `ρ(x) <= m/2`;
    /// `-inf` when no node qualifies.
    pub enhanced_margin: f64,
    pub tail_fraction: f64,
    pub dt: f64,
}

impl DiagnosticsRecord {
    pub const COLUMNS: [&'static str; 10] = [
        "t",
        "mass",
        "rho_min",
        "rho_max",
        "zeta_min_half",
        "c1_norm",
        "u_max_on_delta",
        "enhanced_margin",
        "tail_fraction",
        "dt",
    ];

    pub fn values(&self) -> [f64; 10] {
        [
            self.t,
            self.mass,
            self.rho_min,
            self.rho_max,
            self.zeta_min_half,
            self.c1_norm,
            self.u_max_on_delta,
            self.enhanced_margin,
            self.tail_fraction,
            self.dt,
        ]
    }
}

/// Computes every record field for one state. `tail_fraction` is taken from
/// `solver` so it matches the resolution monitor.
pub fn observe(state: &SimulationState, constants: &TheoremConstants, solver: &Solver) -> DiagnosticsRecord {
    let rho = &state.rho;
    let grid = rho.grid();
    let n = grid.n_points();
    let zeta = rho.derivative();
    let z = zeta.values();
    let r = rho.values();
    let u = state.u.values();
    // Nodes j = n/2 .. n-1 cover [0, 1/2); node 0 is x = -1/2 = 1/2.
    let half: Vec<usize> = (n / 2..n).chain(std::iter::once(0)).collect();
    let zeta_min_half = half.iter().map(|&j| z[j]).fold(f64::INFINITY, f64::min);
    let mut u_max_on_delta = f64::NEG_INFINITY;
    let mut enhanced_margin = f64::NEG_INFINITY;
    for j in n / 2..n {
        let x = grid.node(j);
        if x > constants.delta {
            break;
        }
        u_max_on_delta = u_max_on_delta.max(u[j]);
        if r[j] <= 0.5 * constants.m {
            enhanced_margin = enhanced_margin.max(u[j] + constants.a * x);
        }
    }
    DiagnosticsRecord {
        t: state.t,
        mass: rho.mean(),
        rho_min: rho.min(),
        rho_max: rho.max(),
        zeta_min_half,
        c1_norm: zeta.max_abs(),
        u_max_on_delta,
        enhanced_margin,
        tail_fraction: solver.tail_fraction(rho.spectrum()),
        dt: state.dt_last,
    }
}

/// Observer accumulating records and the worst evenness residue.
pub struct DiagnosticsObserver<'a> {
    pub constants: TheoremConstants,
    solver: &'a Solver,
    pub records: Vec<DiagnosticsRecord>,
    pub max_symmetry_residue: f64,
}

impl<'a> DiagnosticsObserver<'a> {
    pub fn new(constants: TheoremConstants, solver: &'a Solver) -> Self {
        Self {
            constants,
            solver,
            records: Vec::new(),
            max_symmetry_residue: 0.0,
        }
    }
}

impl Observer for DiagnosticsObserver<'_> {
    fn observe(&mut self, state: &SimulationState) {
        self.records.push(observe(state, &self.constants, self.solver));
        self.max_symmetry_residue = self.max_symmetry_residue.max(evenness_residue(&state.rho));
    }
}

/// A finished run with its diagnostics.
#[derive(Clone, Debug)]
pub struct DiagnosedRun {
    pub output: RunOutput,
    pub constants: TheoremConstants,
    pub records: Vec<DiagnosticsRecord>,
    pub max_symmetry_residue: f64,
    /// Whether the initial data is even, nonnegative, vanishing at the
    /// origin and nondecreasing on `[0, 1/2]`.
    pub hypotheses_hold: bool,
}

/// Runs `solver` from `rho0`, recording diagnostics at every snapshot.
/// `extra` observers see the same states.
pub fn run_with_diagnostics(solver: &Solver, rho0: &DensityField, extra: &mut [&mut dyn Observer]) -> Result<DiagnosedRun> {
    let constants = TheoremConstants::for_density(solver.config().alpha, rho0)?;
    let report = validate_hypotheses_default(rho0);
    let mut diag = DiagnosticsObserver::new(constants, solver);
    let output = {
        let mut observers: Vec<&mut dyn Observer> = Vec::with_capacity(extra.len() + 1);
        observers.push(&mut diag);
        for o in extra.iter_mut() {
            observers.push(&mut **o);
        }
        solver.run(rho0, &mut observers)?
    };
    Ok(DiagnosedRun {
        output,
        constants,
        records: diag.records,
        max_symmetry_residue: diag.max_symmetry_residue,
        hypotheses_hold: report.h1 && report.h2 && report.h3,
    })
}

/// Pass/fail thresholds for [`check_invariants`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Tolerances {
    pub mass_drift: f64,
    /// Relative to the initial maximum.
    pub bounds: f64,
    /// Relative to `c1_norm`.
    pub monotonicity: f64,
    pub velocity_sign: f64,
    pub enhanced: f64,
    pub symmetry: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            mass_drift: 1e-11,
            bounds: 1e-8,
            monotonicity: 1e-6,
            velocity_sign: 1e-8,
            enhanced: 1e-6,
            symmetry: 1e-9,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvariantCheck {
    pub name: &'static str,
    /// Worst observed value of the checked quantity, in the units of `limit`.
    pub worst: f64,
    pub limit: f64,
    pub applicable: bool,
    pub passed: bool,
}

impl InvariantCheck {
    fn new(name: &'static str, worst: f64, limit: f64, applicable: bool) -> Self {
        Self {
            name,
            worst,
            limit,
            applicable,
            passed: !applicable || worst <= limit,
        }
    }
}

/// Names of the checks returned by [`check_invariants`], in order.
pub const INVARIANT_NAMES: [&str; 7] = [
    "mass_drift",
    "rho_lower_bound",
    "rho_upper_bound",
    "monotonicity",
    "velocity_sign",
    "enhanced_bound",
    "symmetry",
];

/// Evaluates the online invariants over every record of a run. Checks tied
/// to the monotone-vacuum hypotheses are marked not applicable otherwise.
pub fn check_invariants(run: &DiagnosedRun, tol: &Tolerances) -> Vec<InvariantCheck> {
    let recs = &run.records;
    let Some(first) = recs.first() else {
        return Vec::new();
    };
    let m0 = first.mass;
    let rho_max0 = first.rho_max;
    let fold = |f: &dyn Fn(&DiagnosticsRecord) -> f64| recs.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let h = run.hypotheses_hold;
    vec![
        InvariantCheck::new("mass_drift", fold(&|r| (r.mass - m0).abs()), tol.mass_drift, true),
        InvariantCheck::new("rho_lower_bound", fold(&|r| -r.rho_min / rho_max0), tol.bounds, true),
        InvariantCheck::new("rho_upper_bound", fold(&|r| r.rho_max / rho_max0 - 1.0), tol.bounds, true),
        InvariantCheck::new(
            "monotonicity",
            fold(&|r| if r.c1_norm > 0.0 { -r.zeta_min_half / r.c1_norm } else { 0.0 }),
            tol.monotonicity,
            h,
        ),
        InvariantCheck::new("velocity_sign", fold(&|r| r.u_max_on_delta), tol.velocity_sign, h),
        InvariantCheck::new("enhanced_bound", fold(&|r| r.enhanced_margin), tol.enhanced, h),
        InvariantCheck::new("symmetry", run.max_symmetry_residue, tol.symmetry, true),
    ]
}

fn check_bathtub(samples: &[f64], a: f64, b: f64, m: f64, lambda: f64) -> Result<()> {
    if samples.len() < 2 || !(b > a) {
        return Err(invalid("need at least two samples on a nonempty interval"));
    }
    if !(m > 0.0) || !(lambda > 0.0) {
        return Err(invalid(format!("M and lambda must be positive (M = {m}, lambda = {lambda})")));
    }
    if lambda >= m * (b - a) {
        return Err(invalid(format!(
            "lambda = {lambda} must be below M (b - a) = {}",
            m * (b - a)
        )));
    }
    let scale = samples.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
    if let Some(i) = samples.windows(2).position(|w| w[1] > w[0] + 1e-10 * scale) {
        return Err(Error::Precondition(format!("samples increase at index {i}")));
    }
    Ok(())
}

/// Piecewise-linear interpolant of samples spaced uniformly on `[a, b]`.
struct Linear<'s> {
    samples: &'s [f64],
    a: f64,
    h: f64,
}

impl<'s> Linear<'s> {
    fn new(samples: &'s [f64], a: f64, b: f64) -> Self {
        Self {
            samples,
            a,
            h: (b - a) / (samples.len() - 1) as f64,
        }
    }

    fn at(&self, x: f64) -> f64 {
        let s = ((x - self.a) / self.h).clamp(0.0, (self.samples.len() - 1) as f64);
        let i = (s.floor() as usize).min(self.samples.len() - 2);
        let w = s - i as f64;
        self.samples[i] * (1.0 - w) + self.samples[i + 1] * w
    }

    /// Exact integral of the interpolant over `[lo, hi]`.
    fn integral(&self, lo: f64, hi: f64) -> f64 {
        let s_lo = (lo - self.a) / self.h;
        let s_hi = (hi - self.a) / self.h;
        let mut acc = 0.0;
        let mut s = s_lo;
        while s < s_hi {
            let next = (s.floor() + 1.0).min(s_hi);
            let x0 = self.a + s * self.h;
            let x1 = self.a + next * self.h;
            acc += 0.5 * (self.at(x0) + self.at(x1)) * (x1 - x0);
            s = next;
        }
        acc
    }
}

/// Minimum of `int_a^b ω f` over `0 <= ω <= M`, `int ω >= λ`, for a
/// nonincreasing positive `f` given by uniform samples on `[a, b]`: the
/// right-aligned plateau value `M int_{b-λ/M}^b f`.
pub fn bathtub_min(samples: &[f64], a: f64, b: f64, m: f64, lambda: f64) -> Result<f64> {
    check_bathtub(samples, a, b, m, lambda)?;
    Ok(m * Linear::new(samples, a, b).integral(b - lambda / m, b))
}

/// Discrete version of the same problem on `n_cells` equal cells with `f`
/// taken at cell midpoints, solved by filling the cells with the smallest
/// `f` first. This greedy choice is optimal for the discrete problem and
/// does not assume `f` is monotone.
pub fn bathtub_brute(samples: &[f64], a: f64, b: f64, m: f64, lambda: f64, n_cells: usize) -> Result<f64> {
    check_bathtub(samples, a, b, m, lambda)?;
    if n_cells == 0 {
        return Err(invalid("need at least one cell"));
    }
    let lin = Linear::new(samples, a, b);
    let dx = (b - a) / n_cells as f64;
    let mut cells: Vec<f64> = (0..n_cells).map(|i| lin.at(a + (i as f64 + 0.5) * dx)).collect();
    cells.sort_by(f64::total_cmp);
    let mut remaining = lambda;
    let mut value = 0.0;
    for f in cells {
        if remaining <= 0.0 {
            break;
        }
        let w = (remaining / dx).min(m);
        value += w * f * dx;
        remaining -= w * dx;
    }
    Ok(value)
}

/// `h(x, y) = (y-x)^{-α} - (y+x)^{-α}`, the weight of the aligned part on
/// `(x, 1/2]`.
pub fn aligned_weight(alpha: f64, x: f64, y: f64) -> f64 {
    (y - x).powf(-alpha) - (y + x).powf(-alpha)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LinkCheck {
    pub name: &'static str,
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnhancedBoundReport {
    /// False when `x > δ` or `ρ(x) > m/2`; no links are checked then.
    pub applicable: bool,
    pub x: f64,
    pub rho_x: f64,
    pub links: Vec<LinkCheck>,
    /// The unnormalized integral `int_x^{1/2} (ρ(y)-ρ(x)) h(x,y) dy`.
    pub iii: f64,
    pub all_passed: bool,
}

/// Audits the chain of inequalities behind `u(x) <= -A x` at one point: the
/// shape of `h(x, ·)`, the pointwise and integral bounds on `ρ(y) - ρ(x)`,
/// the bathtub lower bound, the final linear bound, and its transfer to the
/// aligned part of the velocity.
pub fn verify_enhanced_bound_derivation(
    rho: &DensityField,
    params: &OperatorParams,
    x: f64,
    m: f64,
    rho_max: f64,
) -> Result<EnhancedBoundReport> {
    let alpha = params.alpha;
    let it = rho.interpolant();
    let rho_x = it.value(x);
    let delta = compute_delta(alpha);
    if !(0.0..=delta).contains(&x) || rho_x > 0.5 * m {
        return Ok(EnhancedBoundReport {
            applicable: false,
            x,
            rho_x,
            links: Vec::new(),
            iii: f64::NAN,
            all_passed: true,
        });
    }
    let tol = 1e-8 * rho_max.max(1.0);
    let mut links = Vec::new();
    let mut link = |name, value: f64, bound: f64, ok: bool| {
        links.push(LinkCheck {
            name,
            value,
            bound,
            passed: ok,
        })
    };

    // Shape of h on a grid of (x, 1/2], away from the singular end.
    let samples = 2000;
    let eta = 1e-6;
    let ys: Vec<f64> = (0..=samples)
        .map(|i| x + eta + (0.5 - x - eta) * i as f64 / samples as f64)
        .collect();
    let hs: Vec<f64> = ys.iter().map(|&y| aligned_weight(alpha, x, y)).collect();
    let h_min = hs.iter().copied().fold(f64::INFINITY, f64::min);
    let h_rise = hs.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    link("h_positive", h_min, 0.0, x == 0.0 || h_min > 0.0);
    link("h_decreasing", h_rise, 0.0, h_rise <= 0.0);

    let diffs: Vec<f64> = ys.iter().map(|&y| it.value(y) - rho_x).collect();
    let d_min = diffs.iter().copied().fold(f64::INFINITY, f64::min);
    let d_max = diffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    link("excess_nonnegative", d_min, -tol, d_min >= -tol);
    link("excess_below_gap", d_max, rho_max - rho_x + tol, d_max <= rho_max - rho_x + tol);

    let excess = (it.integral_from_zero(0.5) - it.integral_from_zero(x)) - (0.5 - x) * rho_x;
    link("excess_mass", excess, 0.25 * m - tol, excess >= 0.25 * m - tol);

    // III by graded quadrature from the singular end y = x.
    let panels = 64;
    let len = 0.5 - x;
    let iii = if x == 0.0 {
        0.0
    } else {
        let g = |s: f64| (it.value(x + s) - rho_x) * aligned_weight(alpha, x, x + s);
        let r1 = it.derivatives::<2>(x)[1];
        let head = quadrature::graded(len / panels as f64, 1e-12, g, |e| r1 * e.powf(2.0 - alpha) / (2.0 - alpha));
        head + quadrature::composite(len / panels as f64, len, panels - 1, |s| {
            (it.value(x + s) - rho_x) * aligned_weight(alpha, x, x + s)
        })
    };
    let a_const = compute_a(alpha, m, rho_max)?;
    let gap = rho_max - rho_x;
    let lambda = 0.25 * m;
    let bathtub = if x > 0.0 && lambda < gap * (0.5 - x - eta) {
        bathtub_min(&hs, x + eta, 0.5, gap, lambda)?
    } else {
        0.0
    };
    link("iii_above_bathtub", iii, bathtub - tol, iii >= bathtub - tol);
    link("iii_linear_bound", iii, a_const * x - tol, iii >= a_const * x - tol);

    let dec = decompose_velocity(rho, params, x)?;
    let aligned = dec.aligned / params.c_velocity;
    link("aligned_below_minus_iii", aligned, -iii + tol, aligned <= -iii + tol);

    let all_passed = links.iter().all(|l| l.passed);
    Ok(EnhancedBoundReport {
        applicable: true,
        x,
        rho_x,
        links,
        iii,
        all_passed,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExponentFit {
    #[serde(rename = "C")]
    pub c: f64,
    pub gamma: f64,
    pub r2: f64,
}

/// Least-squares fit of `log(-u) = log C + γ log x` over samples with `x` in
/// `[x_lo, x_hi]`. Returns `None` when `u >= 0` somewhere in the range.
pub fn fit_exponent(points: &[(f64, f64)], x_lo: f64, x_hi: f64) -> Result<Option<ExponentFit>> {
    if !(x_lo > 0.0 && x_hi > x_lo) {
        return Err(invalid(format!("fit range must satisfy 0 < x_lo < x_hi, got [{x_lo}, {x_hi}]")));
    }
    let sel: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, _)| (x_lo..=x_hi).contains(x))
        .copied()
        .collect();
    if sel.len() < 3 {
        return Err(invalid("need at least three points in the fit range"));
    }
    if sel.iter().any(|&(_, u)| u >= 0.0) {
        return Ok(None);
    }
    let pts: Vec<(f64, f64)> = sel.iter().map(|&(x, u)| (x.ln(), (-u).ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let gamma = sxy / sxx;
    let intercept = my - gamma * mx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(Some(ExponentFit {
        c: intercept.exp(),
        gamma,
        r2,
    }))
}

/// Fits `u <= -C x^γ` to the velocity of `rho` sampled on grid nodes in
/// `[x_lo, x_hi]`. Exploratory only.
pub fn fit_velocity_exponent(rho: &DensityField, params: &OperatorParams, x_lo: f64, x_hi: f64) -> Result<Option<ExponentFit>> {
    if x_hi > compute_delta(params.alpha) + 1e-15 {
        return Err(invalid("fit range must lie inside (0, delta]"));
    }
    let u = crate::nonlocal::velocity_spectral(rho, params.alpha)?;
    let ui = u.interpolant();
    let samples = 64;
    let pts: Vec<(f64, f64)> = (0..samples)
        .map(|i| {
            let x = x_lo * (x_hi / x_lo).powf(i as f64 / (samples - 1) as f64);
            (x, ui.value(x))
        })
        .collect();
    fit_exponent(&pts, x_lo, x_hi)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    C1Growth,
    C1Bounded,
    Inconclusive,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::C1Growth => "c1_growth",
            Self::C1Bounded => "c1_bounded",
            Self::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Classification {
    pub verdict: Verdict,
    /// Largest `c1_norm` over the initial one.
    pub growth_factor: f64,
}

pub const GROWTH_FACTOR: f64 = 5.0;
pub const BOUNDED_FACTOR: f64 = 2.0;
/// Allowed relative dip below the running maximum in a growth run.
pub const GROWTH_DIP: f64 = 0.05;

/// Separates C¹ growth from boundedness. Growth needs `c1_norm` to reach
/// [`GROWTH_FACTOR`] times its initial value, rising after any initial decrease
/// without dipping more than [`GROWTH_DIP`] below its running
/// maximum. Boundedness needs every record at most [`BOUNDED_FACTOR`] times the
/// initial value and the run to have reached `t_end`.
pub fn classify_run(records: &[DiagnosticsRecord], stop: StopReason) -> Result<Classification> {
    if records.len() < 10 {
        return Err(invalid(format!("need at least 10 records, got {}", records.len())));
    }
    let c0 = records[0].c1_norm;
    let (peak_at, peak) = records
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |acc, (i, r)| if r.c1_norm > acc.1 { (i, r.c1_norm) } else { acc });
    // Gradients of constant data are roundoff.
    let floor = 1e-12;
    let growth_factor = if peak <= floor {
        1.0
    } else if c0 > 0.0 {
        peak / c0
    } else {
        f64::INFINITY
    };
    // Smooth data may flatten briefly before steepening; the growth phase
    // starts where the initial decrease ends.
    let start = records
        .windows(2)
        .position(|w| w[1].c1_norm > w[0].c1_norm)
        .unwrap_or(0)
        .min(peak_at);
    let mut running = 0.0f64;
    let monotone = records[start..=peak_at].iter().all(|r| {
        running = running.max(r.c1_norm);
        r.c1_norm >= (1.0 - GROWTH_DIP) * running
    });
    let verdict = if monotone && growth_factor >= GROWTH_FACTOR {
        Verdict::C1Growth
    } else if stop == StopReason::TEnd && records.iter().all(|r| r.c1_norm <= BOUNDED_FACTOR * c0 + floor) {
        Verdict::C1Bounded
    } else {
        Verdict::Inconclusive
    };
    Ok(Classification { verdict, growth_factor })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;
    use crate::initial::gen_cccf;
    use crate::solver::SolverConfig;
    use std::f64::consts::PI;

    fn record(t: f64, c1: f64) -> DiagnosticsRecord {
        DiagnosticsRecord {
            t,
            mass: 1.0,
            rho_min: 0.0,
            rho_max: 2.0,
            zeta_min_half: 0.0,
            c1_norm: c1,
            u_max_on_delta: 0.0,
            enhanced_margin: f64::NEG_INFINITY,
            tail_fraction: 0.0,
            dt: 0.0,
        }
    }

    #[test]
    fn observe_constant_state() {
        let solver = Solver::new(SolverConfig::new(1.0, 64, 1.0)).unwrap();
        let c = DensityField::constant(solver.grid(), 0.7).unwrap();
        let s = solver.initial_state(&c).unwrap();
        let k = TheoremConstants::for_density(1.0, &c).unwrap();
        let r = observe(&s, &k, &solver);
        assert_eq!(r.rho_min, 0.7);
        assert_eq!(r.rho_max, 0.7);
        assert!(r.c1_norm < 1e-14);
        assert!(r.u_max_on_delta.abs() < 1e-15);
        assert_eq!(r.enhanced_margin, f64::NEG_INFINITY);
    }

    #[test]
    fn observe_cccf_at_start() {
        let solver = Solver::new(SolverConfig::new(1.0, 256, 1.0)).unwrap();
        let rho = gen_cccf(solver.grid());
        let s = solver.initial_state(&rho).unwrap();
        let k = TheoremConstants::for_density(1.0, &rho).unwrap();
        assert!((k.a - 0.125).abs() < 1e-14);
        let r = observe(&s, &k, &solver);
        assert!(r.u_max_on_delta.abs() < 1e-12);
        assert!(r.enhanced_margin <= 1e-12);
        assert!((r.c1_norm - 2.0 * PI).abs() < 1e-10);
    }

    #[test]
    fn bathtub_examples() {
        assert!((bathtub_min(&[1.0, 1.0], 0.0, 1.0, 1.0, 0.5).unwrap() - 0.5).abs() < 1e-15);
        let f: Vec<f64> = (0..=10).map(|i| 1.0 - i as f64 / 10.0).collect();
        assert!((bathtub_min(&f, 0.0, 1.0, 2.0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        let brute = bathtub_brute(&f, 0.0, 1.0, 2.0, 1.0, 100_000).unwrap();
        assert!((brute - 0.25).abs() < 1e-6);
        assert!(bathtub_min(&f, 0.0, 1.0, 1.0, 1.0).is_err());
        assert!(bathtub_min(&[0.0, 1.0], 0.0, 1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn bathtub_full_occupancy_limit() {
        let f: Vec<f64> = (0..=50).map(|i| (-(i as f64) / 25.0).exp()).collect();
        let full: f64 = bathtub_min(&f, 0.0, 1.0, 1.0, 1.0 - 1e-9).unwrap();
        let total = Linear::new(&f, 0.0, 1.0).integral(0.0, 1.0);
        assert!((full - total).abs() < 1e-8);
    }

    #[test]
    fn classify_examples() {
        let grow: Vec<_> = (0..20).map(|i| record(i as f64, 1.0 + i as f64)).collect();
        let c = classify_run(&grow, StopReason::UnderResolved).unwrap();
        assert_eq!(c.verdict, Verdict::C1Growth);
        assert_eq!(c.growth_factor, 20.0);
        let flat: Vec<_> = (0..20).map(|i| record(i as f64, 0.0)).collect();
        let c = classify_run(&flat, StopReason::TEnd).unwrap();
        assert_eq!(c.verdict, Verdict::C1Bounded);
        assert_eq!(c.growth_factor, 1.0);
        let mut dip = grow.clone();
        dip[10].c1_norm = 1.0;
        assert_eq!(classify_run(&dip, StopReason::UnderResolved).unwrap().verdict, Verdict::Inconclusive);
        // an initial flattening before steepening is still growth
        let mut late: Vec<_> = (0..20).map(|i| record(i as f64, 1.0 + i as f64)).collect();
        late[0].c1_norm = 2.0;
        late[1].c1_norm = 1.5;
        late[2].c1_norm = 1.2;
        let c = classify_run(&late, StopReason::UnderResolved).unwrap();
        assert_eq!(c.verdict, Verdict::C1Growth);
        assert_eq!(c.growth_factor, 10.0);
        // a drop after the peak is not part of the growth phase but blocks boundedness
        let mut fall = grow.clone();
        fall[19].c1_norm = 3.0;
        assert_eq!(classify_run(&fall, StopReason::TEnd).unwrap().verdict, Verdict::C1Growth);
        assert!(classify_run(&grow[..5], StopReason::TEnd).is_err());
    }

    #[test]
    fn exponent_fit_recovers_powers() {
        let pts: Vec<(f64, f64)> = (1..50).map(|i| {
            let x = i as f64 * 1e-3;
            (x, -3.0 * x.sqrt())
        }).collect();
        let f = fit_exponent(&pts, 1e-3, 0.05).unwrap().unwrap();
        assert!((f.gamma - 0.5).abs() < 1e-12);
        assert!((f.c - 3.0).abs() < 1e-10);
        let pos: Vec<(f64, f64)> = pts.iter().map(|&(x, u)| (x, -u)).collect();
        assert!(fit_exponent(&pos, 1e-3, 0.05).unwrap().is_none());
    }

    #[test]
    fn exponent_of_sine_velocity() {
        let g = PeriodicGrid::new(128).unwrap();
        let rho = gen_cccf(&g);
        let p = OperatorParams::new(1.0).unwrap();
        let f = fit_velocity_exponent(&rho, &p, 1e-3, 0.02).unwrap().unwrap();
        assert!((f.gamma - 1.0).abs() < 0.05);
    }
}
