//! Particle paths `dX/dt = u(X, t)` reconstructed from stored snapshots, the
//! cumulative mass `m(x, t) = ∫_0^x ρ`, and the decay bound along paths that
//! start inside the smallness radius.

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::grid::{DensityField, Interpolant};
use crate::solver::SimulationState;

/// Relative slack on `ε e^{-At}`.
pub const DECAY_TOL: f64 = 1e-3;
/// Linear-in-time interpolation defect, relative to `max|u|`, above which a
/// path is flagged as starved of snapshots.
pub const STARVED_DEFECT: f64 = 1e-3;

#[derive(Clone, Debug, Serialize)]
pub struct CharacteristicPath {
    pub x_start: f64,
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    /// `m(x_start, 0)`.
    pub mass0: f64,
    /// Largest change in position when the RK4 step is halved.
    pub path_error: f64,
    pub starved: bool,
}

pub fn mass_profile(rho: &DensityField, x: f64) -> f64 {
    rho.interpolant().integral_from_zero(x)
}

fn wrap(x: f64) -> f64 {
    x - (x + 0.5).floor()
}

/// Interpolant of `u` at every snapshot and the worst defect of linear
/// interpolation in time, estimated from second differences.
struct VelocityHistory {
    times: Vec<f64>,
    fields: Vec<Interpolant>,
    max_speed: Vec<f64>,
    defect: f64,
}

impl VelocityHistory {
    fn new(states: &[SimulationState]) -> Result<Self> {
        if states.len() < 2 {
            return Err(invalid(format!("need at least two snapshots, got {}", states.len())));
        }
        if states.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(invalid("snapshot times must increase"));
        }
        let mut defect = 0.0f64;
        for w in states.windows(3) {
            let (t0, t1, t2) = (w[0].t, w[1].t, w[2].t);
            let theta = (t1 - t0) / (t2 - t0);
            let (a, b, c) = (w[0].u.values(), w[1].u.values(), w[2].u.values());
            let scale = w[1].u.max_abs().max(1e-300);
            let d = a
                .iter()
                .zip(b)
                .zip(c)
                .map(|((a, b), c)| (b - ((1.0 - theta) * a + theta * c)).abs())
                .fold(0.0, f64::max);
            // Interpolating over two intervals overestimates the one-interval
            // defect by roughly four.
            defect = defect.max(0.25 * d / scale);
        }
        Ok(Self {
            times: states.iter().map(|s| s.t).collect(),
            fields: states.iter().map(|s| s.u.interpolant()).collect(),
            max_speed: states.iter().map(|s| s.u.max_abs()).collect(),
            defect,
        })
    }

    /// `u(x, t)` for `t` in interval `i`.
    fn velocity(&self, i: usize, t: f64, x: f64) -> f64 {
        let (t0, t1) = (self.times[i], self.times[i + 1]);
        let theta = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        (1.0 - theta) * self.fields[i].value(x) + theta * self.fields[i + 1].value(x)
    }

    fn integrate(&self, x_start: f64, dx: f64, refine: usize) -> Vec<f64> {
        let mut x = x_start;
        let mut out = Vec::with_capacity(self.times.len());
        out.push(x);
        for i in 0..self.times.len() - 1 {
            let (t0, t1) = (self.times[i], self.times[i + 1]);
            let speed = self.max_speed[i].max(self.max_speed[i + 1]);
            let travel = speed * (t1 - t0);
            let base = ((2.0 * travel / dx).ceil() as usize).max(4);
            let steps = base * refine;
            let h = (t1 - t0) / steps as f64;
            for s in 0..steps {
                let t = t0 + s as f64 * h;
                let k1 = self.velocity(i, t, x);
                let k2 = self.velocity(i, t + 0.5 * h, x + 0.5 * h * k1);
                let k3 = self.velocity(i, t + 0.5 * h, x + 0.5 * h * k2);
                let k4 = self.velocity(i, t + h, x + h * k3);
                x = wrap(x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
            }
            out.push(x);
        }
        out
    }
}

fn path_from(history: &VelocityHistory, states: &[SimulationState], x_start: f64) -> CharacteristicPath {
    let dx = states[0].rho.grid().dx();
    let positions = history.integrate(x_start, dx, 1);
    let fine = history.integrate(x_start, dx, 2);
    let path_error = positions
        .iter()
        .zip(&fine)
        .map(|(a, b)| wrap(a - b).abs())
        .fold(0.0, f64::max);
    CharacteristicPath {
        x_start,
        times: history.times.clone(),
        positions,
        mass0: mass_profile(&states[0].rho, x_start),
        path_error,
        starved: history.defect > STARVED_DEFECT,
    }
}

/// Integrates the path through `x_start` with classical RK4, trigonometric
/// interpolation in space and linear interpolation between snapshots.
pub fn advect_path(states: &[SimulationState], x_start: f64) -> Result<CharacteristicPath> {
    let history = VelocityHistory::new(states)?;
    Ok(path_from(&history, states, wrap(x_start)))
}

/// [`advect_path`] for several starting points, sharing the interpolants.
pub fn advect_paths(states: &[SimulationState], starts: &[f64]) -> Result<Vec<CharacteristicPath>> {
    let history = VelocityHistory::new(states)?;
    Ok(starts.iter().map(|&x| path_from(&history, states, wrap(x))).collect())
}

fn check_aligned(path: &CharacteristicPath, states: &[SimulationState]) -> Result<()> {
    if path.times.len() != states.len() || path.times.iter().zip(states).any(|(t, s)| *t != s.t) {
        return Err(invalid("path and snapshots do not share time stamps"));
    }
    Ok(())
}

/// Largest change over the snapshots of the mass between two paths.
pub fn check_mass_transport(
    path1: &CharacteristicPath,
    path2: &CharacteristicPath,
    states: &[SimulationState],
) -> Result<f64> {
    check_aligned(path1, states)?;
    check_aligned(path2, states)?;
    let mut initial = None;
    let mut drift = 0.0f64;
    for (i, s) in states.iter().enumerate() {
        let f = s.rho.interpolant();
        let mass = f.integral_from_zero(path2.positions[i]) - f.integral_from_zero(path1.positions[i]);
        let m0 = *initial.get_or_insert(mass);
        drift = drift.max((mass - m0).abs());
    }
    Ok(drift)
}

/// Smallest gap between consecutive paths, ordered by starting point, over
/// all snapshots. Negative means two paths crossed.
pub fn min_path_gap(paths: &[CharacteristicPath]) -> f64 {
    let mut sorted: Vec<&CharacteristicPath> = paths.iter().collect();
    sorted.sort_by(|a, b| a.x_start.total_cmp(&b.x_start));
    let mut gap = f64::INFINITY;
    for w in sorted.windows(2) {
        for (a, b) in w[0].positions.iter().zip(&w[1].positions) {
            gap = gap.min(b - a);
        }
    }
    gap
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecayReport {
    /// False when `ρ(X(t), t) > m/2` already at the start.
    pub applicable: bool,
    pub holds: bool,
    /// `min_t (ε e^{-At} - X(t))` over the checked prefix.
    pub margin: f64,
    /// Last time at which the smallness hypothesis held along the path.
    pub checked_until: f64,
    pub samples: usize,
}

/// Checks `X(t) <= ε e^{-At} (1 + DECAY_TOL)` over the longest prefix of the
/// path on which `ρ(X(t), t) <= m/2`, with `m` the mean of the first snapshot.
pub fn check_decay_bound(path: &CharacteristicPath, a: f64, states: &[SimulationState]) -> Result<DecayReport> {
    check_aligned(path, states)?;
    if !(a >= 0.0) {
        return Err(invalid(format!("decay rate must be nonnegative, got {a}")));
    }
    let half_mass = 0.5 * states[0].rho.mean();
    let eps = path.x_start;
    let mut margin = f64::INFINITY;
    let mut holds = true;
    let mut samples = 0;
    let mut checked_until = f64::NAN;
    for (i, s) in states.iter().enumerate() {
        let x = path.positions[i];
        if s.rho.interpolate(x) > half_mass {
            break;
        }
        let bound = eps * (-a * s.t).exp();
        margin = margin.min(bound - x);
        holds &= x <= bound * (1.0 + DECAY_TOL);
        samples += 1;
        checked_until = s.t;
    }
    Ok(DecayReport {
        applicable: samples > 0,
        holds: samples > 0 && holds,
        margin,
        checked_until,
        samples,
    })
}

/// Worst value of `m(X(t), t) - X(t) ρ(X(t), t)`, nonpositive while the density
/// is nondecreasing on `[0, X(t)]`.
pub fn check_local_mass_bound(path: &CharacteristicPath, states: &[SimulationState]) -> Result<f64> {
    check_aligned(path, states)?;
    Ok(states
        .iter()
        .zip(&path.positions)
        .map(|(s, &x)| {
            let f = s.rho.interpolant();
            f.integral_from_zero(x) - x * f.value(x)
        })
        .fold(f64::NEG_INFINITY, f64::max))
}

pub const PATH_COLUMNS: [&str; 4] = ["t", "X", "mass_along", "bound"];

/// Rows `(t, X, m(X, t), ε e^{-At})` for output.
pub fn path_table(path: &CharacteristicPath, a: f64, states: &[SimulationState]) -> Result<Vec<[f64; 4]>> {
    check_aligned(path, states)?;
    Ok(states
        .iter()
        .zip(&path.positions)
        .map(|(s, &x)| [s.t, x, mass_profile(&s.rho, x), path.x_start * (-a * s.t).exp()])
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;
    use crate::initial::gen_cccf;
    use crate::solver::{SnapshotRecorder, Solver, SolverConfig};

    fn run(rho0: &DensityField, alpha: f64, t_end: f64) -> Vec<SimulationState> {
        let mut cfg = SolverConfig::new(alpha, rho0.grid().n_points(), t_end);
        cfg.snapshot_interval = t_end / 50.0;
        let solver = Solver::new(cfg).unwrap();
        let mut rec = SnapshotRecorder::default();
        solver.run(rho0, &mut [&mut rec]).unwrap();
        rec.states
    }

    #[test]
    fn mass_profile_of_cccf() {
        let g = PeriodicGrid::new(64).unwrap();
        let r = gen_cccf(&g);
        assert!((mass_profile(&r, 0.5) - 0.5).abs() < 1e-14);
        assert_eq!(mass_profile(&r, 0.0), 0.0);
    }

    #[test]
    fn constant_density_paths_stay_put() {
        let g = PeriodicGrid::new(64).unwrap();
        let states = run(&DensityField::constant(&g, 1.0).unwrap(), 1.0, 0.1);
        let p = advect_path(&states, 0.3).unwrap();
        assert!(p.positions.iter().all(|x| (x - 0.3).abs() < 1e-14));
        assert!(!p.starved);
    }

    #[test]
    fn origin_is_fixed_and_paths_move_inward() {
        let g = PeriodicGrid::new(256).unwrap();
        let states = run(&gen_cccf(&g), 1.0, 0.05);
        let paths = advect_paths(&states, &[0.0, 0.1]).unwrap();
        assert!(paths[0].positions.iter().all(|x| x.abs() < 1e-10));
        assert!(paths[1].positions.windows(2).all(|w| w[1] <= w[0] + 1e-8));
        assert!(paths[1].positions.last().unwrap() < &0.1);
        assert!(min_path_gap(&paths) > 0.0);
        assert_eq!(check_mass_transport(&paths[1], &paths[1], &states).unwrap(), 0.0);
    }

    #[test]
    fn decay_with_zero_rate_is_monotonicity() {
        let g = PeriodicGrid::new(256).unwrap();
        let states = run(&gen_cccf(&g), 1.0, 0.05);
        let p = advect_path(&states, 0.05).unwrap();
        let rep = check_decay_bound(&p, 0.0, &states).unwrap();
        assert!(rep.applicable && rep.holds);
        assert!(rep.margin >= 0.0);
        // starting where ρ > m/2 makes the check inapplicable
        let q = advect_path(&states, 0.4).unwrap();
        let rep = check_decay_bound(&q, 0.125, &states).unwrap();
        assert!(!rep.applicable && !rep.holds);
    }

    #[test]
    fn wrapping_keeps_positions_on_the_torus() {
        assert_eq!(wrap(0.6), 0.6 - 1.0);
        assert_eq!(wrap(-0.5), -0.5);
        assert_eq!(wrap(0.25), 0.25);
    }

    #[test]
    fn rejects_single_snapshot() {
        let g = PeriodicGrid::new(16).unwrap();
        let solver = Solver::new(SolverConfig::new(1.0, 16, 1.0)).unwrap();
        let s = solver.initial_state(&gen_cccf(&g)).unwrap();
        assert!(advect_path(&[s], 0.1).is_err());
    }
}
