//! Explicit pseudo-spectral evolution of `∂tρ = -∂x(ρu)`, `u = HΛ^{α-1}ρ`.
//!
//! The state is advanced in coefficient space with three-stage SSP
//! Runge-Kutta. Each right-hand side costs one inverse transform (density
//! and velocity packed as real and imaginary parts) and one forward
//! transform of the flux.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{DensityField, PeriodicGrid};
use crate::nonlocal::{check_alpha, velocity_symbol};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub alpha: f64,
    pub n_points: usize,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    #[serde(default = "default_dealias")]
    pub dealias_fraction: f64,
    pub t_end: f64,
    #[serde(default = "default_tail_threshold")]
    pub tail_threshold: f64,
    pub snapshot_interval: f64,
    #[serde(default = "default_max_steps")]
    pub max_steps: u64,
}

fn default_cfl() -> f64 {
    0.4
}
fn default_dealias() -> f64 {
    2.0 / 3.0
}
fn default_tail_threshold() -> f64 {
    1e-8
}
fn default_max_steps() -> u64 {
    50_000_000
}

impl SolverConfig {
    pub fn new(alpha: f64, n_points: usize, t_end: f64) -> Self {
        Self {
            alpha,
            n_points,
            cfl: default_cfl(),
            dealias_fraction: default_dealias(),
            t_end,
            tail_threshold: default_tail_threshold(),
            snapshot_interval: t_end / 100.0,
            max_steps: default_max_steps(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(invalid(format!("cfl must lie in (0, 1], got {}", self.cfl)));
        }
        if !(self.dealias_fraction > 0.0 && self.dealias_fraction <= 1.0) {
            return Err(invalid(format!(
                "dealias_fraction must lie in (0, 1], got {}",
                self.dealias_fraction
            )));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(invalid(format!("t_end must be positive, got {}", self.t_end)));
        }
        if !(self.snapshot_interval > 0.0) {
            return Err(invalid(format!(
                "snapshot_interval must be positive, got {}",
                self.snapshot_interval
            )));
        }
        if !(self.tail_threshold > 0.0) {
            return Err(invalid("tail_threshold must be positive"));
        }
        if self.max_steps == 0 {
            return Err(invalid("max_steps must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SimulationState {
    pub t: f64,
    pub rho: DensityField,
    pub u: DensityField,
    pub step_count: u64,
    pub dt_last: f64,
    pub under_resolved: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    TEnd,
    UnderResolved,
    MaxSteps,
    Nan,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::TEnd => "t_end",
            Self::UnderResolved => "under_resolved",
            Self::MaxSteps => "max_steps",
            Self::Nan => "nan",
        }
    }
}

/// Called with the state at every snapshot time and at the final state.
pub trait Observer {
    fn observe(&mut self, state: &SimulationState);
}

impl<F: FnMut(&SimulationState)> Observer for F {
    fn observe(&mut self, state: &SimulationState) {
        self(state)
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub final_state: SimulationState,
    pub stop_reason: StopReason,
    /// Time of the rejected step when the run stopped for resolution or NaN.
    pub rejected_at: Option<f64>,
}

/// Keeps every observed state, for post-hoc path integration.
#[derive(Clone, Debug, Default)]
pub struct SnapshotRecorder {
    pub states: Vec<SimulationState>,
}

impl Observer for SnapshotRecorder {
    fn observe(&mut self, state: &SimulationState) {
        if self.states.last().map_or(true, |s| s.t < state.t) {
            self.states.push(state.clone());
        }
    }
}

/// Largest retained wavenumber, `floor(fraction · n/2)`.
pub fn dealias_cutoff(n_points: usize, fraction: f64) -> usize {
    ((fraction * (n_points / 2) as f64) + 1e-9).floor() as usize
}

/// Stateless pieces of the discretization for one configuration.
#[derive(Clone, Debug)]
pub struct Solver {
    config: SolverConfig,
    grid: PeriodicGrid,
    kmax: usize,
    velocity: Vec<Complex64>,
    /// `-2πik` on retained wavenumbers, zero elsewhere.
    flux_derivative: Vec<Complex64>,
    dissipation_rate: f64,
}

struct Scratch {
    phys: Vec<Complex64>,
}

#[derive(Clone, Copy)]
struct StageExtrema {
    rho_max_abs: f64,
    u_max_abs: f64,
}

impl Solver {
    pub fn new(config: SolverConfig) -> Result<Self> {
        config.validate()?;
        let grid = PeriodicGrid::new(config.n_points)?;
        let kmax = dealias_cutoff(config.n_points, config.dealias_fraction);
        let velocity = grid.symbol_table(velocity_symbol(config.alpha));
        let flux_derivative = (0..grid.n_points())
            .map(|i| {
                let k = grid.wavenumber(i);
                if k.unsigned_abs() as usize <= kmax && i != grid.nyquist() {
                    Complex64::new(0.0, -2.0 * PI * k as f64)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        let dissipation_rate = (2.0 * PI * kmax as f64).powf(config.alpha);
        Ok(Self {
            config,
            grid,
            kmax,
            velocity,
            flux_derivative,
            dissipation_rate,
        })
    }

    pub fn config(&self) -> &SolverConfig {
        &self.config
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn kmax(&self) -> usize {
        self.kmax
    }

    fn scratch(&self) -> Scratch {
        Scratch {
            phys: vec![Complex64::new(0.0, 0.0); self.grid.n_points()],
        }
    }

    /// Writes the coefficients of `-∂x(ρu)` into `out`.
    fn rhs_spectral(&self, rho_hat: &[Complex64], out: &mut [Complex64], scratch: &mut Scratch) -> StageExtrema {
        let buf = &mut scratch.phys;
        for ((b, r), v) in buf.iter_mut().zip(rho_hat).zip(&self.velocity) {
            // ρ̂ + i û; both fields are real so they separate after the inverse.
            let u = r * v;
            *b = Complex64::new(r.re - u.im, r.im + u.re);
        }
        self.grid.inverse_in_place(buf);
        let mut rho_max_abs = 0.0f64;
        let mut u_max_abs = 0.0f64;
        for b in buf.iter_mut() {
            rho_max_abs = rho_max_abs.max(b.re.abs());
            u_max_abs = u_max_abs.max(b.im.abs());
            *b = Complex64::new(b.re * b.im, 0.0);
        }
        self.grid.forward_in_place(buf);
        for ((o, b), d) in out.iter_mut().zip(buf.iter()).zip(&self.flux_derivative) {
            *o = b * d;
        }
        StageExtrema {
            rho_max_abs,
            u_max_abs,
        }
    }

    /// `-∂x(ρu)` as a field.
    pub fn rhs(&self, rho: &DensityField) -> Result<DensityField> {
        self.check_grid(rho)?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.grid.n_points()];
        self.rhs_spectral(rho.spectrum(), &mut out, &mut self.scratch());
        DensityField::from_spectrum(&self.grid, out)
    }

    fn check_grid(&self, rho: &DensityField) -> Result<()> {
        if rho.grid() != &self.grid {
            return Err(Error::GridMismatch(rho.grid().n_points(), self.grid.n_points()));
        }
        Ok(())
    }

    fn dt_from(&self, rho_max: f64, u_max: f64) -> f64 {
        let transport = self.grid.dx() / (u_max + 1e-12);
        let dissipation = 1.0 / (rho_max.max(f64::MIN_POSITIVE) * self.dissipation_rate);
        self.config.cfl * transport.min(dissipation)
    }

    /// `cfl · min(Δx/(max|u| + 1e-12), 1/(max ρ · (2π k_max)^α))`.
    pub fn stable_dt(&self, state: &SimulationState) -> f64 {
        self.dt_from(state.rho.max_abs(), state.u.max_abs())
    }

    /// Fraction of the energy `sum |ρ̂_k|^2` (mean included) carried by the
    /// top third of the retained band, `(2 k_max/3, k_max]`.
    pub fn tail_fraction(&self, rho_hat: &[Complex64]) -> f64 {
        let lo = 2.0 * self.kmax as f64 / 3.0;
        let mut total = 0.0;
        let mut tail = 0.0;
        for (i, c) in rho_hat.iter().enumerate() {
            let k = self.grid.wavenumber(i).unsigned_abs() as f64;
            let e = c.norm_sqr();
            total += e;
            if k > lo && k <= self.kmax as f64 {
                tail += e;
            }
        }
        if total > 0.0 {
            tail / total
        } else {
            0.0
        }
    }

    fn advance(&self, rho_hat: &[Complex64], dt: f64, k1: &[Complex64], out: &mut [Complex64], tmp: &mut [Complex64], scratch: &mut Scratch) {
        for ((o, r), k) in out.iter_mut().zip(rho_hat).zip(k1) {
            *o = r + k * dt;
        }
        self.rhs_spectral(out, tmp, scratch);
        for ((o, r), k) in out.iter_mut().zip(rho_hat).zip(tmp.iter()) {
            *o = 0.75 * r + 0.25 * (*o + k * dt);
        }
        self.rhs_spectral(out, tmp, scratch);
        for ((o, r), k) in out.iter_mut().zip(rho_hat).zip(tmp.iter()) {
            *o = r / 3.0 + (2.0 / 3.0) * (*o + k * dt);
        }
    }

    fn state_from(&self, rho_hat: &[Complex64], t: f64, step_count: u64, dt_last: f64) -> Result<SimulationState> {
        let rho = DensityField::from_spectrum(&self.grid, rho_hat.to_vec())?;
        let u_hat: Vec<Complex64> = rho_hat.iter().zip(&self.velocity).map(|(r, v)| r * v).collect();
        let u = DensityField::from_spectrum(&self.grid, u_hat)?;
        Ok(SimulationState {
            t,
            rho,
            u,
            step_count,
            dt_last,
            under_resolved: false,
        })
    }

    /// Initial state with the induced velocity.
    pub fn initial_state(&self, rho0: &DensityField) -> Result<SimulationState> {
        self.check_grid(rho0)?;
        self.state_from(rho0.spectrum(), 0.0, 0, 0.0)
    }

    /// One SSP-RK3 step of size `dt`.
    pub fn step_ssprk3(&self, state: &SimulationState, dt: f64) -> Result<SimulationState> {
        let n = self.grid.n_points();
        let mut scratch = self.scratch();
        let mut k1 = vec![Complex64::new(0.0, 0.0); n];
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        let mut tmp = vec![Complex64::new(0.0, 0.0); n];
        let rho_hat = state.rho.spectrum();
        self.rhs_spectral(rho_hat, &mut k1, &mut scratch);
        self.advance(rho_hat, dt, &k1, &mut out, &mut tmp, &mut scratch);
        let t = state.t + dt;
        if out.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::NonFiniteState { t });
        }
        self.state_from(&out, t, state.step_count + 1, dt)
    }

    /// Integrates from `rho0` until `t_end`, loss of resolution, `max_steps`
    /// or a non-finite state, calling `observers` at snapshot times.
    pub fn run(&self, rho0: &DensityField, observers: &mut [&mut dyn Observer]) -> Result<RunOutput> {
        let initial = self.initial_state(rho0)?;
        let cfg = &self.config;
        let n = self.grid.n_points();
        let mut rho_hat = rho0.spectrum().to_vec();
        let mut next = vec![Complex64::new(0.0, 0.0); n];
        let mut k1 = vec![Complex64::new(0.0, 0.0); n];
        let mut tmp = vec![Complex64::new(0.0, 0.0); n];
        let mut scratch = self.scratch();

        for obs in observers.iter_mut() {
            obs.observe(&initial);
        }
        let mut t = 0.0;
        let mut steps = 0u64;
        let mut dt_last = 0.0;
        let mut snapshot_index = 1u64;
        let mut last_observed = 0.0;
        let snapshot_time = |k: u64| (k as f64 * cfg.snapshot_interval).min(cfg.t_end);

        let (stop_reason, rejected_at) = loop {
            if t >= cfg.t_end {
                break (StopReason::TEnd, None);
            }
            if steps >= cfg.max_steps {
                break (StopReason::MaxSteps, None);
            }
            let target = snapshot_time(snapshot_index);
            let ext = self.rhs_spectral(&rho_hat, &mut k1, &mut scratch);
            let mut dt = self.dt_from(ext.rho_max_abs, ext.u_max_abs);
            let mut t_new = t + dt;
            let hits_target = t_new >= target * (1.0 - 1e-14);
            if hits_target {
                dt = target - t;
                t_new = target;
            }
            self.advance(&rho_hat, dt, &k1, &mut next, &mut tmp, &mut scratch);
            if next.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
                break (StopReason::Nan, Some(t_new));
            }
            if self.tail_fraction(&next) > cfg.tail_threshold {
                break (StopReason::UnderResolved, Some(t_new));
            }
            std::mem::swap(&mut rho_hat, &mut next);
            t = t_new;
            steps += 1;
            dt_last = dt;
            if hits_target {
                let state = self.state_from(&rho_hat, t, steps, dt_last)?;
                for obs in observers.iter_mut() {
                    obs.observe(&state);
                }
                last_observed = t;
                while snapshot_time(snapshot_index) <= t && t < cfg.t_end {
                    snapshot_index += 1;
                }
            }
        };

        let mut final_state = self.state_from(&rho_hat, t, steps, dt_last)?;
        final_state.under_resolved = stop_reason == StopReason::UnderResolved;
        if t > last_observed {
            for obs in observers.iter_mut() {
                obs.observe(&final_state);
            }
        }
        Ok(RunOutput {
            final_state,
            stop_reason,
            rejected_at,
        })
    }
}

/// `-∂x(ρu)` with `u = HΛ^{α-1}ρ`, flux modes above `fraction · n/2` removed.
pub fn rhs(rho: &DensityField, alpha: f64, dealias_fraction: f64) -> Result<DensityField> {
    let n = rho.grid().n_points();
    let mut config = SolverConfig::new(alpha, n, 1.0);
    config.dealias_fraction = dealias_fraction;
    Solver::new(config)?.rhs(rho)
}
