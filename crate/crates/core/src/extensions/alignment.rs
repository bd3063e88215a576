//! 1D Euler-Alignment system with the singular kernel `c_α |x-y|^{-1-α}`:
//!
//! `∂tρ + ∂x(ρu) = 0`, `∂tu + u∂xu = ∫ψ(|x-y|)(u(y) - u(x))ρ(y) dy`.
//!
//! The alignment integral equals the commutator `uΛ^αρ - Λ^α(ρu)`, and
//! `G = ∂xu - Λ^αρ` is transported, so `G ≡ 0` initially reduces the system
//! to the density equation with `u = HΛ^{α-1}ρ`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{DensityField, PeriodicGrid};
use crate::nonlocal::{check_alpha, laplacian_symbol};
use crate::solver::{Solver, SolverConfig, StopReason};

#[derive(Clone, Debug)]
pub struct AlignmentState {
    pub t: f64,
    pub rho: DensityField,
    pub u: DensityField,
    /// `∂xu - Λ^αρ`.
    pub g: DensityField,
}

impl AlignmentState {
    pub fn new(t: f64, rho: DensityField, u: DensityField, alpha: f64) -> Result<Self> {
        let g = g_field(&rho, &u, alpha)?;
        Ok(Self { t, rho, u, g })
    }
}

fn same_grid(a: &DensityField, b: &DensityField) -> Result<()> {
    if a.grid() != b.grid() {
        return Err(Error::GridMismatch(a.grid().n_points(), b.grid().n_points()));
    }
    Ok(())
}

/// `Λ^α` table with the Nyquist slot dropped, matching the derivative table.
fn laplacian_table(grid: &PeriodicGrid, alpha: f64) -> Vec<Complex64> {
    let mut t = grid.symbol_table(laplacian_symbol(alpha));
    t[grid.nyquist()] = Complex64::new(0.0, 0.0);
    t
}

fn g_spectrum(grid: &PeriodicGrid, rho_hat: &[Complex64], u_hat: &[Complex64], lap: &[Complex64], dx: &[Complex64]) -> Vec<Complex64> {
    let mut g: Vec<Complex64> = u_hat
        .iter()
        .zip(rho_hat)
        .zip(lap.iter().zip(dx))
        .map(|((u, r), (l, d))| d * u - l * r)
        .collect();
    g[grid.nyquist()] = Complex64::new(0.0, 0.0);
    g
}

/// `∂xu - Λ^αρ` on the modes below Nyquist.
pub fn g_field(rho: &DensityField, u: &DensityField, alpha: f64) -> Result<DensityField> {
    check_alpha(alpha)?;
    same_grid(rho, u)?;
    let grid = rho.grid();
    let g = g_spectrum(grid, rho.spectrum(), u.spectrum(), &laplacian_table(grid, alpha), &grid.derivative_table());
    DensityField::from_spectrum(grid, g)
}

/// `uΛ^αρ - Λ^α(ρu)`, products formed on the grid without dealiasing.
pub fn alignment_force(rho: &DensityField, u: &DensityField, alpha: f64) -> Result<DensityField> {
    check_alpha(alpha)?;
    same_grid(rho, u)?;
    let grid = rho.grid();
    let lap = grid.symbol_table(laplacian_symbol(alpha));
    let lap_rho = grid.inverse(&rho.spectrum().iter().zip(&lap).map(|(c, s)| c * s).collect::<Vec<_>>());
    let flux: Vec<f64> = rho.values().iter().zip(u.values()).map(|(r, v)| r * v).collect();
    let flux_hat = grid.forward(&flux);
    let lap_flux = grid.inverse(&flux_hat.iter().zip(&lap).map(|(c, s)| c * s).collect::<Vec<_>>());
    let values = u
        .values()
        .iter()
        .zip(&lap_rho)
        .zip(&lap_flux)
        .map(|((v, lr), lf)| v * lr - lf)
        .collect();
    DensityField::new(grid.clone(), values)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AlignmentRecord {
    pub t: f64,
    pub g_max: f64,
    pub dxu_max: f64,
    pub tail_fraction: f64,
    pub dt: f64,
}

impl AlignmentRecord {
    pub const COLUMNS: [&'static str; 5] = ["t", "g_max", "dxu_max", "tail_fraction", "dt"];

    pub fn values(&self) -> [f64; 5] {
        [self.t, self.g_max, self.dxu_max, self.tail_fraction, self.dt]
    }
}

#[derive(Clone, Debug)]
pub struct AlignmentRun {
    /// States at `t = 0`, every snapshot time and the final time.
    pub states: Vec<AlignmentState>,
    pub records: Vec<AlignmentRecord>,
    pub stop_reason: StopReason,
    pub rejected_at: Option<f64>,
}

struct Stepper<'a> {
    solver: &'a Solver,
    grid: &'a PeriodicGrid,
    alpha: f64,
    lap: Vec<Complex64>,
    dx: Vec<Complex64>,
    /// `-2πik` on retained wavenumbers.
    flux_derivative: Vec<Complex64>,
    mask: Vec<bool>,
    buf: Vec<Complex64>,
    buf2: Vec<Complex64>,
}

impl<'a> Stepper<'a> {
    fn new(solver: &'a Solver) -> Self {
        let grid = solver.grid();
        let n = grid.n_points();
        let kmax = solver.kmax();
        let mask: Vec<bool> = (0..n)
            .map(|i| grid.wavenumber(i).unsigned_abs() as usize <= kmax && i != grid.nyquist())
            .collect();
        let flux_derivative = (0..n)
            .map(|i| {
                if mask[i] {
                    Complex64::new(0.0, -2.0 * PI * grid.wavenumber(i) as f64)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        let alpha = solver.config().alpha;
        Self {
            solver,
            grid,
            alpha,
            lap: laplacian_table(grid, alpha),
            dx: grid.derivative_table(),
            flux_derivative,
            mask,
            buf: vec![Complex64::new(0.0, 0.0); n],
            buf2: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Writes the right-hand sides for `ρ̂` and `û`; returns `(max|ρ|, max|u|)`.
    fn rhs(&mut self, rho: &[Complex64], u: &[Complex64], d_rho: &mut [Complex64], d_u: &mut [Complex64]) -> (f64, f64) {
        let n = self.grid.n_points();
        for i in 0..n {
            self.buf[i] = rho[i] + Complex64::i() * u[i];
            self.buf2[i] = self.dx[i] * u[i] + Complex64::i() * (self.lap[i] * rho[i]);
        }
        self.grid.inverse_in_place(&mut self.buf);
        self.grid.inverse_in_place(&mut self.buf2);
        let mut rho_max = 0.0f64;
        let mut u_max = 0.0f64;
        for (b, b2) in self.buf.iter_mut().zip(self.buf2.iter()) {
            let (r, v) = (b.re, b.im);
            let (ux, lap_rho) = (b2.re, b2.im);
            rho_max = rho_max.max(r.abs());
            u_max = u_max.max(v.abs());
            *b = Complex64::new(r * v, v * (lap_rho - ux));
        }
        self.grid.forward_in_place(&mut self.buf);
        for i in 0..n {
            if !self.mask[i] {
                d_rho[i] = Complex64::new(0.0, 0.0);
                d_u[i] = Complex64::new(0.0, 0.0);
                continue;
            }
            // Both products are real, so their transforms separate.
            let x = self.buf[i];
            let y = self.buf[(n - i) % n].conj();
            let flux = 0.5 * (x + y);
            let rest = (x - y) * Complex64::new(0.0, -0.5);
            d_rho[i] = self.flux_derivative[i] * flux;
            d_u[i] = rest - self.lap[i] * flux;
        }
        (rho_max, u_max)
    }

    fn state(&self, t: f64, rho: &[Complex64], u: &[Complex64]) -> Result<AlignmentState> {
        let r = DensityField::from_spectrum(self.grid, rho.to_vec())?;
        let v = DensityField::from_spectrum(self.grid, u.to_vec())?;
        let g = DensityField::from_spectrum(self.grid, g_spectrum(self.grid, rho, u, &self.lap, &self.dx))?;
        Ok(AlignmentState { t, rho: r, u: v, g })
    }

    fn record(&self, state: &AlignmentState, dt: f64) -> AlignmentRecord {
        let dxu: Vec<Complex64> = state.u.spectrum().iter().zip(&self.dx).map(|(c, d)| c * d).collect();
        let dxu_max = self.grid.inverse(&dxu).iter().fold(0.0f64, |m, v| m.max(v.abs()));
        AlignmentRecord {
            t: state.t,
            g_max: state.g.max_abs(),
            dxu_max,
            tail_fraction: self.tail(state.rho.spectrum(), state.u.spectrum()),
            dt,
        }
    }

    fn tail(&self, rho: &[Complex64], u: &[Complex64]) -> f64 {
        self.solver.tail_fraction(rho).max(self.solver.tail_fraction(u))
    }

    fn dt(&self, rho_max: f64, u_max: f64) -> f64 {
        let cfg = self.solver.config();
        let transport = self.grid.dx() / (u_max + 1e-12);
        let rate = (2.0 * PI * self.solver.kmax() as f64).powf(self.alpha);
        let dissipation = 1.0 / (rho_max.max(f64::MIN_POSITIVE) * rate);
        cfg.cfl * transport.min(dissipation)
    }
}

/// Evolves `(ρ, u)` with dealiased SSP-RK3 under the time step, snapshot and
/// resolution rules of the density solver. The run stops when either field's
/// spectral tail exceeds the threshold.
pub fn run_alignment(rho0: &DensityField, u0: &DensityField, config: &SolverConfig) -> Result<AlignmentRun> {
    same_grid(rho0, u0)?;
    let solver = Solver::new(config.clone())?;
    if rho0.grid() != solver.grid() {
        return Err(Error::GridMismatch(rho0.grid().n_points(), config.n_points));
    }
    let mut st = Stepper::new(&solver);
    let n = rho0.grid().n_points();
    let zero = Complex64::new(0.0, 0.0);
    let mut rho = rho0.spectrum().to_vec();
    let mut u = u0.spectrum().to_vec();
    let (mut kr, mut ku) = (vec![zero; n], vec![zero; n]);
    let (mut r1, mut u1) = (vec![zero; n], vec![zero; n]);
    let (mut r2, mut u2) = (vec![zero; n], vec![zero; n]);

    let initial = st.state(0.0, &rho, &u)?;
    let mut records = vec![st.record(&initial, 0.0)];
    let mut states = vec![initial];
    let snapshot_time = |k: u64| (k as f64 * config.snapshot_interval).min(config.t_end);
    let mut t = 0.0;
    let mut steps = 0u64;
    let mut dt_last = 0.0;
    let mut snapshot_index = 1u64;

    let (stop_reason, rejected_at) = loop {
        if t >= config.t_end {
            break (StopReason::TEnd, None);
        }
        if steps >= config.max_steps {
            break (StopReason::MaxSteps, None);
        }
        let target = snapshot_time(snapshot_index);
        let (rho_max, u_max) = st.rhs(&rho, &u, &mut kr, &mut ku);
        let mut dt = st.dt(rho_max, u_max);
        let mut t_new = t + dt;
        let hits_target = t_new >= target * (1.0 - 1e-14);
        if hits_target {
            dt = target - t;
            t_new = target;
        }
        for i in 0..n {
            r1[i] = rho[i] + dt * kr[i];
            u1[i] = u[i] + dt * ku[i];
        }
        st.rhs(&r1, &u1, &mut kr, &mut ku);
        for i in 0..n {
            r2[i] = 0.75 * rho[i] + 0.25 * (r1[i] + dt * kr[i]);
            u2[i] = 0.75 * u[i] + 0.25 * (u1[i] + dt * ku[i]);
        }
        st.rhs(&r2, &u2, &mut kr, &mut ku);
        for i in 0..n {
            r1[i] = rho[i] / 3.0 + (2.0 / 3.0) * (r2[i] + dt * kr[i]);
            u1[i] = u[i] / 3.0 + (2.0 / 3.0) * (u2[i] + dt * ku[i]);
        }
        if r1.iter().chain(&u1).any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            break (StopReason::Nan, Some(t_new));
        }
        if st.tail(&r1, &u1) > config.tail_threshold {
            break (StopReason::UnderResolved, Some(t_new));
        }
        std::mem::swap(&mut rho, &mut r1);
        std::mem::swap(&mut u, &mut u1);
        t = t_new;
        steps += 1;
        dt_last = dt;
        if hits_target {
            let s = st.state(t, &rho, &u)?;
            records.push(st.record(&s, dt_last));
            states.push(s);
            while snapshot_time(snapshot_index) <= t && t < config.t_end {
                snapshot_index += 1;
            }
        }
    };
    if states.last().map_or(true, |s| s.t < t) {
        let s = st.state(t, &rho, &u)?;
        records.push(st.record(&s, dt_last));
        states.push(s);
    }
    Ok(AlignmentRun {
        states,
        records,
        stop_reason,
        rejected_at,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::initial::gen_cccf;
    use crate::nonlocal::{fractional_laplacian_spectral, velocity_spectral};

    #[test]
    fn constant_velocity_feels_no_force() {
        let g = PeriodicGrid::new(64).unwrap();
        let rho = gen_cccf(&g);
        let u = DensityField::constant(&g, 0.3).unwrap();
        let f = alignment_force(&rho, &u, 0.8).unwrap();
        assert!(f.max_abs() < 1e-12);
    }

    #[test]
    fn unit_density_gives_fractional_dissipation() {
        let g = PeriodicGrid::new(64).unwrap();
        let one = DensityField::constant(&g, 1.0).unwrap();
        let u = g.sample(|x| (2.0 * PI * x).sin() + 0.2 * (6.0 * PI * x).cos()).unwrap();
        let f = alignment_force(&one, &u, 1.3).unwrap();
        let lap = fractional_laplacian_spectral(&u, 1.3).unwrap();
        let err = f.values().iter().zip(lap.values()).map(|(a, b)| (a + b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn induced_velocity_has_zero_g() {
        let g = PeriodicGrid::new(128).unwrap();
        let rho = gen_cccf(&g);
        let u = velocity_spectral(&rho, 0.7).unwrap();
        let s = AlignmentState::new(0.0, rho, u, 0.7).unwrap();
        assert!(s.g.max_abs() < 1e-12);
    }

    #[test]
    fn short_run_keeps_g_zero() {
        let g = PeriodicGrid::new(128).unwrap();
        let rho = gen_cccf(&g);
        let u = velocity_spectral(&rho, 1.0).unwrap();
        let mut cfg = SolverConfig::new(1.0, 128, 0.02);
        cfg.snapshot_interval = 0.005;
        let run = run_alignment(&rho, &u, &cfg).unwrap();
        assert_eq!(run.stop_reason, StopReason::TEnd);
        assert_eq!(run.states.len(), 5);
        for r in &run.records {
            assert!(r.g_max <= 1e-10 * r.dxu_max, "{r:?}");
        }
    }
}
