//! Checks against values computed independently in this file.

use std::f64::consts::PI;

use statrs::function::beta::beta;
use statrs::function::gamma::gamma;

use fracpm::extensions::c_prime;
use fracpm::initial::gen_cccf;
use fracpm::nonlocal::{
    c_alpha_closed_form, calibrate_c_alpha, calibrate_c_velocity, fractional_laplacian_spectral, velocity_spectral,
};
use fracpm::solver::{SnapshotRecorder, Solver, SolverConfig};
use fracpm::{OperatorParams, PeriodicGrid};

fn bump(x: f64) -> f64 {
    (2.0 * PI * x).cos().exp()
}

fn bump_second_derivative(x: f64) -> f64 {
    let t = 2.0 * PI * x;
    4.0 * PI * PI * (t.sin().powi(2) - t.cos()) * bump(x)
}

/// Mean of `exp(cos 2πx)` over a period, i.e. the Bessel value I0(1).
fn bump_mean() -> f64 {
    let n = 4096;
    (0..n).map(|j| bump(j as f64 / n as f64)).sum::<f64>() / n as f64
}

/// `c_α ∫_0^∞ (2f(x) - f(x+z) - f(x-z)) z^{-1-α} dz` by direct quadrature on
/// the line. Near zero the substitution `z = s^q` smooths the integrand; past
/// `z = Z` the periodic part is replaced by its mean.
fn laplacian_on_line(f: impl Fn(f64) -> f64, f2: f64, mean: f64, alpha: f64, x: f64) -> f64 {
    let c = alpha * 2f64.powf(alpha - 1.0) * gamma(0.5 * (1.0 + alpha)) / (PI.sqrt() * gamma(1.0 - 0.5 * alpha));
    // Below 1e-3 the second difference is all cancellation; use its Taylor term.
    let g = |z: f64| {
        let d = if z < 1e-3 { -f2 * z * z } else { 2.0 * f(x) - f(x + z) - f(x - z) };
        d * z.powf(-1.0 - alpha)
    };
    let q = 3.0 / (2.0 - alpha);
    let m = 4000;
    let mut inner = 0.0;
    for i in 0..m {
        let s = (i as f64 + 0.5) / m as f64;
        inner += g(s.powf(q)) * q * s.powf(q - 1.0);
    }
    inner /= m as f64;
    let z_far = 2000usize;
    let per_cell = 64;
    let mut outer = 0.0;
    for cell in 1..z_far {
        let mut s = 0.0;
        for i in 0..per_cell {
            let z = cell as f64 + (i as f64 + 0.5) / per_cell as f64;
            s += g(z);
        }
        outer += s / per_cell as f64;
    }
    let tail = 2.0 * (f(x) - mean) * (z_far as f64).powf(-alpha) / alpha;
    c * (inner + outer + tail)
}

#[test]
fn spectral_laplacian_matches_line_quadrature() {
    let grid = PeriodicGrid::new(128).unwrap();
    let f = grid.sample(bump).unwrap();
    let mean = bump_mean();
    for alpha in [0.5, 1.0, 1.5] {
        let lap = fractional_laplacian_spectral(&f, alpha).unwrap();
        for j in [64usize, 72, 80, 96] {
            let x = grid.node(j);
            let direct = laplacian_on_line(bump, bump_second_derivative(x), mean, alpha, x);
            let err = (direct - lap.values()[j]).abs();
            assert!(err < 1e-3 * (1.0 + direct.abs()), "alpha {alpha} x {x}: {direct} vs {}", lap.values()[j]);
        }
    }
}

#[test]
fn calibrated_normalizations_match_closed_forms() {
    for alpha in [0.3, 0.8, 1.0, 1.4, 1.9] {
        let params = OperatorParams::new(alpha).unwrap();
        let closed = alpha * 2f64.powf(alpha - 1.0) * gamma(0.5 * (1.0 + alpha)) / (PI.sqrt() * gamma(1.0 - 0.5 * alpha));
        assert!((c_alpha_closed_form(alpha) - closed).abs() < 1e-13 * closed);
        let c = calibrate_c_alpha(alpha, &params).unwrap();
        assert!((c - closed).abs() < 1e-6 * closed, "alpha {alpha}: {c} vs {closed}");
        let cu = calibrate_c_velocity(alpha, &params).unwrap();
        assert!((cu - closed / alpha).abs() < 1e-6 * closed / alpha, "alpha {alpha}: {cu}");
    }
}

#[test]
fn c_prime_matches_beta_form() {
    for n in [2usize, 3, 4, 5] {
        for alpha in [0.25, 0.5, 1.0, 1.5, 1.75] {
            let h = (n - 1) as f64 / 2.0;
            let omega = 2.0 * PI.powf(h) / gamma(h);
            let expected = omega * 0.5 * beta(0.5 * (alpha + 1.0), h);
            let got = c_prime(n, alpha).unwrap();
            assert!((got - expected).abs() < 1e-10 * expected, "n {n} alpha {alpha}: {got} vs {expected}");
        }
    }
}

#[test]
fn hilbert_of_cosine_is_sine() {
    let grid = PeriodicGrid::new(64).unwrap();
    for k in 1..5 {
        let kf = k as f64;
        let rho = grid.sample(|x| (2.0 * PI * kf * x).cos()).unwrap();
        for alpha in [0.5, 1.0, 1.5] {
            let u = velocity_spectral(&rho, alpha).unwrap();
            let scale = (2.0 * PI * kf).powf(alpha - 1.0);
            for (j, &v) in u.values().iter().enumerate() {
                let expected = scale * (2.0 * PI * kf * grid.node(j)).sin();
                assert!((v - expected).abs() < 1e-12 * (1.0 + scale));
            }
        }
    }
}

/// For `ρ = 1 + ε cos 2πx` the linearized flow is `ρ_t = -(2π)^α (ρ - 1)`,
/// so the perturbation decays like `exp(-(2π)^α t)` up to `O(ε²)`.
#[test]
fn small_perturbation_decays_at_linear_rate() {
    let eps = 1e-4;
    for alpha in [0.5, 1.0, 1.5] {
        let t_end = 0.05;
        let solver = Solver::new(SolverConfig::new(alpha, 64, t_end)).unwrap();
        let rho0 = solver.grid().sample(|x| 1.0 + eps * (2.0 * PI * x).cos()).unwrap();
        let mut rec = SnapshotRecorder::default();
        let out = solver.run(&rho0, &mut [&mut rec]).unwrap();
        let t = out.final_state.t;
        assert!((t - t_end).abs() < 1e-12);
        let decay = (-(2.0 * PI).powf(alpha) * t).exp();
        let grid = solver.grid();
        for (j, &v) in out.final_state.rho.values().iter().enumerate() {
            let expected = 1.0 + eps * decay * (2.0 * PI * grid.node(j)).cos();
            assert!((v - expected).abs() < 10.0 * eps * eps, "alpha {alpha}: {v} vs {expected}");
        }
    }
}

#[test]
fn cccf_velocity_at_alpha_one_is_minus_sine() {
    let grid = PeriodicGrid::new(32).unwrap();
    let u = velocity_spectral(&gen_cccf(&grid), 1.0).unwrap();
    for (j, &v) in u.values().iter().enumerate() {
        assert!((v + (2.0 * PI * grid.node(j)).sin()).abs() < 1e-14);
    }
}
