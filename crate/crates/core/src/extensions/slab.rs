//! Slab data on the 2D torus, `ρ(x1, x2) = ρ0(x1)`, and the constant `c'_{n,α}`
//! relating the transverse integral of the n-dimensional kernel to the 1D one.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::Serialize;
use statrs::function::gamma::gamma;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::grid::DensityField;
use crate::initial::smooth_step;
use crate::nonlocal::{check_alpha, velocity_spectral};
use crate::quadrature::{adaptive, composite, graded};

/// Real samples on an `n × n` grid, row-major with `x1` as the row index.
#[derive(Clone, Debug, PartialEq)]
pub struct Field2 {
    n: usize,
    values: Vec<f64>,
}

impl Field2 {
    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::InvalidGrid(n));
        }
        if values.len() != n * n {
            return Err(Error::LengthMismatch { expected: n * n, got: values.len() });
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(j));
        }
        Ok(Self { n, values })
    }

    /// Samples `f(x1, x2)` at the nodes `(j - n/2)/n` in each direction.
    pub fn sample(n: usize, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let node = |j: usize| (j as f64 - (n / 2) as f64) / n as f64;
        let values = (0..n * n).map(|idx| f(node(idx / n), node(idx % n))).collect();
        Self::new(n, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, i1: usize, i2: usize) -> f64 {
        self.values[i1 * self.n + i2]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    fn transform(&self, buf: &mut [Complex64], inverse: bool) {
        let n = self.n;
        let plan = if inverse { &self.inverse } else { &self.forward };
        plan.process(buf);
        let mut col = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..n {
            for i in 0..n {
                col[i] = buf[i * n + j];
            }
            plan.process(&mut col);
            for i in 0..n {
                buf[i * n + j] = col[i];
            }
        }
    }

    fn spectrum(&self, f: &Field2) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut buf, false);
        let scale = 1.0 / (self.n * self.n) as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
        buf
    }

    fn field(&self, mut coeffs: Vec<Complex64>) -> Result<Field2> {
        self.transform(&mut coeffs, true);
        Field2::new(self.n, coeffs.into_iter().map(|c| c.re).collect())
    }

    fn wavenumber(&self, i: usize) -> i64 {
        if i <= self.n / 2 {
            i as i64
        } else {
            i as i64 - self.n as i64
        }
    }

    /// Tabulates `symbol(k1, k2)`, averaging over `±n/2` in every Nyquist
    /// direction so Hermitian symmetry survives.
    fn table(&self, symbol: impl Fn(i64, i64) -> Complex64) -> Vec<Complex64> {
        let n = self.n;
        let nyq = (n / 2) as i64;
        let options = |i: usize| -> Vec<i64> {
            if i == n / 2 {
                vec![nyq, -nyq]
            } else {
                vec![self.wavenumber(i)]
            }
        };
        (0..n * n)
            .map(|idx| {
                let (a, b) = (options(idx / n), options(idx % n));
                let mut acc = Complex64::new(0.0, 0.0);
                for &k1 in &a {
                    for &k2 in &b {
                        acc += symbol(k1, k2);
                    }
                }
                acc / (a.len() * b.len()) as f64
            })
            .collect()
    }

    fn apply(&self, f: &Field2, table: &[Complex64]) -> Result<Field2> {
        let coeffs = self.spectrum(f).iter().zip(table).map(|(c, s)| c * s).collect();
        self.field(coeffs)
    }
}

/// Extends a 1D density to slab data on the matching 2D grid.
pub fn slab_extend(rho: &DensityField) -> Result<Field2> {
    let n = rho.grid().n_points();
    let v = rho.values();
    Field2::new(n, (0..n * n).map(|idx| v[idx / n]).collect())
}

/// Component `j` of the velocity multiplier, `-i 2πk_j |2πk|^{α-2}`; the sign
/// makes the slab velocity coincide with `HΛ^{α-1}ρ0`.
fn velocity_multiplier(alpha: f64, j: usize) -> impl Fn(i64, i64) -> Complex64 {
    move |k1, k2| {
        if k1 == 0 && k2 == 0 {
            return Complex64::new(0.0, 0.0);
        }
        let kj = if j == 0 { k1 } else { k2 } as f64;
        let mag = 2.0 * PI * ((k1 * k1 + k2 * k2) as f64).sqrt();
        Complex64::new(0.0, -2.0 * PI * kj * mag.powf(alpha - 2.0))
    }
}

/// `(u1, u2)` for a density on the 2D torus.
pub fn velocity_2d(rho: &Field2, alpha: f64) -> Result<(Field2, Field2)> {
    check_alpha(alpha)?;
    let fft = Fft2::new(rho.n);
    let spec = fft.spectrum(rho);
    let comp = |j| {
        let table = fft.table(velocity_multiplier(alpha, j));
        fft.field(spec.iter().zip(&table).map(|(c, s)| c * s).collect())
    };
    Ok((comp(0)?, comp(1)?))
}

/// `max |tr((∇u)²) - (∇·u)²|` with spectral derivatives.
pub fn spectral_gap_2d(u1: &Field2, u2: &Field2) -> Result<f64> {
    if u1.n != u2.n {
        return Err(Error::GridMismatch(u1.n, u2.n));
    }
    let fft = Fft2::new(u1.n);
    let d = |j: usize| {
        fft.table(move |k1, k2| {
            let k = if j == 0 { k1 } else { k2 };
            Complex64::new(0.0, 2.0 * PI * k as f64)
        })
    };
    let (d1, d2) = (d(0), d(1));
    let a11 = fft.apply(u1, &d1)?;
    let a12 = fft.apply(u1, &d2)?;
    let a21 = fft.apply(u2, &d1)?;
    let a22 = fft.apply(u2, &d2)?;
    Ok((0..u1.n * u1.n)
        .map(|i| {
            let (p, q, r, s) = (a11.values[i], a12.values[i], a21.values[i], a22.values[i]);
            let trace = p * p + 2.0 * q * r + s * s;
            (trace - (p + s) * (p + s)).abs()
        })
        .fold(0.0, f64::max))
}

/// `ω_{n-1} ∫_0^∞ (1+r²)^{-(n+α)/2} r^{n-2} dr`, with `ω_{n-1} = 2π^{(n-1)/2}/Γ((n-1)/2)`
/// the area of the unit sphere in `R^{n-1}` (so `ω_1 = 2`). The integral is
/// taken in `r = tan θ`, where it becomes `∫_0^{π/2} cos^α θ sin^{n-2} θ dθ`.
pub fn c_prime(n: usize, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    if n < 2 {
        return Err(invalid(format!("dimension must be at least 2, got {n}")));
    }
    let h = (n - 1) as f64 / 2.0;
    let omega = 2.0 * PI.powf(h) / gamma(h);
    let p = (n - 2) as i32;
    let integral = adaptive(|t| t.cos().max(0.0).powf(alpha) * t.sin().powi(p), 0.0, PI / 2.0, 1e-15, 1e-13)?;
    let c = omega * integral;
    if !(c.is_finite() && c > 0.0) {
        return Err(Error::Quadrature(format!("c' = {c} for n = {n}, alpha = {alpha}")));
    }
    Ok(c)
}

/// Transverse cutoff half-width for the real-space check.
const SLAB_EXTENT: f64 = 1e3;
/// Points `x1` at which the real-space check is made.
const CHECK_POINTS: [f64; 3] = [0.1, 0.2, 0.3];

/// Compactly supported 1D profile: `ρ0` tapered to zero at `|y| = 1/2`.
struct Profile {
    rho: crate::grid::Interpolant,
}

impl Profile {
    fn value(&self, y: f64) -> f64 {
        if y.abs() >= 0.5 {
            return 0.0;
        }
        self.rho.value(y) * (1.0 - smooth_step((y.abs() - 0.35) / 0.15))
    }

    fn slope(&self, y: f64) -> f64 {
        let h = 1e-5;
        (self.value(y + h) - self.value(y - h)) / (2.0 * h)
    }
}

/// `∫_0^len g(r) r^{-α} dr` where `g(r) = slope·r + O(r²)` near zero.
fn radial(len: f64, panel: f64, alpha: f64, slope: f64, g: impl Fn(f64) -> f64) -> f64 {
    let head = panel.min(len);
    let eps = 1e-12 * head;
    let near = graded(head, eps, |r| g(r) * r.powf(-alpha), |e| slope * e.powf(2.0 - alpha) / (2.0 - alpha));
    if len <= head {
        return near;
    }
    let panels = ((len - head) / panel).ceil() as usize;
    near + composite(head, len, panels, |r| g(r) * r.powf(-alpha))
}

/// 1D velocity kernel `sgn(z)|z|^{-α}` applied to the profile at `x1`.
fn velocity_1d(p: &Profile, alpha: f64, x1: f64) -> f64 {
    let len = 0.5 + x1.abs();
    radial(len, 0.01, alpha, -2.0 * p.slope(x1), |s| p.value(x1 - s) - p.value(x1 + s))
}

/// First component of the 2D kernel `z/|z|^{2+α}` applied, in polar
/// coordinates about `(x1, 0)`, to `φ(y1) χ(y2/R)`.
fn velocity_2d_real(p: &Profile, alpha: f64, x1: f64) -> Result<f64> {
    let chi = |t: f64| 1.0 - smooth_step(t.abs() - 1.0);
    let reach = 0.5 + x1.abs();
    let slope = -2.0 * p.slope(x1);
    let angular = |theta: f64| {
        let (s, c) = theta.sin_cos();
        if c <= 0.0 {
            return 0.0;
        }
        let mut len = reach / c;
        if s > 0.0 {
            len = len.min(2.0 * SLAB_EXTENT / s);
        }
        // Resolve the profile (scale 1/c) and the cutoff (scale R/s).
        let panel = (0.01 / c).min(if s > 0.0 { 0.1 * SLAB_EXTENT / s } else { f64::INFINITY });
        c * radial(len, panel, alpha, slope * c, |r| {
            chi(r * s / SLAB_EXTENT) * (p.value(x1 - r * c) - p.value(x1 + r * c))
        })
    };
    Ok(2.0 * adaptive(angular, 0.0, PI / 2.0, 1e-12, 1e-9)?)
}

/// Ratio of the 2D real-space slab velocity to the 1D one at `x1`; equals
/// `c'_{2,α}` up to the transverse cutoff and quadrature error.
pub fn real_space_c_prime(rho0: &DensityField, alpha: f64, x1: f64) -> Result<f64> {
    check_alpha(alpha)?;
    let p = Profile { rho: rho0.interpolant() };
    let one = velocity_1d(&p, alpha, x1);
    if one.abs() < 1e-12 {
        return Err(invalid(format!("1D velocity vanishes at x1 = {x1}")));
    }
    Ok(velocity_2d_real(&p, alpha, x1)? / one)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlabReport {
    pub n_points: usize,
    pub alpha: f64,
    pub u2_max: f64,
    pub u1_mismatch: f64,
    pub spectral_gap: f64,
    pub c_prime: f64,
    /// Worst relative deviation of the real-space ratio from `c_prime`.
    pub c_prime_rel_error: f64,
}

/// Multiplier-level slab reduction plus the real-space `c'` cross-check.
pub fn slab_check_2d(rho0: &DensityField, alpha: f64) -> Result<SlabReport> {
    check_alpha(alpha)?;
    let rho2 = slab_extend(rho0)?;
    let (u1, u2) = velocity_2d(&rho2, alpha)?;
    let u1d = velocity_spectral(rho0, alpha)?;
    let n = rho0.grid().n_points();
    let v = u1d.values();
    let u1_mismatch = (0..n * n).map(|i| (u1.values[i] - v[i / n]).abs()).fold(0.0, f64::max);
    let c = c_prime(2, alpha)?;
    let mut rel = 0.0f64;
    for x1 in CHECK_POINTS {
        let ratio = real_space_c_prime(rho0, alpha, x1)?;
        rel = rel.max((ratio - c).abs() / c);
    }
    Ok(SlabReport {
        n_points: n,
        alpha,
        u2_max: u2.max_abs(),
        u1_mismatch,
        spectral_gap: spectral_gap_2d(&u1, &u2)?,
        c_prime: c,
        c_prime_rel_error: rel,
    })
}
