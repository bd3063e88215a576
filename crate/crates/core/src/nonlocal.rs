//! Nonlocal operators on the torus: the fractional Laplacian `Λ^α` and the
//! velocity `u = HΛ^{α-1}ρ`, each available through its Fourier symbol and
//! through real-space singular-integral quadrature.
//!
//! The real-space kernels are periodized by summing `|l| <= L` images
//! explicitly and adding the Taylor expansion of the remaining images in
//! powers of `z/l`, with Hurwitz-type sums `sum_{l>L} l^{-s}` taken from an
//! Euler-Maclaurin expansion. The first neglected order is reported as
//! `tail_bound` with every kernel-path value.
//!
//! Sign convention: `H` has symbol `-i sgn(k)`, so `H cos = sin` and for
//! `α = 1`, `ρ = 1 - cos(2πx)` gives `u = -sin(2πx)`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{invalid, Error, Result};
use crate::grid::{DensityField, Interpolant};
use crate::quadrature::{self, gl8};

pub const DEFAULT_KERNEL_TRUNCATION: usize = 64;
pub const DEFAULT_QUADRATURE_POINTS: usize = 64;
pub const MIN_KERNEL_TRUNCATION: usize = 8;

/// Relative agreement required between calibrations at `L` and `2L`.
const CALIBRATION_TOL: f64 = 1e-6;

pub fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 2.0) {
        return Err(invalid(format!("alpha must lie in (0, 2), got {alpha}")));
    }
    Ok(())
}

/// Kernel normalizations and quadrature resolution for the real-space paths.
#[derive(Clone, Debug, PartialEq)]
pub struct OperatorParams {
    pub alpha: f64,
    /// Normalization of the `Λ^α` kernel `|x-y|^{-1-α}`.
    pub c_alpha: f64,
    /// Normalization of the velocity kernel `sgn(x-y)^{-1}|x-y|^{-α}`.
    pub c_velocity: f64,
    /// Number of periodic images summed explicitly on each side.
    pub kernel_truncation: usize,
    /// Quadrature panels per unit length.
    pub quadrature_points: usize,
}

impl OperatorParams {
    /// Calibrated parameters with the default truncation and resolution.
    pub fn new(alpha: f64) -> Result<Self> {
        Self::with_resolution(alpha, DEFAULT_KERNEL_TRUNCATION, DEFAULT_QUADRATURE_POINTS)
    }

    pub fn with_resolution(alpha: f64, kernel_truncation: usize, quadrature_points: usize) -> Result<Self> {
        check_alpha(alpha)?;
        if kernel_truncation < MIN_KERNEL_TRUNCATION {
            return Err(invalid(format!(
                "kernel truncation must be at least {MIN_KERNEL_TRUNCATION}, got {kernel_truncation}"
            )));
        }
        if quadrature_points < 2 {
            return Err(invalid("need at least two quadrature panels per unit length"));
        }
        let mut params = Self {
            alpha,
            c_alpha: 1.0,
            c_velocity: 1.0,
            kernel_truncation,
            quadrature_points,
        };
        params.c_alpha = calibrate_c_alpha(alpha, &params)?;
        params.c_velocity = calibrate_c_velocity(alpha, &params)?;
        Ok(params)
    }
}

/// A real-space operator value together with the bound on the neglected
/// part of the periodic image sum.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelValue {
    pub value: f64,
    pub tail_bound: f64,
}

/// Symbol of `Λ^α` on the unit torus, `(2π|k|)^α`.
pub fn laplacian_symbol(alpha: f64) -> impl Fn(i64) -> Complex64 {
    move |k| {
        if k == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new((2.0 * PI * k.unsigned_abs() as f64).powf(alpha), 0.0)
        }
    }
}

/// Symbol of `HΛ^{α-1}`, `-i sgn(k) (2π|k|)^{α-1}`, zero at `k = 0`.
pub fn velocity_symbol(alpha: f64) -> impl Fn(i64) -> Complex64 {
    move |k| {
        if k == 0 {
            Complex64::new(0.0, 0.0)
        } else {
            let mag = (2.0 * PI * k.unsigned_abs() as f64).powf(alpha - 1.0);
            Complex64::new(0.0, -(k.signum() as f64) * mag)
        }
    }
}

pub fn fractional_laplacian_spectral(f: &DensityField, alpha: f64) -> Result<DensityField> {
    check_alpha(alpha)?;
    let table = f.grid().symbol_table(laplacian_symbol(alpha));
    Ok(f.apply_table(&table))
}

pub fn velocity_spectral(rho: &DensityField, alpha: f64) -> Result<DensityField> {
    check_alpha(alpha)?;
    let table = rho.grid().symbol_table(velocity_symbol(alpha));
    Ok(rho.apply_table(&table))
}

/// `sum_{l > L} l^{-s}` for `s > 1`, by Euler-Maclaurin from `a = L + 1`.
pub fn zeta_tail(l: usize, s: f64) -> f64 {
    debug_assert!(s > 1.0);
    let a = (l + 1) as f64;
    let p = a.powf(-s);
    p * a / (s - 1.0) + 0.5 * p + s * p / (12.0 * a)
        - s * (s + 1.0) * (s + 2.0) * p / (720.0 * a.powi(3))
        + s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * p / (30240.0 * a.powi(5))
}

/// `s (s+1) ... (s+j-1) / j!`, the coefficient of `t^j` in `(1-t)^{-s}`.
fn rising_binomial(s: f64, j: usize) -> f64 {
    (0..j).fold(1.0, |acc, i| acc * (s + i as f64) / (i + 1) as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Parity {
    /// `sum_l |z+l|^{-1-α}`.
    Even,
    /// `sum_l sgn(z+l) |z+l|^{-α}`, summed in `±l` pairs.
    Odd,
}

/// Periodized kernel on `z in (0, 1/2]`: explicit images `1..=L` plus a
/// polynomial in `z` standing in for the rest.
#[derive(Clone, Debug)]
struct PeriodizedKernel {
    parity: Parity,
    /// Exponent of the singular image, `|z|^{-sigma}`.
    sigma: f64,
    images: usize,
    /// `(power of z, coefficient)` of the tail polynomial.
    tail: Vec<(i32, f64)>,
    /// Magnitude of the first neglected tail term at `z = 1/2`.
    remainder: f64,
}

impl PeriodizedKernel {
    fn new(alpha: f64, images: usize, parity: Parity) -> Self {
        let sigma = match parity {
            Parity::Even => 1.0 + alpha,
            Parity::Odd => alpha,
        };
        let (powers, next): (Vec<usize>, usize) = match parity {
            Parity::Even => (vec![0, 2, 4, 6], 8),
            Parity::Odd => (vec![1, 3, 5], 7),
        };
        let sign = match parity {
            Parity::Even => 2.0,
            Parity::Odd => -2.0,
        };
        let tail = powers
            .iter()
            .map(|&j| {
                (
                    j as i32,
                    sign * rising_binomial(sigma, j) * zeta_tail(images, sigma + j as f64),
                )
            })
            .collect();
        let remainder = 2.0
            * 2.0
            * rising_binomial(sigma, next)
            * 0.5f64.powi(next as i32)
            * zeta_tail(images, sigma + next as f64);
        Self {
            parity,
            sigma,
            images,
            tail,
            remainder,
        }
    }

    /// Kernel without the singular `z^{-sigma}` image.
    fn regular(&self, z: f64) -> f64 {
        let s = self.sigma;
        let mut acc = 0.0;
        for l in (1..=self.images).rev() {
            let l = l as f64;
            acc += match self.parity {
                Parity::Even => (l + z).powf(-s) + (l - z).powf(-s),
                Parity::Odd => (l + z).powf(-s) - (l - z).powf(-s),
            };
        }
        for &(p, c) in &self.tail {
            acc += c * z.powi(p);
        }
        acc
    }

    fn full(&self, z: f64) -> f64 {
        z.powf(-self.sigma) + self.regular(z)
    }
}

/// Quadrature nodes and kernel-weighted weights on `(0, 1/2]`, reusable
/// across evaluation points. The interval `[0, taylor_radius]` is handled by
/// the caller's local expansion.
#[derive(Clone, Debug)]
struct KernelQuadrature {
    kernel: PeriodizedKernel,
    nodes: Vec<(f64, f64)>,
    taylor_radius: f64,
    /// Regular part of the kernel at the Taylor cell midpoint.
    regular_at_origin: f64,
}

impl KernelQuadrature {
    fn new(params: &OperatorParams, parity: Parity, bandwidth: usize) -> Self {
        let kernel = PeriodizedKernel::new(params.alpha, params.kernel_truncation, parity);
        let panels = (params.quadrature_points as f64 * 0.5).ceil().max(1.0) as usize;
        let h = 0.5 / panels as f64;
        let taylor_radius = (0.25 * h).min(0.02 / (2.0 * PI * bandwidth.max(1) as f64));
        let rule = gl8();
        let mut nodes = Vec::new();
        let mut hi = h;
        while hi > taylor_radius {
            let lo = (0.5 * hi).max(taylor_radius);
            for (z, w) in rule.mapped(lo, hi) {
                nodes.push((z, w * kernel.full(z)));
            }
            hi = lo;
        }
        for p in 1..panels {
            let lo = p as f64 * h;
            for (z, w) in rule.mapped(lo, lo + h) {
                nodes.push((z, w * kernel.full(z)));
            }
        }
        let regular_at_origin = kernel.regular(0.5 * taylor_radius);
        Self {
            kernel,
            nodes,
            taylor_radius: hi,
            regular_at_origin,
        }
    }

    /// `int_0^{1/2} N(z) K(z) dz` where `N(z) ≈ a z^p + b z^{p+2}` near zero.
    fn integrate(&self, numerator: impl Fn(f64) -> f64, p: i32, a: f64, b: f64) -> f64 {
        let eps = self.taylor_radius;
        let s = self.kernel.sigma;
        let pf = p as f64;
        let inner = a * eps.powf(pf + 1.0 - s) / (pf + 1.0 - s)
            + b * eps.powf(pf + 3.0 - s) / (pf + 3.0 - s)
            + a * self.regular_at_origin * eps.powf(pf + 1.0) / (pf + 1.0);
        let outer: f64 = self.nodes.iter().map(|&(z, w)| w * numerator(z)).sum();
        inner + outer
    }

    /// Bound on the neglected image tail for a numerator bounded by `scale`.
    fn tail_bound(&self, scale: f64) -> f64 {
        0.5 * scale * self.kernel.remainder
    }
}

/// Evaluates the `Λ^α` and velocity kernel paths at many points of one field.
pub struct KernelEvaluator<'a> {
    params: &'a OperatorParams,
    interp: Interpolant,
    even: KernelQuadrature,
    odd: KernelQuadrature,
    oscillation: f64,
}

impl<'a> KernelEvaluator<'a> {
    pub fn new(field: &DensityField, params: &'a OperatorParams) -> Self {
        let interp = field.interpolant();
        let bw = interp.bandwidth();
        Self {
            params,
            even: KernelQuadrature::new(params, Parity::Even, bw),
            odd: KernelQuadrature::new(params, Parity::Odd, bw),
            oscillation: field.max() - field.min(),
            interp,
        }
    }

    /// `Λ^α f(x) = c_α int_0^{1/2} (2f(x) - f(x+z) - f(x-z)) K_even(z) dz`.
    pub fn fractional_laplacian(&self, x: f64) -> KernelValue {
        let [f0, _, f2, _, f4] = self.interp.derivatives::<5>(x);
        let it = &self.interp;
        let raw = self.even.integrate(
            |z| 2.0 * f0 - it.value(x + z) - it.value(x - z),
            2,
            -f2,
            -f4 / 12.0,
        );
        KernelValue {
            value: self.params.c_alpha * raw,
            tail_bound: self.params.c_alpha * self.even.tail_bound(2.0 * self.oscillation),
        }
    }

    /// `u(x) = -c_u int_0^{1/2} (ρ(x+z) - ρ(x-z)) K_odd(z) dz`.
    pub fn velocity(&self, x: f64) -> KernelValue {
        let [_, r1, _, r3] = self.interp.derivatives::<4>(x);
        let it = &self.interp;
        let raw = self
            .odd
            .integrate(|z| it.value(x + z) - it.value(x - z), 1, 2.0 * r1, r3 / 3.0);
        KernelValue {
            value: -self.params.c_velocity * raw,
            tail_bound: self.params.c_velocity * self.odd.tail_bound(2.0 * self.oscillation),
        }
    }
}

/// Real-space `Λ^α f(x)` by periodized principal-value quadrature.
pub fn fractional_laplacian_kernel(f: &DensityField, params: &OperatorParams, x: f64) -> KernelValue {
    KernelEvaluator::new(f, params).fractional_laplacian(x)
}

/// Real-space `u(x)` from the singular integral of `ρ(y) - ρ(x)`.
pub fn velocity_kernel(rho: &DensityField, params: &OperatorParams, x: f64) -> KernelValue {
    KernelEvaluator::new(rho, params).velocity(x)
}

/// Unnormalized kernel quadrature of `cos(2πx)`: `Λ^α` at `x = 0`, and the
/// velocity at `x = 1/4`.
fn unit_cosine_responses(alpha: f64, images: usize, quadrature_points: usize) -> (f64, f64) {
    let unit = OperatorParams {
        alpha,
        c_alpha: 1.0,
        c_velocity: 1.0,
        kernel_truncation: images,
        quadrature_points,
    };
    let w = 2.0 * PI;
    let even = KernelQuadrature::new(&unit, Parity::Even, 1);
    let odd = KernelQuadrature::new(&unit, Parity::Odd, 1);
    let lap = even.integrate(|z| 2.0 - 2.0 * (w * z).cos(), 2, w * w, -w.powi(4) / 12.0);
    // cos(2π(1/4 ± z)) = ∓ sin(2πz)
    let vel = odd.integrate(|z| -2.0 * (w * z).sin(), 1, -2.0 * w, w.powi(3) / 3.0);
    (lap, -vel)
}

fn calibrate(alpha: f64, params: &OperatorParams, target: f64, pick: fn((f64, f64)) -> f64) -> Result<f64> {
    check_alpha(alpha)?;
    let l = params.kernel_truncation;
    let coarse = pick(unit_cosine_responses(alpha, l, params.quadrature_points));
    let fine = pick(unit_cosine_responses(alpha, 2 * l, params.quadrature_points));
    let rel = ((coarse - fine) / fine).abs();
    if !(rel <= CALIBRATION_TOL) || fine <= 0.0 {
        return Err(Error::Quadrature(format!(
            "kernel normalization for alpha = {alpha} moved by {rel:.3e} between L = {l} and L = {}",
            2 * l
        )));
    }
    Ok(target / coarse)
}

/// Normalization `c_α` of the `Λ^α` kernel, fixed so the kernel path applied
/// to `cos(2πx)` reproduces the symbol `(2π)^α` at `x = 0`.
pub fn calibrate_c_alpha(alpha: f64, params: &OperatorParams) -> Result<f64> {
    calibrate(alpha, params, (2.0 * PI).powf(alpha), |r| r.0)
}

/// Normalization of the velocity kernel, fixed so the kernel path applied to
/// `cos(2πx)` reproduces `(2π)^{α-1} sin(2πx)` at `x = 1/4`. It equals
/// `c_α / α`.
pub fn calibrate_c_velocity(alpha: f64, params: &OperatorParams) -> Result<f64> {
    calibrate(alpha, params, (2.0 * PI).powf(alpha - 1.0), |r| r.1)
}

/// Closed form `α 2^{α-1} Γ((1+α)/2) / (√π Γ(1-α/2))` of `c_α`.
pub fn c_alpha_closed_form(alpha: f64) -> f64 {
    use statrs::function::gamma::gamma;
    alpha * 2f64.powf(alpha - 1.0) * gamma(0.5 * (1.0 + alpha)) / (PI.sqrt() * gamma(1.0 - 0.5 * alpha))
}

/// Split of `u(x)` for an even density, `x in [0, 1/2]`. All parts include
/// the velocity normalization, so `total = inner + aligned + opposing`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VelocityDecomposition {
    /// Integral over `y in [0, x]`.
    pub inner: f64,
    /// Integral over the image cells `[l+x, l+1-x]`, `l >= 0`, where a
    /// monotone density satisfies `ρ(y) >= ρ(x)`.
    pub aligned: f64,
    /// Integral over the image cells `[l-x, l+x]`, `l >= 1`, where
    /// `ρ(y) <= ρ(x)`.
    pub opposing: f64,
    pub total: f64,
    /// Bound on the neglected image tail.
    pub tail_bound: f64,
}

/// Largest `|ρ(x_j) - ρ(-x_j)|` over the grid.
pub fn evenness_residue(rho: &DensityField) -> f64 {
    let g = rho.grid();
    let v = rho.values();
    (0..g.n_points())
        .map(|j| (v[j] - v[g.mirror(j)]).abs())
        .fold(0.0, f64::max)
}

/// Integrates a function of the distance `s` from a singular endpoint over
/// `[0, len]`: graded cells on the first panel, uniform panels after it.
fn singular_left(len: f64, panel: f64, eps: f64, mut g: impl FnMut(f64) -> f64, inner: impl FnOnce(f64) -> f64) -> f64 {
    if len <= 0.0 {
        return 0.0;
    }
    let first = panel.min(len);
    let head = quadrature::graded(first, eps.min(first * 1e-3), &mut g, inner);
    let rest = len - first;
    if rest <= 0.0 {
        return head;
    }
    let panels = (rest / panel).ceil().max(1.0) as usize;
    head + quadrature::composite(first, len, panels, g)
}

/// Splits the velocity of an even density at `x` into the inner, aligned and
/// opposing parts (see [`VelocityDecomposition`]).
pub fn decompose_velocity(rho: &DensityField, params: &OperatorParams, x: f64) -> Result<VelocityDecomposition> {
    if !(0.0..=0.5).contains(&x) {
        return Err(invalid(format!("decomposition point must lie in [0, 1/2], got {x}")));
    }
    let scale = rho.max_abs().max(1.0);
    let residue = evenness_residue(rho);
    if residue > 1e-8 * scale {
        return Err(Error::Precondition(format!(
            "density is not even (residue {residue:.3e})"
        )));
    }
    let alpha = params.alpha;
    let c = params.c_velocity;
    if x == 0.0 {
        return Ok(VelocityDecomposition {
            inner: 0.0,
            aligned: 0.0,
            opposing: 0.0,
            total: 0.0,
            tail_bound: 0.0,
        });
    }
    let it = rho.interpolant();
    let [rx, r1, r2] = it.derivatives::<3>(x);
    let diff = |y: f64| it.value(y) - rx;
    let kern = |y: f64| (x + y).powf(-alpha) - (y - x).abs().powf(-alpha) * (y - x).signum();
    let panel = 1.0 / params.quadrature_points as f64;
    let bw = it.bandwidth().max(1) as f64;
    let eps = (0.02 / (2.0 * PI * bw)).min(0.25 * panel);
    let powint = |e: f64, p: f64| e.powf(p) / p;

    // Inner part, s = x - y.
    let inner = singular_left(
        x,
        panel,
        eps,
        |s| diff(x - s) * ((2.0 * x - s).powf(-alpha) + s.powf(-alpha)),
        |e| {
            -r1 * powint(e, 2.0 - alpha) + 0.5 * r2 * powint(e, 3.0 - alpha)
                - r1 * (2.0 * x).powf(-alpha) * e * e / 2.0
        },
    );

    // Aligned l = 0 cell [x, 1-x], s = y - x.
    let mut aligned = singular_left(
        1.0 - 2.0 * x,
        panel,
        eps,
        |s| diff(x + s) * ((2.0 * x + s).powf(-alpha) - s.powf(-alpha)),
        |e| {
            -(r1 * powint(e, 2.0 - alpha) + 0.5 * r2 * powint(e, 3.0 - alpha))
                + r1 * (2.0 * x).powf(-alpha) * e * e / 2.0
        },
    );

    // Opposing l = 1 cell [1-x, 1+x]; singular only when x -> 1/2.
    let mut opposing = singular_left(
        2.0 * x,
        panel,
        eps,
        |s| {
            let y = 1.0 - x + s;
            diff(y) * kern(y)
        },
        |e| {
            let y = 1.0 - x + 0.5 * e;
            let k = kern(y);
            if k.is_finite() {
                diff(y) * k * e
            } else {
                0.0
            }
        },
    );

    // Remaining explicit images reuse cached density samples.
    let rule = gl8();
    let cells = |lo: f64, hi: f64| -> Vec<(f64, f64, f64)> {
        if hi <= lo {
            return Vec::new();
        }
        let panels = ((hi - lo) / panel).ceil().max(1.0) as usize;
        let h = (hi - lo) / panels as f64;
        (0..panels)
            .flat_map(|p| rule.mapped(lo + p as f64 * h, lo + (p + 1) as f64 * h).collect::<Vec<_>>())
            .map(|(w, wt)| (w, wt, diff(w)))
            .collect()
    };
    let aligned_cells = cells(x, 1.0 - x);
    let opposing_cells = cells(-x, x);
    let images = params.kernel_truncation;
    for l in 1..=images {
        let lf = l as f64;
        aligned += aligned_cells
            .iter()
            .map(|&(w, wt, d)| wt * d * kern(lf + w))
            .sum::<f64>();
        if l >= 2 {
            opposing += opposing_cells
                .iter()
                .map(|&(w, wt, d)| wt * d * kern(lf + w))
                .sum::<f64>();
        }
    }

    // Images l > L: expand (l+w+x)^{-α} - (l+w-x)^{-α} in powers of 1/l.
    let tail = |cells: &[(f64, f64, f64)], order: usize| -> f64 {
        let moment: f64 = cells
            .iter()
            .map(|&(w, wt, d)| wt * d * ((w + x).powi(order as i32) - (w - x).powi(order as i32)))
            .sum();
        let sign = if order % 2 == 0 { 1.0 } else { -1.0 };
        sign * rising_binomial(alpha, order) * zeta_tail(images, alpha + order as f64) * moment
    };
    for order in 1..=8 {
        aligned += tail(&aligned_cells, order);
        opposing += tail(&opposing_cells, order);
    }
    let tail_bound = c * (tail(&aligned_cells, 9).abs() + tail(&opposing_cells, 9).abs()) * 2.0;

    let (inner, aligned, opposing) = (c * inner, c * aligned, c * opposing);
    Ok(VelocityDecomposition {
        inner,
        aligned,
        opposing,
        total: inner + aligned + opposing,
        tail_bound,
    })
}

/// Value of the image sum `sum_l |x-y-l|^{-1-α} - |x+y-l|^{-1-α}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSum {
    pub value: f64,
    /// Neglected-tail bound plus a roundoff allowance for the explicit sum.
    pub tail_bound: f64,
    /// `x = y`: the `l = 0` term diverges and `value` is `+inf`.
    pub singular: bool,
}

/// Image-difference sum for `x, y in [0, 1/2]`, explicit over `|l| <= images`
/// with the remainder expanded in `1/l`.
pub fn kernel_sum_s(x: f64, y: f64, alpha: f64, images: usize) -> Result<KernelSum> {
    if !(alpha > 0.0) {
        return Err(invalid(format!("alpha must be positive, got {alpha}")));
    }
    if images < MIN_KERNEL_TRUNCATION {
        return Err(invalid(format!("need at least {MIN_KERNEL_TRUNCATION} images, got {images}")));
    }
    for v in [x, y] {
        if !(0.0..=0.5).contains(&v) {
            return Err(invalid(format!("arguments must lie in [0, 1/2], got {v}")));
        }
    }
    if y == 0.0 {
        return Ok(KernelSum {
            value: 0.0,
            tail_bound: 0.0,
            singular: false,
        });
    }
    if x == y {
        return Ok(KernelSum {
            value: f64::INFINITY,
            tail_bound: 0.0,
            singular: true,
        });
    }
    let s = 1.0 + alpha;
    let a = x - y;
    let b = x + y;
    let mut value = 0.0;
    let mut magnitude = 0.0;
    for l in (-(images as i64)..=images as i64).rev() {
        let lf = l as f64;
        let p = (a - lf).abs().powf(-s);
        let q = (b - lf).abs().powf(-s);
        value += p - q;
        magnitude += p + q;
    }
    let mut tail = 0.0;
    for j in [2usize, 4, 6, 8] {
        tail += 2.0 * rising_binomial(s, j) * (a.powi(j as i32) - b.powi(j as i32)) * zeta_tail(images, s + j as f64);
    }
    let next = 2.0 * rising_binomial(s, 10) * (a.powi(10) - b.powi(10)).abs() * zeta_tail(images, s + 10.0);
    Ok(KernelSum {
        value: value + tail,
        tail_bound: 2.0 * next + 8.0 * f64::EPSILON * (magnitude + tail.abs()),
        singular: false,
    })
}

/// Constant `2^{α+1}(1+2α)` bounding the opposing image sum by `C x`.
pub fn compute_c(alpha: f64) -> f64 {
    2f64.powf(alpha + 1.0) * (1.0 + 2.0 * alpha)
}

/// Radius `min{1/4, (1/(3C))^{1/(1+α)}}` on which the velocity is nonpositive.
pub fn compute_delta(alpha: f64) -> f64 {
    let c = compute_c(alpha);
    0.25f64.min((1.0 / (3.0 * c)).powf(1.0 / (1.0 + alpha)))
}

/// Rate `A = α m / (4 ρ_max)` of the linear velocity bound `u <= -A x`.
pub fn compute_a(alpha: f64, m: f64, rho_max: f64) -> Result<f64> {
    if !(m > 0.0) || !(rho_max > 0.0) {
        return Err(invalid(format!(
            "mass and maximum density must be positive (m = {m}, rho_max = {rho_max})"
        )));
    }
    if m > rho_max * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!(
            "mass {m} exceeds the maximum density {rho_max} on a unit torus"
        )));
    }
    Ok(alpha * m / (4.0 * rho_max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::PeriodicGrid;

    fn cccf(n: usize) -> DensityField {
        PeriodicGrid::new(n)
            .unwrap()
            .sample(|x| 1.0 - (2.0 * PI * x).cos())
            .unwrap()
    }

    #[test]
    fn zeta_tail_matches_direct_sum() {
        for &s in &[1.3, 2.0, 2.7, 5.5] {
            let direct: f64 = (65..2_000_000u64).map(|l| (l as f64).powf(-s)).sum::<f64>()
                + (2_000_000f64 - 0.5).powf(1.0 - s) / (s - 1.0);
            let ours = zeta_tail(64, s);
            assert!(((ours - direct) / direct).abs() < 1e-9, "s = {s}: {ours} vs {direct}");
        }
    }

    #[test]
    fn spectral_laplacian_eigenfunctions() {
        let g = PeriodicGrid::new(32).unwrap();
        let f = g.sample(|x| (2.0 * PI * x).cos()).unwrap();
        let l = fractional_laplacian_spectral(&f, 1.0).unwrap();
        for (x, v) in g.nodes().iter().zip(l.values()) {
            assert!((v - 2.0 * PI * (2.0 * PI * x).cos()).abs() < 1e-12);
        }
        let f = g.sample(|x| (4.0 * PI * x).cos()).unwrap();
        let l = fractional_laplacian_spectral(&f, 0.5).unwrap();
        for (x, v) in g.nodes().iter().zip(l.values()) {
            assert!((v - (4.0 * PI).sqrt() * (4.0 * PI * x).cos()).abs() < 1e-12);
        }
        let c = DensityField::constant(&g, 4.0).unwrap();
        assert!(fractional_laplacian_spectral(&c, 1.3).unwrap().max_abs() < 1e-14);
    }

    #[test]
    fn velocity_sign_convention() {
        let rho = cccf(64);
        let u = velocity_spectral(&rho, 1.0).unwrap();
        for (x, v) in rho.grid().nodes().iter().zip(u.values()) {
            assert!((v + (2.0 * PI * x).sin()).abs() < 1e-12);
        }
        let c = DensityField::constant(rho.grid(), 2.0).unwrap();
        assert!(velocity_spectral(&c, 0.7).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn velocity_of_even_density_is_odd() {
        let g = PeriodicGrid::new(128).unwrap();
        let rho = g.sample(|x| (x * x).cos() + (6.0 * PI * x).cos().exp()).unwrap();
        let u = velocity_spectral(&rho, 0.6).unwrap();
        let v = u.values();
        for j in 0..g.n_points() {
            assert!((v[j] + v[g.mirror(j)]).abs() < 1e-10);
        }
    }

    #[test]
    fn rejects_alpha_outside_range() {
        assert!(OperatorParams::new(0.0).is_err());
        assert!(OperatorParams::new(2.0).is_err());
        assert!(velocity_spectral(&cccf(16), 2.5).is_err());
        assert!(OperatorParams::with_resolution(1.0, 4, 64).is_err());
    }

    #[test]
    fn calibrated_constants_match_closed_forms() {
        let p = OperatorParams::new(1.0).unwrap();
        assert!((p.c_alpha - 1.0 / PI).abs() < 1e-6 / PI);
        assert!((p.c_velocity - 1.0 / PI).abs() < 1e-6 / PI);
        for &alpha in &[0.3, 0.5, 1.5, 1.9] {
            let p = OperatorParams::new(alpha).unwrap();
            let exact = c_alpha_closed_form(alpha);
            assert!(((p.c_alpha - exact) / exact).abs() < 1e-6, "alpha {alpha}: {} vs {exact}", p.c_alpha);
            assert!(((p.c_velocity * alpha - exact) / exact).abs() < 1e-6);
        }
    }

    #[test]
    fn calibration_is_stable_under_truncation() {
        let coarse = OperatorParams::with_resolution(0.5, 16, 64).unwrap();
        let fine = OperatorParams::with_resolution(0.5, 64, 64).unwrap();
        assert!(((coarse.c_alpha - fine.c_alpha) / fine.c_alpha).abs() < 1e-6);
    }

    #[test]
    fn kernel_paths_annihilate_constants() {
        let p = OperatorParams::new(1.2).unwrap();
        let c = DensityField::constant(&PeriodicGrid::new(16).unwrap(), 3.0).unwrap();
        assert!(fractional_laplacian_kernel(&c, &p, 0.1).value.abs() < 1e-10);
        assert!(velocity_kernel(&c, &p, 0.1).value.abs() < 1e-10);
    }

    #[test]
    fn kernel_laplacian_examples() {
        let g = PeriodicGrid::new(32).unwrap();
        let f = g.sample(|x| (2.0 * PI * x).cos()).unwrap();
        let p = OperatorParams::new(1.0).unwrap();
        let v = fractional_laplacian_kernel(&f, &p, 0.0);
        assert!((v.value - 2.0 * PI).abs() < 1e-4);

        let rho = cccf(32);
        let p = OperatorParams::new(1.5).unwrap();
        let spectral = fractional_laplacian_spectral(&rho, 1.5).unwrap().interpolate(0.25);
        let kernel = fractional_laplacian_kernel(&rho, &p, 0.25).value;
        assert!((spectral - kernel).abs() < 1e-4, "{spectral} vs {kernel}");
    }

    #[test]
    fn kernel_velocity_examples() {
        let rho = cccf(32);
        let p = OperatorParams::new(1.0).unwrap();
        let v = velocity_kernel(&rho, &p, 0.1).value;
        assert!((v + (0.2 * PI).sin()).abs() < 1e-4);
        assert!(velocity_kernel(&rho, &p, 0.0).value.abs() < 1e-8);
    }

    #[test]
    fn kernel_sum_special_cases() {
        assert_eq!(kernel_sum_s(0.3, 0.0, 1.0, 64).unwrap().value, 0.0);
        let s = kernel_sum_s(0.2, 0.2, 1.0, 64).unwrap();
        assert!(s.singular && s.value.is_infinite());
        assert!(kernel_sum_s(0.6, 0.1, 1.0, 64).is_err());
        assert!(kernel_sum_s(0.3, 0.1, 0.0, 64).is_err());
        assert!(kernel_sum_s(0.3, 0.1, 1.0, 4).is_err());
    }

    #[test]
    fn constants_from_formulas() {
        assert_eq!(compute_c(1.0), 12.0);
        assert!((compute_c(0.5) - 4.0 * 2f64.sqrt()).abs() < 1e-14);
        assert!((compute_c(1e-12) - 2.0).abs() < 1e-10);
        assert!((compute_delta(1.0) - 1.0 / 6.0).abs() < 1e-15);
        let d = compute_delta(0.5);
        assert!((d - (1.0 / (12.0 * 2f64.sqrt())).powf(2.0 / 3.0)).abs() < 1e-15);
        for &a in &[0.01, 0.3, 1.0, 1.7, 1.99] {
            assert!(compute_delta(a) <= 0.25);
        }
        assert_eq!(compute_a(1.0, 1.0, 2.0).unwrap(), 0.125);
        assert_eq!(compute_a(0.5, 1.0, 2.0).unwrap(), 0.0625);
        assert!(compute_a(1.0, 1e-9, 2.0).unwrap() < 1e-9);
        assert!(compute_a(1.0, 0.0, 2.0).is_err());
        assert!(compute_a(1.0, 3.0, 2.0).is_err());
    }
}
