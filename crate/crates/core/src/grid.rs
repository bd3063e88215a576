//! Uniform periodic grid on the unit torus `[-1/2, 1/2)` and the spectral
//! machinery built on it.
//!
//! Fields are stored as nodal samples. Spectral coefficients are normalized
//! so that `f(x_j) = sum_k c_k exp(2 pi i k (x_j + 1/2))`, i.e. they are taken
//! relative to the left end of the period. Fourier multipliers commute with
//! translation, so the phase convention only matters for point evaluation,
//! which [`Interpolant`] handles.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Relative tolerance used when checking that a symbol is conjugate-symmetric.
pub const HERMITIAN_TOL: f64 = 1e-12;

struct Plans {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Uniform discretization of the torus of length one.
#[derive(Clone)]
pub struct PeriodicGrid {
    n: usize,
    plans: Arc<Plans>,
}

impl fmt::Debug for PeriodicGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PeriodicGrid").field("n_points", &self.n).finish()
    }
}

impl PartialEq for PeriodicGrid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
    }
}

impl PeriodicGrid {
    /// Builds a grid with `n_points` nodes. `n_points` must be even and at least 8.
    pub fn new(n_points: usize) -> Result<Self> {
        if n_points < 8 || n_points % 2 != 0 {
            return Err(Error::InvalidGrid(n_points));
        }
        let mut planner = FftPlanner::new();
        let plans = Plans {
            forward: planner.plan_fft_forward(n_points),
            inverse: planner.plan_fft_inverse(n_points),
        };
        Ok(Self {
            n: n_points,
            plans: Arc::new(plans),
        })
    }

    pub fn n_points(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.n as f64
    }

    /// Index of the Nyquist mode, `n/2`.
    pub fn nyquist(&self) -> usize {
        self.n / 2
    }

    /// Node `x_j = -1/2 + j/n`, computed as `(j - n/2)/n` so that mirrored
    /// nodes are exact negatives of each other.
    pub fn node(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) / self.n as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.node(j)).collect()
    }

    /// Index of the node mirrored through `x = 0`.
    pub fn mirror(&self, j: usize) -> usize {
        (self.n - j) % self.n
    }

    /// Signed wavenumber of FFT slot `idx`, in `{-n/2+1, ..., n/2}`.
    pub fn wavenumber(&self, idx: usize) -> i64 {
        if idx <= self.n / 2 {
            idx as i64
        } else {
            idx as i64 - self.n as i64
        }
    }

    /// Normalized forward transform of real samples. The Nyquist coefficient
    /// is forced real.
    pub fn forward(&self, values: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(values.len(), self.n);
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward_in_place(&mut buf);
        buf
    }

    /// Normalized forward transform of a complex buffer, in place.
    pub fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.plans.forward.process(buf);
        let scale = 1.0 / self.n as f64;
        for c in buf.iter_mut() {
            *c *= scale;
        }
        let nyq = self.n / 2;
        buf[nyq].im = 0.0;
    }

    /// Inverse transform of normalized coefficients, in place (no scaling).
    pub fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.plans.inverse.process(buf);
    }

    /// Real part of the inverse transform of normalized coefficients.
    pub fn inverse(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.inverse_in_place(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }

    /// Samples `f` at every node.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Result<DensityField> {
        DensityField::new(self.clone(), self.nodes().into_iter().map(f).collect())
    }

    /// Evaluates `symbol` on every FFT slot, resolving the Nyquist slot as the
    /// average of `symbol(n/2)` and `symbol(-n/2)` so a Hermitian symbol maps
    /// the real Nyquist coefficient to a real one.
    pub fn symbol_table(&self, symbol: impl Fn(i64) -> Complex64) -> Vec<Complex64> {
        let nyq = self.n / 2;
        (0..self.n)
            .map(|idx| {
                if idx == nyq {
                    let k = nyq as i64;
                    Complex64::new(0.5 * (symbol(k) + symbol(-k)).re, 0.0)
                } else {
                    symbol(self.wavenumber(idx))
                }
            })
            .collect()
    }

    /// Checks `symbol(-k) = conj(symbol(k))` for `k = 1..=n/2` and that
    /// `symbol(0)` is real.
    pub fn check_hermitian(&self, symbol: &impl Fn(i64) -> Complex64) -> Result<()> {
        let s0 = symbol(0);
        if s0.im.abs() > HERMITIAN_TOL * s0.norm().max(1.0) {
            return Err(Error::NotHermitian { k: 0, residue: s0.im.abs() });
        }
        for k in 1..=(self.n / 2) as i64 {
            let a = symbol(k);
            let b = symbol(-k);
            let residue = (a - b.conj()).norm();
            let scale = a.norm().max(b.norm()).max(1.0);
            if residue > HERMITIAN_TOL * scale || !residue.is_finite() {
                return Err(Error::NotHermitian { k, residue });
            }
        }
        Ok(())
    }

    /// Derivative symbol `2 pi i k` tabulated on FFT slots (zero at Nyquist).
    pub fn derivative_table(&self) -> Vec<Complex64> {
        self.symbol_table(|k| Complex64::new(0.0, 2.0 * PI * k as f64))
    }
}

/// Real periodic samples on a [`PeriodicGrid`] with lazily cached spectrum.
pub struct DensityField {
    grid: PeriodicGrid,
    values: Vec<f64>,
    spectrum: OnceLock<Vec<Complex64>>,
}

impl Clone for DensityField {
    fn clone(&self) -> Self {
        let spectrum = OnceLock::new();
        if let Some(s) = self.spectrum.get() {
            let _ = spectrum.set(s.clone());
        }
        Self {
            grid: self.grid.clone(),
            values: self.values.clone(),
            spectrum,
        }
    }
}

impl fmt::Debug for DensityField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityField")
            .field("n_points", &self.grid.n)
            .field("mean", &self.mean())
            .finish()
    }
}

impl DensityField {
    pub fn new(grid: PeriodicGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::LengthMismatch {
                expected: grid.n,
                got: values.len(),
            });
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(j));
        }
        Ok(Self {
            grid,
            values,
            spectrum: OnceLock::new(),
        })
    }

    /// Field with every sample equal to `value`.
    pub fn constant(grid: &PeriodicGrid, value: f64) -> Result<Self> {
        Self::new(grid.clone(), vec![value; grid.n])
    }

    /// Builds a field from normalized coefficients. The coefficients are
    /// cached as given, so they must be Hermitian.
    pub(crate) fn from_spectrum(grid: &PeriodicGrid, coeffs: Vec<Complex64>) -> Result<Self> {
        let values = grid.inverse(&coeffs);
        let field = Self::new(grid.clone(), values)?;
        let _ = field.spectrum.set(coeffs);
        Ok(field)
    }

    pub fn grid(&self) -> &PeriodicGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// Normalized spectral coefficients in FFT order.
    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum.get_or_init(|| self.grid.forward(&self.values))
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Discrete L2 norm squared, `sum f_j^2 dx`.
    pub fn l2_squared(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>() * self.grid.dx()
    }

    pub(crate) fn same_grid(&self, other: &DensityField) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(self.grid.n, other.grid.n));
        }
        Ok(())
    }

    /// Pointwise linear combination `a*self + b*other`.
    pub fn combine(&self, a: f64, other: &DensityField, b: f64) -> Result<DensityField> {
        self.same_grid(other)?;
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        DensityField::new(self.grid.clone(), values)
    }

    /// Spectral derivative via the multiplier `2 pi i k`.
    pub fn derivative(&self) -> DensityField {
        let table = self.grid.derivative_table();
        self.apply_table(&table)
    }

    /// Applies a Fourier multiplier after checking that it is Hermitian.
    pub fn apply_multiplier(&self, symbol: impl Fn(i64) -> Complex64) -> Result<DensityField> {
        self.grid.check_hermitian(&symbol)?;
        let table = self.grid.symbol_table(symbol);
        Ok(self.apply_table(&table))
    }

    /// Applies a pre-tabulated Hermitian symbol (see [`PeriodicGrid::symbol_table`]).
    pub(crate) fn apply_table(&self, table: &[Complex64]) -> DensityField {
        let coeffs: Vec<Complex64> = self
            .spectrum()
            .iter()
            .zip(table)
            .map(|(c, s)| c * s)
            .collect();
        DensityField::from_spectrum(&self.grid, coeffs)
            .expect("Hermitian multiplier of a finite field is finite")
    }

    /// Evaluates the trigonometric interpolant at an arbitrary point.
    pub fn interpolate(&self, x: f64) -> f64 {
        Interpolant::new(self).value(x)
    }

    pub fn interpolant(&self) -> Interpolant {
        Interpolant::new(self)
    }
}

/// Point evaluator for the trigonometric interpolant of a field, by direct
/// mode summation. Trailing modes whose combined magnitude is below roundoff
/// are dropped.
#[derive(Clone, Debug)]
pub struct Interpolant {
    mean: f64,
    /// `2 c_k` for `k = 1..bandwidth`, excluding Nyquist.
    modes: Vec<Complex64>,
    /// Real Nyquist coefficient and its index, if retained.
    nyquist: Option<(usize, f64)>,
}

impl Interpolant {
    pub fn new(field: &DensityField) -> Self {
        let spec = field.spectrum();
        let nyq = field.grid.nyquist();
        let scale = spec.iter().fold(0.0f64, |m, c| m.max(c.norm()));
        let floor = 1e-17 * scale;

        let nyq_coef = spec[nyq].re;
        let nyquist = (nyq_coef.abs() > floor).then_some((nyq, nyq_coef));

        let mut last = 0;
        let mut dropped = 0.0;
        for k in (1..nyq).rev() {
            dropped += 2.0 * spec[k].norm();
            if dropped > floor {
                last = k;
                break;
            }
        }
        if nyquist.is_some() {
            last = nyq - 1;
        }
        let modes = (1..=last).map(|k| 2.0 * spec[k]).collect();
        Self {
            mean: spec[0].re,
            modes,
            nyquist,
        }
    }

    /// Highest retained wavenumber.
    pub fn bandwidth(&self) -> usize {
        match self.nyquist {
            Some((k, _)) => k,
            None => self.modes.len(),
        }
    }

    fn phase(x: f64) -> f64 {
        2.0 * PI * (x + 0.5)
    }

    pub fn value(&self, x: f64) -> f64 {
        let theta = Self::phase(x);
        let step = Complex64::from_polar(1.0, theta);
        let mut z = step;
        let mut acc = self.mean;
        for (i, c) in self.modes.iter().enumerate() {
            let k = i + 1;
            if k % 64 == 0 {
                z = Complex64::from_polar(1.0, theta * k as f64);
            }
            acc += (c * z).re;
            z *= step;
        }
        if let Some((k, c)) = self.nyquist {
            acc += c * (theta * k as f64).cos();
        }
        acc
    }

    /// Value and the first `N-1` derivatives at `x`.
    pub fn derivatives<const N: usize>(&self, x: f64) -> [f64; N] {
        let theta = Self::phase(x);
        let step = Complex64::from_polar(1.0, theta);
        let mut z = step;
        let mut out = [0.0; N];
        out[0] = self.mean;
        for (i, c) in self.modes.iter().enumerate() {
            let k = i + 1;
            if k % 64 == 0 {
                z = Complex64::from_polar(1.0, theta * k as f64);
            }
            let w = Complex64::new(0.0, 2.0 * PI * k as f64);
            let mut term = c * z;
            for slot in out.iter_mut() {
                *slot += term.re;
                term *= w;
            }
            z *= step;
        }
        if let Some((k, c)) = self.nyquist {
            let phase = theta * k as f64;
            let w = 2.0 * PI * k as f64;
            let mut amp = c;
            for (d, slot) in out.iter_mut().enumerate() {
                *slot += amp * (phase + d as f64 * PI / 2.0).cos();
                amp *= w;
            }
        }
        out
    }

    /// Antiderivative `int_0^x f`, exact for the interpolant.
    pub fn integral_from_zero(&self, x: f64) -> f64 {
        let a = Self::phase(0.0);
        let b = Self::phase(x);
        let mut acc = self.mean * x;
        for (i, c) in self.modes.iter().enumerate() {
            let k = (i + 1) as f64;
            let kernel = (Complex64::from_polar(1.0, k * b) - Complex64::from_polar(1.0, k * a))
                / Complex64::new(0.0, 2.0 * PI * k);
            acc += (c * kernel).re;
        }
        if let Some((k, c)) = self.nyquist {
            let k = k as f64;
            acc += c * ((k * b).sin() - (k * a).sin()) / (2.0 * PI * k);
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(n: usize) -> PeriodicGrid {
        PeriodicGrid::new(n).unwrap()
    }

    #[test]
    fn eight_point_nodes() {
        let g = grid(8);
        let expected = [-0.5, -0.375, -0.25, -0.125, 0.0, 0.125, 0.25, 0.375];
        assert_eq!(g.nodes(), expected);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(matches!(PeriodicGrid::new(7), Err(Error::InvalidGrid(7))));
        assert!(PeriodicGrid::new(6).is_err());
        assert!(PeriodicGrid::new(0).is_err());
    }

    #[test]
    fn spacing_is_exact() {
        assert_eq!(grid(512).dx(), 1.0 / 512.0);
    }

    #[test]
    fn derivative_of_sine_and_constant() {
        let g = grid(64);
        let f = g.sample(|x| (2.0 * PI * x).sin()).unwrap();
        let d = f.derivative();
        for (x, v) in g.nodes().iter().zip(d.values()) {
            assert!((v - 2.0 * PI * (2.0 * PI * x).cos()).abs() < 1e-10);
        }
        let c = DensityField::constant(&g, 3.5).unwrap().derivative();
        assert!(c.max_abs() < 1e-14);

        let f = g.sample(|x| 1.0 - (2.0 * PI * x).cos()).unwrap();
        let d = f.derivative();
        for (x, v) in g.nodes().iter().zip(d.values()) {
            assert!((v - 2.0 * PI * (2.0 * PI * x).sin()).abs() < 1e-10);
        }
    }

    #[test]
    fn multiplier_examples() {
        let g = grid(32);
        let f = g.sample(|x| (2.0 * PI * x).cos()).unwrap();
        let id = f.apply_multiplier(|_| Complex64::new(1.0, 0.0)).unwrap();
        for (a, b) in id.values().iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-14);
        }
        let d = f
            .apply_multiplier(|k| Complex64::new(0.0, 2.0 * PI * k as f64))
            .unwrap();
        for (x, v) in g.nodes().iter().zip(d.values()) {
            assert!((v + 2.0 * PI * (2.0 * PI * x).sin()).abs() < 1e-12);
        }
        let l = f
            .apply_multiplier(|k| Complex64::new((2.0 * PI * k.abs() as f64).powf(1.0), 0.0))
            .unwrap();
        for (x, v) in g.nodes().iter().zip(l.values()) {
            assert!((v - 2.0 * PI * (2.0 * PI * x).cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn non_hermitian_symbol_is_rejected() {
        let g = grid(16);
        let f = g.sample(|x| x.cos()).unwrap();
        let err = f.apply_multiplier(|k| Complex64::new(0.0, 1.0 + k as f64 * 0.0));
        assert!(matches!(err, Err(Error::NotHermitian { .. })));
        let err = f.apply_multiplier(|k| Complex64::new(k as f64, 0.0));
        assert!(matches!(err, Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn interpolation_hits_nodes_and_resolved_modes() {
        let g = grid(16);
        let f = g.sample(|x| (2.0 * PI * x).cos()).unwrap();
        assert!((f.interpolate(1.0 / 3.0) + 0.5).abs() < 1e-10);

        let h = g
            .sample(|x| (3.0 * x).sin().exp() + 0.1 * (16.0 * PI * x).cos())
            .unwrap();
        let it = h.interpolant();
        for (j, v) in h.values().iter().enumerate() {
            assert!((it.value(g.node(j)) - v).abs() < 1e-12, "node {j}");
        }
    }

    #[test]
    fn interpolant_derivatives_and_integral() {
        let g = grid(32);
        let f = g.sample(|x| (2.0 * PI * x).sin() + 0.5 * (4.0 * PI * x).cos()).unwrap();
        let it = f.interpolant();
        let x = 0.137;
        let [v, d1, d2] = it.derivatives::<3>(x);
        let w = 2.0 * PI;
        assert!((v - ((w * x).sin() + 0.5 * (2.0 * w * x).cos())).abs() < 1e-12);
        assert!((d1 - (w * (w * x).cos() - w * (2.0 * w * x).sin())).abs() < 1e-10);
        assert!((d2 - (-w * w * (w * x).sin() - 2.0 * w * w * (2.0 * w * x).cos())).abs() < 1e-9);
        let exact = (1.0 - (w * x).cos()) / w + 0.5 * (2.0 * w * x).sin() / (2.0 * w);
        assert!((it.integral_from_zero(x) - exact).abs() < 1e-13);
    }

    #[test]
    fn mean_is_zero_mode() {
        let g = grid(64);
        let f = g.sample(|x| 2.0 + (2.0 * PI * x).cos() + (6.0 * PI * x).sin()).unwrap();
        assert!((f.spectrum()[0].re - f.mean()).abs() < 1e-14);
        assert!((f.mean() - 2.0).abs() < 1e-14);
    }
}
