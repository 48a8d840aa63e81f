//! Periodic 1D Fourier representation: transforms, dispersion propagation,
//! pseudo-differential operators and dealiasing.
//!
//! Conventions fixed here and relied on everywhere else:
//! * unitary DFT normalisation (`1/sqrt(N)` in both directions), so the
//!   discrete Parseval identity holds without scale factors;
//! * coefficients stored in FFT order, index `i` holding wavenumber
//!   `i` for `i < N/2` and `i - N` otherwise;
//! * the Nyquist mode `-N/2` is zeroed whenever an odd-order derivative
//!   (or the anti-derivative) acts on a real-valued field, so Hermitian
//!   symmetry survives.

use std::cell::RefCell;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{CoreError, Result};

/// Uniform periodic grid on `[0, 2π)` with an even number of modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid1D {
    n_modes: usize,
}

impl Grid1D {
    pub fn new(n_modes: usize) -> Result<Self> {
        if n_modes < 8 || n_modes % 2 != 0 {
            return Err(CoreError::Argument(format!(
                "grid size must be even and >= 8, got {n_modes}"
            )));
        }
        Ok(Self { n_modes })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    /// Domain length, fixed at `2π`.
    pub fn length(&self) -> f64 {
        2.0 * PI
    }

    /// Wavenumber held at storage index `i` (FFT order).
    #[inline]
    pub fn wavenumber(&self, i: usize) -> i64 {
        let n = self.n_modes as i64;
        let i = i as i64;
        if i < n / 2 {
            i
        } else {
            i - n
        }
    }

    /// Storage index of wavenumber `k` in `{-N/2, ..., N/2-1}`.
    #[inline]
    pub fn index_of(&self, k: i64) -> usize {
        let n = self.n_modes as i64;
        debug_assert!(k >= -n / 2 && k < n / 2);
        if k >= 0 {
            k as usize
        } else {
            (k + n) as usize
        }
    }

    pub fn wavenumbers(&self) -> impl Iterator<Item = i64> + '_ {
        (0..self.n_modes).map(move |i| self.wavenumber(i))
    }

    /// Collocation nodes `x_j = 2πj/N`.
    pub fn nodes(&self) -> Vec<f64> {
        let n = self.n_modes;
        (0..n).map(|j| 2.0 * PI * j as f64 / n as f64).collect()
    }
}

/// Whether a field represents a real-valued or complex-valued function.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Reality {
    RealValued,
    ComplexValued,
}

/// Real-valued dispersion relation `ω(k)` of a self-adjoint operator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DispersionSymbol {
    /// `ω(k) = scale · k³`
    Cubic { scale: f64 },
    /// `ω(k) = scale · k²`
    Quadratic { scale: f64 },
    /// `ω ≡ 0`
    Zero,
}

impl DispersionSymbol {
    /// Default KdV symbol for `∂_t u + (1/6)∂_x³ u + u ∂_x u = 0`.
    pub fn kdv_default() -> Self {
        DispersionSymbol::Cubic { scale: -1.0 / 6.0 }
    }

    /// Schrödinger symbol `ω(k) = |k|²`.
    pub fn nls_default() -> Self {
        DispersionSymbol::Quadratic { scale: 1.0 }
    }

    #[inline]
    pub fn eval(&self, k: i64) -> f64 {
        let kf = k as f64;
        match self {
            DispersionSymbol::Cubic { scale } => scale * kf * kf * kf,
            DispersionSymbol::Quadratic { scale } => scale * kf * kf,
            DispersionSymbol::Zero => 0.0,
        }
    }

    /// Growth exponent `α` with `ω(k) ~ |k|^α`.
    pub fn order(&self) -> f64 {
        match self {
            DispersionSymbol::Cubic { .. } => 3.0,
            DispersionSymbol::Quadratic { .. } => 2.0,
            DispersionSymbol::Zero => 0.0,
        }
    }

    /// True when `ω(-k) = -ω(k)`, i.e. the linear flow maps real fields
    /// to real fields.
    pub fn is_odd(&self) -> bool {
        matches!(self, DispersionSymbol::Cubic { .. } | DispersionSymbol::Zero)
    }
}

thread_local! {
    static FFT_CACHE: RefCell<HashMap<(usize, bool), Arc<dyn Fft<f64>>>> =
        RefCell::new(HashMap::new());
}

fn run_fft(data: &mut [Complex64], inverse: bool) {
    let n = data.len();
    let fft = FFT_CACHE.with(|cache| {
        cache
            .borrow_mut()
            .entry((n, inverse))
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                if inverse {
                    planner.plan_fft_inverse(n)
                } else {
                    planner.plan_fft_forward(n)
                }
            })
            .clone()
    });
    fft.process(data);
    let scale = 1.0 / (n as f64).sqrt();
    for v in data.iter_mut() {
        *v *= scale;
    }
}

/// Unitary FFT on a raw buffer; used by the differentiation tape, whose
/// DFT nodes share the planner cache with the field transforms.
pub(crate) fn tape_fft(data: &mut [Complex64], inverse: bool) {
    run_fft(data, inverse);
}

/// Fourier coefficients of a periodic 1D field.
#[derive(Clone, Debug)]
pub struct SpectralField {
    coeffs: Vec<Complex64>,
    grid: Grid1D,
    reality: Reality,
}

impl SpectralField {
    /// Wrap raw coefficients (FFT storage order).
    pub fn from_coeffs(coeffs: Vec<Complex64>, grid: Grid1D, reality: Reality) -> Result<Self> {
        if coeffs.len() != grid.n_modes() {
            return Err(CoreError::Dimension {
                expected: grid.n_modes(),
                got: coeffs.len(),
            });
        }
        Ok(Self {
            coeffs,
            grid,
            reality,
        })
    }

    pub fn zero(grid: Grid1D, reality: Reality) -> Self {
        Self {
            coeffs: vec![Complex64::new(0.0, 0.0); grid.n_modes()],
            grid,
            reality,
        }
    }

    /// Forward unitary DFT of real physical samples.
    pub fn from_physical_real(samples: &[f64], grid: Grid1D) -> Result<Self> {
        if samples.len() != grid.n_modes() {
            return Err(CoreError::Dimension {
                expected: grid.n_modes(),
                got: samples.len(),
            });
        }
        let mut data: Vec<Complex64> = samples.iter().map(|&s| Complex64::new(s, 0.0)).collect();
        run_fft(&mut data, false);
        Ok(Self {
            coeffs: data,
            grid,
            reality: Reality::RealValued,
        })
    }

    /// Forward unitary DFT of complex physical samples.
    pub fn from_physical_complex(samples: &[Complex64], grid: Grid1D) -> Result<Self> {
        if samples.len() != grid.n_modes() {
            return Err(CoreError::Dimension {
                expected: grid.n_modes(),
                got: samples.len(),
            });
        }
        let mut data = samples.to_vec();
        run_fft(&mut data, false);
        Ok(Self {
            coeffs: data,
            grid,
            reality: Reality::ComplexValued,
        })
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    pub fn reality(&self) -> Reality {
        self.reality
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Coefficient at wavenumber `k`.
    pub fn coeff(&self, k: i64) -> Complex64 {
        self.coeffs[self.grid.index_of(k)]
    }

    pub fn set_coeff(&mut self, k: i64, v: Complex64) {
        let i = self.grid.index_of(k);
        self.coeffs[i] = v;
    }

    fn hermitian_defect(&self) -> f64 {
        let n = self.grid.n_modes();
        let mut worst: f64 = 0.0;
        for k in 1..(n as i64) / 2 {
            let d = (self.coeff(-k) - self.coeff(k).conj()).norm();
            worst = worst.max(d);
        }
        // Nyquist and zero modes must be real for a real-valued field.
        worst = worst.max(self.coeff(0).im.abs());
        worst = worst.max(self.coeff(-(n as i64) / 2).im.abs());
        worst
    }

    fn check_hermitian(&self) -> Result<()> {
        if self.reality != Reality::RealValued {
            return Ok(());
        }
        let scale = self.l2_norm().max(1e-300);
        let defect = self.hermitian_defect();
        if defect > 1e-12 * scale.max(1.0) {
            return Err(CoreError::Consistency(format!(
                "real-valued field violates Hermitian symmetry (defect {defect:.3e}, norm {scale:.3e})"
            )));
        }
        Ok(())
    }

    /// Inverse unitary DFT to complex samples. Real-valued fields are
    /// checked for Hermitian symmetry first.
    pub fn to_physical(&self) -> Result<Vec<Complex64>> {
        self.check_hermitian()?;
        let mut data = self.coeffs.clone();
        run_fft(&mut data, true);
        Ok(data)
    }

    /// Inverse transform of a real-valued field; the (tiny) imaginary
    /// residue is discarded.
    pub fn to_physical_real(&self) -> Result<Vec<f64>> {
        if self.reality != Reality::RealValued {
            return Err(CoreError::Consistency(
                "to_physical_real called on a complex-valued field".into(),
            ));
        }
        Ok(self.to_physical()?.into_iter().map(|c| c.re).collect())
    }

    /// Inverse transform without the Hermitian check, for internal hot paths.
    pub(crate) fn to_physical_unchecked(&self) -> Vec<Complex64> {
        let mut data = self.coeffs.clone();
        run_fft(&mut data, true);
        data
    }

    /// `exp(-i t ω(k))` multiplier: the exact linear flow over time `t`.
    pub fn propagate_linear(&self, sym: &DispersionSymbol, t: f64) -> SpectralField {
        let mut out = self.clone();
        for i in 0..out.coeffs.len() {
            let k = self.grid.wavenumber(i);
            let phase = -t * sym.eval(k);
            out.coeffs[i] *= Complex64::from_polar(1.0, phase);
        }
        out
    }

    /// Multiply mode `k` by `(ik)^order`.
    pub fn spectral_derivative(&self, order: u32) -> SpectralField {
        let mut out = self.clone();
        let zero_nyquist = self.reality == Reality::RealValued && order % 2 == 1;
        for i in 0..out.coeffs.len() {
            let k = self.grid.wavenumber(i);
            let ik = Complex64::new(0.0, k as f64);
            out.coeffs[i] *= ik.powu(order);
            if zero_nyquist && k == -(self.grid.n_modes() as i64) / 2 {
                out.coeffs[i] = Complex64::new(0.0, 0.0);
            }
        }
        out
    }

    /// Pseudo-differential anti-derivative: mode `k ≠ 0` divided by `ik`,
    /// zero mode annihilated.
    pub fn antiderivative(&self) -> SpectralField {
        let mut out = self.clone();
        let nyq = -(self.grid.n_modes() as i64) / 2;
        for i in 0..out.coeffs.len() {
            let k = self.grid.wavenumber(i);
            if k == 0 || (self.reality == Reality::RealValued && k == nyq) {
                out.coeffs[i] = Complex64::new(0.0, 0.0);
            } else {
                out.coeffs[i] /= Complex64::new(0.0, k as f64);
            }
        }
        out
    }

    /// Projection onto mean-zero functions: zero the `k = 0` coefficient.
    pub fn mean_zero_project(&self) -> SpectralField {
        let mut out = self.clone();
        out.coeffs[0] = Complex64::new(0.0, 0.0);
        out
    }

    /// Zero every coefficient with `|k| > fraction · N/2`.
    pub fn dealias(&self, fraction: f64) -> SpectralField {
        let mut out = self.clone();
        let cutoff = fraction * self.grid.n_modes() as f64 / 2.0;
        for i in 0..out.coeffs.len() {
            let k = self.grid.wavenumber(i);
            if (k.abs() as f64) > cutoff {
                out.coeffs[i] = Complex64::new(0.0, 0.0);
            }
        }
        out
    }

    /// Discrete `L²` norm, `sqrt(Σ_k |û_k|²)`.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `H^s` Sobolev norm with weight `(1 + k²)^s`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| {
                let k = self.grid.wavenumber(i) as f64;
                (1.0 + k * k).powf(s) * c.norm_sqr()
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }

    /// Complex conjugate of the represented function.
    pub fn conj_field(&self) -> SpectralField {
        let n = self.grid.n_modes();
        let mut out = self.clone();
        for i in 0..n {
            let k = self.grid.wavenumber(i);
            let nk = if k == -(n as i64) / 2 { k } else { -k };
            out.coeffs[i] = self.coeffs[self.grid.index_of(nk)].conj();
        }
        out
    }

    pub fn scaled(&self, a: Complex64) -> SpectralField {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c *= a;
        }
        out
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &SpectralField) -> Result<SpectralField> {
        self.zip_with(other, |a, b| a - b)
    }

    /// `self + a · other`
    pub fn axpy(&self, a: Complex64, other: &SpectralField) -> Result<SpectralField> {
        self.zip_with(other, |x, y| x + a * y)
    }

    fn zip_with(
        &self,
        other: &SpectralField,
        f: impl Fn(Complex64, Complex64) -> Complex64,
    ) -> Result<SpectralField> {
        if self.grid != other.grid {
            return Err(CoreError::Dimension {
                expected: self.grid.n_modes(),
                got: other.grid.n_modes(),
            });
        }
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(&a, &b)| f(a, b))
            .collect();
        let reality = if self.reality == other.reality {
            self.reality
        } else {
            Reality::ComplexValued
        };
        Ok(SpectralField {
            coeffs,
            grid: self.grid,
            reality,
        })
    }

    /// Pointwise physical-space product of two fields (no dealiasing here).
    pub fn pointwise_product(&self, other: &SpectralField) -> Result<SpectralField> {
        if self.grid != other.grid {
            return Err(CoreError::Dimension {
                expected: self.grid.n_modes(),
                got: other.grid.n_modes(),
            });
        }
        let a = self.to_physical_unchecked();
        let b = other.to_physical_unchecked();
        let prod: Vec<Complex64> = a.iter().zip(&b).map(|(&x, &y)| x * y).collect();
        let mut data = prod;
        run_fft(&mut data, false);
        let reality = if self.reality == Reality::RealValued && other.reality == Reality::RealValued
        {
            Reality::RealValued
        } else {
            Reality::ComplexValued
        };
        Ok(SpectralField {
            coeffs: data,
            grid: self.grid,
            reality,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::{rand_complex_field, rand_real_field};

    #[test]
    fn grid_rejects_odd_and_small() {
        assert!(Grid1D::new(7).is_err());
        assert!(Grid1D::new(6).is_err());
        assert!(Grid1D::new(8).is_ok());
    }

    #[test]
    fn wavenumber_layout() {
        let g = Grid1D::new(8).unwrap();
        let ks: Vec<i64> = g.wavenumbers().collect();
        assert_eq!(ks, vec![0, 1, 2, 3, -4, -3, -2, -1]);
        assert_eq!(ks.iter().filter(|&&k| k == 0).count(), 1);
        for k in -4..4 {
            assert_eq!(g.wavenumber(g.index_of(k)), k);
        }
    }

    #[test]
    fn constant_field_transform() {
        // constant samples all 1.0, N=8 -> û_0 = sqrt(8), others 0
        let g = Grid1D::new(8).unwrap();
        let f = SpectralField::from_physical_real(&[1.0; 8], g).unwrap();
        assert!((f.coeff(0) - Complex64::new(8f64.sqrt(), 0.0)).norm() < 1e-14);
        for k in 1..4 {
            assert!(f.coeff(k).norm() < 1e-14);
            assert!(f.coeff(-k).norm() < 1e-14);
        }
    }

    #[test]
    fn cosine_single_mode() {
        let g = Grid1D::new(8).unwrap();
        let samples: Vec<f64> = g.nodes().iter().map(|&x| x.cos()).collect();
        let f = SpectralField::from_physical_real(&samples, g).unwrap();
        let p = f.coeff(1).norm();
        let m = f.coeff(-1).norm();
        assert!((p - m).abs() < 1e-13);
        assert!(p > 1.0);
        for k in [0i64, 2, 3, -2, -3, -4] {
            assert!(f.coeff(k).norm() < 1e-13, "leak at k={k}");
        }
    }

    #[test]
    fn round_trip_complex() {
        for n in [8usize, 16, 64, 256, 1024] {
            let g = Grid1D::new(n).unwrap();
            let f = rand_complex_field(g, 42);
            let samples = f.to_physical().unwrap();
            let back = SpectralField::from_physical_complex(&samples, g).unwrap();
            let num = f.sub(&back).unwrap().l2_norm();
            assert!(num / f.l2_norm() < 1e-13, "N={n} err {num:e}");
        }
    }

    #[test]
    fn delta_at_zero_gives_constant() {
        let n = 16;
        let g = Grid1D::new(n).unwrap();
        let mut f = SpectralField::zero(g, Reality::RealValued);
        f.set_coeff(0, Complex64::new((n as f64).sqrt(), 0.0));
        let samples = f.to_physical_real().unwrap();
        for s in samples {
            assert!((s - 1.0).abs() < 1e-13);
        }
    }

    #[test]
    fn parseval() {
        let g = Grid1D::new(32).unwrap();
        let f = rand_complex_field(g, 7);
        let phys = f.to_physical().unwrap();
        let p: f64 = phys.iter().map(|c| c.norm_sqr()).sum();
        let s: f64 = f.coeffs().iter().map(|c| c.norm_sqr()).sum();
        assert!((p - s).abs() < 1e-12 * s);
    }

    #[test]
    fn hermitian_violation_rejected() {
        let g = Grid1D::new(8).unwrap();
        let mut f = SpectralField::zero(g, Reality::RealValued);
        f.set_coeff(1, Complex64::new(1.0, 0.0));
        // missing the conjugate partner at k = -1
        assert!(matches!(
            f.to_physical_real(),
            Err(CoreError::Consistency(_))
        ));
    }

    #[test]
    fn propagate_identity_at_zero_time() {
        let g = Grid1D::new(32).unwrap();
        let f = rand_complex_field(g, 3);
        let sym = DispersionSymbol::kdv_default();
        let g2 = f.propagate_linear(&sym, 0.0);
        assert!(f.sub(&g2).unwrap().l2_norm() == 0.0);
    }

    #[test]
    fn propagate_single_mode_phase() {
        // single mode k=2, ω(k) = -k³/6, t=τ: coefficient picks up e^{iτ·8/6}
        let g = Grid1D::new(16).unwrap();
        let tau = 0.37;
        let mut f = SpectralField::zero(g, Reality::ComplexValued);
        f.set_coeff(2, Complex64::new(1.0, 0.0));
        let out = f.propagate_linear(&DispersionSymbol::kdv_default(), tau);
        let expect = Complex64::from_polar(1.0, tau * 8.0 / 6.0);
        assert!((out.coeff(2) - expect).norm() < 1e-14);
    }

    #[test]
    fn propagate_unitary_and_group_law() {
        let g = Grid1D::new(64).unwrap();
        let f = rand_complex_field(g, 11);
        let sym = DispersionSymbol::nls_default();
        let once = f.propagate_linear(&sym, 1.0);
        assert!((once.l2_norm() - f.l2_norm()).abs() < 1e-13 * f.l2_norm());
        let a = f.propagate_linear(&sym, 0.3).propagate_linear(&sym, 0.7);
        let b = f.propagate_linear(&sym, 1.0);
        assert!(a.sub(&b).unwrap().l2_norm() < 1e-12 * f.l2_norm());
    }

    #[test]
    fn derivative_of_sine_is_cosine() {
        let g = Grid1D::new(32).unwrap();
        let sin: Vec<f64> = g.nodes().iter().map(|&x| x.sin()).collect();
        let cos: Vec<f64> = g.nodes().iter().map(|&x| x.cos()).collect();
        let f = SpectralField::from_physical_real(&sin, g).unwrap();
        let d = f.spectral_derivative(1).to_physical_real().unwrap();
        for (a, b) in d.iter().zip(&cos) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn second_derivative_of_pure_mode() {
        // e^{i3x}: order-2 derivative multiplies by (i3)² = -9
        let g = Grid1D::new(16).unwrap();
        let mut f = SpectralField::zero(g, Reality::ComplexValued);
        f.set_coeff(3, Complex64::new(0.4, -0.3));
        let d = f.spectral_derivative(2);
        assert!((d.coeff(3) - f.coeff(3) * (-9.0)).norm() < 1e-13);
    }

    #[test]
    fn antiderivative_inverts_derivative_up_to_mean() {
        let g = Grid1D::new(64).unwrap();
        let f = rand_real_field(g, 5);
        let id = f.spectral_derivative(1).antiderivative();
        let proj = f.mean_zero_project();
        assert!(id.sub(&proj).unwrap().l2_norm() < 1e-12 * f.l2_norm().max(1.0));
    }

    #[test]
    fn antiderivative_of_cosine_is_sine() {
        let g = Grid1D::new(32).unwrap();
        let cos: Vec<f64> = g.nodes().iter().map(|&x| x.cos()).collect();
        let sin: Vec<f64> = g.nodes().iter().map(|&x| x.sin()).collect();
        let f = SpectralField::from_physical_real(&cos, g).unwrap();
        let a = f.antiderivative().to_physical_real().unwrap();
        for (x, y) in a.iter().zip(&sin) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn antiderivative_annihilates_constant() {
        let g = Grid1D::new(16).unwrap();
        let f = SpectralField::from_physical_real(&[3.25; 16], g).unwrap();
        assert!(f.antiderivative().l2_norm() < 1e-13);
    }

    #[test]
    fn mean_zero_projection_idempotent_and_exact() {
        let g = Grid1D::new(16).unwrap();
        let mut f = SpectralField::zero(g, Reality::ComplexValued);
        f.set_coeff(0, Complex64::new(3.0, 0.0));
        f.set_coeff(1, Complex64::new(0.0, 2.0));
        let p = f.mean_zero_project();
        assert_eq!(p.coeff(0), Complex64::new(0.0, 0.0));
        assert_eq!(p.coeff(1), Complex64::new(0.0, 2.0));
        let pp = p.mean_zero_project();
        assert_eq!(p.coeffs(), pp.coeffs());
    }

    #[test]
    fn dealias_two_thirds_on_n16() {
        let g = Grid1D::new(16).unwrap();
        let mut f = SpectralField::zero(g, Reality::ComplexValued);
        for i in 0..16 {
            f.coeffs_mut()[i] = Complex64::new(1.0, 0.0);
        }
        let d = f.dealias(2.0 / 3.0);
        for k in -8i64..8 {
            let c = d.coeff(k.max(-8));
            if k.abs() > 5 {
                assert_eq!(c, Complex64::new(0.0, 0.0), "k={k} should be zeroed");
            } else {
                assert_eq!(c, Complex64::new(1.0, 0.0), "k={k} should survive");
            }
        }
        let full = f.dealias(1.0);
        assert_eq!(full.coeffs(), f.coeffs());
    }

    #[test]
    fn conj_field_matches_pointwise_conjugate() {
        let g = Grid1D::new(32).unwrap();
        let f = rand_complex_field(g, 9);
        let c = f.conj_field();
        let phys = f.to_physical().unwrap();
        let cphys = c.to_physical().unwrap();
        for (a, b) in phys.iter().zip(&cphys) {
            assert!((a.conj() - b).norm() < 1e-12);
        }
    }
}
