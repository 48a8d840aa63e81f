//! Shared helpers for unit and integration tests.

use num_complex::Complex64;

use crate::rng::SplitMix64;
use crate::spectral::{Grid1D, Reality, SpectralField};

/// Random complex field with O(1) coefficients.
pub fn rand_complex_field(grid: Grid1D, seed: u64) -> SpectralField {
    let mut g = SplitMix64::new(seed);
    let coeffs: Vec<Complex64> = (0..grid.n_modes())
        .map(|_| {
            let (re, im) = g.next_complex_gaussian();
            Complex64::new(re, im) / (grid.n_modes() as f64).sqrt()
        })
        .collect();
    SpectralField::from_coeffs(coeffs, grid, Reality::ComplexValued).unwrap()
}

/// Random real-valued field (Hermitian coefficients, zero mean and Nyquist).
pub fn rand_real_field(grid: Grid1D, seed: u64) -> SpectralField {
    let mut g = SplitMix64::new(seed);
    let n = grid.n_modes() as i64;
    let mut f = SpectralField::zero(grid, Reality::RealValued);
    for k in 1..n / 2 {
        let (re, im) = g.next_complex_gaussian();
        let c = Complex64::new(re, im) / (grid.n_modes() as f64).sqrt();
        f.set_coeff(k, c);
        f.set_coeff(-k, c.conj());
    }
    f
}

/// Least-squares slope of y against x.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&xi, &yi) in x.iter().zip(y) {
        num += (xi - mx) * (yi - my);
        den += (xi - mx) * (xi - mx);
    }
    num / den
}
