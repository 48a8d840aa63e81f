//! Column-orthonormal trunk basis for restriction and prolongation between
//! the full spectral grid and the latent manifold.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{CoreError, Result};
use crate::spectral::{Grid1D, Reality, SpectralField};

/// `N × K` column-orthonormal complex matrix over coefficient space.
#[derive(Clone, Debug)]
pub struct TrunkBasis {
    /// Column-major: `data[col * n + row]`, rows in FFT coefficient order.
    data: Vec<Complex64>,
    grid: Grid1D,
    latent_dim: usize,
}

impl TrunkBasis {
    pub fn from_columns(data: Vec<Complex64>, grid: Grid1D, latent_dim: usize) -> Result<Self> {
        if data.len() != grid.n_modes() * latent_dim {
            return Err(CoreError::Dimension {
                expected: grid.n_modes() * latent_dim,
                got: data.len(),
            });
        }
        let basis = Self {
            data,
            grid,
            latent_dim,
        };
        let defect = basis.orthonormality_defect();
        if defect > 1e-10 {
            return Err(CoreError::Consistency(format!(
                "trunk basis columns are not orthonormal (defect {defect:.3e})"
            )));
        }
        Ok(basis)
    }

    pub fn grid(&self) -> Grid1D {
        self.grid
    }

    pub fn latent_dim(&self) -> usize {
        self.latent_dim
    }

    pub fn raw_data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> &[Complex64] {
        let n = self.grid.n_modes();
        &self.data[j * n..(j + 1) * n]
    }

    /// `max |Φ*Φ - I|` entrywise.
    pub fn orthonormality_defect(&self) -> f64 {
        let k = self.latent_dim;
        let mut worst: f64 = 0.0;
        for a in 0..k {
            for b in a..k {
                let mut dot = Complex64::new(0.0, 0.0);
                for (x, y) in self.column(a).iter().zip(self.column(b)) {
                    dot += x.conj() * y;
                }
                let expect = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((dot - Complex64::new(expect, 0.0)).norm());
            }
        }
        worst
    }

    /// `Φ* u`: non-expansive restriction to the latent space.
    pub fn restrict(&self, field: &SpectralField) -> Result<Vec<Complex64>> {
        if field.grid() != self.grid {
            return Err(CoreError::Dimension {
                expected: self.grid.n_modes(),
                got: field.grid().n_modes(),
            });
        }
        let coeffs = field.coeffs();
        Ok((0..self.latent_dim)
            .map(|j| {
                self.column(j)
                    .iter()
                    .zip(coeffs)
                    .map(|(p, u)| p.conj() * u)
                    .sum()
            })
            .collect())
    }

    /// `Φ z`: isometric prolongation back to the fine grid. The result is a
    /// complex-valued field; callers on the real manifold symmetrise it.
    pub fn prolong(&self, latent: &[Complex64]) -> Result<SpectralField> {
        if latent.len() != self.latent_dim {
            return Err(CoreError::Dimension {
                expected: self.latent_dim,
                got: latent.len(),
            });
        }
        let n = self.grid.n_modes();
        let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
        for (j, &z) in latent.iter().enumerate() {
            for (c, p) in coeffs.iter_mut().zip(self.column(j)) {
                *c += p * z;
            }
        }
        SpectralField::from_coeffs(coeffs, self.grid, Reality::ComplexValued)
    }

    /// Transfer the basis to another grid size by wavenumber identity:
    /// zero-padding when growing (orthonormality preserved exactly),
    /// truncation plus re-orthonormalisation when shrinking.
    pub fn resample(&self, grid: Grid1D) -> Result<TrunkBasis> {
        if grid == self.grid {
            return Ok(self.clone());
        }
        let n_new = grid.n_modes() as i64;
        let n_old = self.grid.n_modes() as i64;
        let n = grid.n_modes();
        let mut cols: Vec<Vec<Complex64>> = Vec::with_capacity(self.latent_dim);
        for j in 0..self.latent_dim {
            let old = self.column(j);
            let mut col = vec![Complex64::new(0.0, 0.0); n];
            for (i, c) in col.iter_mut().enumerate() {
                let k = grid.wavenumber(i);
                if k >= -n_old / 2 && k < n_old / 2 {
                    *c = old[self.grid.index_of(k)];
                }
            }
            let _ = n_new;
            cols.push(col);
        }
        if grid.n_modes() < self.grid.n_modes() {
            // modified Gram-Schmidt after truncation
            for j in 0..cols.len() {
                for i in 0..j {
                    let proj: Complex64 = cols[i]
                        .iter()
                        .zip(&cols[j])
                        .map(|(a, b)| a.conj() * b)
                        .sum();
                    let prev = cols[i].clone();
                    for (c, p) in cols[j].iter_mut().zip(&prev) {
                        *c -= proj * p;
                    }
                }
                let norm = cols[j].iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
                if norm < 1e-8 {
                    return Err(CoreError::RankDeficient {
                        rank: j,
                        requested: self.latent_dim,
                    });
                }
                for c in cols[j].iter_mut() {
                    *c /= norm;
                }
            }
        }
        let mut data = Vec::with_capacity(n * self.latent_dim);
        for col in cols {
            data.extend(col);
        }
        TrunkBasis::from_columns(data, grid, self.latent_dim)
    }
}

/// Top-`k` left singular vectors of the snapshot matrix.
pub fn build_trunk_basis(snapshots: &[SpectralField], k: usize) -> Result<TrunkBasis> {
    if snapshots.is_empty() {
        return Err(CoreError::Argument("no snapshots provided".into()));
    }
    let grid = snapshots[0].grid();
    if snapshots.iter().any(|s| s.grid() != grid) {
        return Err(CoreError::Consistency(
            "snapshots live on different grids".into(),
        ));
    }
    if k == 0 || k > snapshots.len() || k > grid.n_modes() / 4 {
        return Err(CoreError::Argument(format!(
            "latent dimension {k} must satisfy 1 <= k <= min(S, N/4) = {}",
            snapshots.len().min(grid.n_modes() / 4)
        )));
    }
    let n = grid.n_modes();
    let s = snapshots.len();
    let mat = DMatrix::<Complex64>::from_fn(n, s, |i, j| snapshots[j].coeffs()[i]);
    let svd = mat.svd(true, false);
    let u = svd.u.as_ref().expect("left singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| {
        svd.singular_values[b]
            .partial_cmp(&svd.singular_values[a])
            .unwrap()
    });
    let sigma_max = svd.singular_values[order[0]].max(f64::MIN_POSITIVE);
    let sigma_k = svd.singular_values[order[k - 1]];
    if sigma_k <= 1e-12 * sigma_max {
        let rank = order
            .iter()
            .filter(|&&i| svd.singular_values[i] > 1e-12 * sigma_max)
            .count();
        return Err(CoreError::RankDeficient { rank, requested: k });
    }
    let mut data = Vec::with_capacity(n * k);
    for &j in order.iter().take(k) {
        for i in 0..n {
            data.push(u[(i, j)]);
        }
    }
    TrunkBasis::from_columns(data, grid, k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::rand_complex_field;

    fn snapshot_set(n: usize, count: usize, seed: u64) -> Vec<SpectralField> {
        let grid = Grid1D::new(n).unwrap();
        (0..count)
            .map(|i| rand_complex_field(grid, seed + i as u64))
            .collect()
    }

    #[test]
    fn orthonormal_single_mode_snapshots_are_reproduced() {
        let grid = Grid1D::new(32).unwrap();
        let mut snaps = Vec::new();
        for k in 1..=4i64 {
            let mut f = SpectralField::zero(grid, Reality::ComplexValued);
            f.set_coeff(k, Complex64::new(1.0, 0.0));
            snaps.push(f);
        }
        let basis = build_trunk_basis(&snaps, 4).unwrap();
        assert!(basis.orthonormality_defect() < 1e-12);
        // span contains each snapshot: restrict/prolong reproduces it
        for f in &snaps {
            let z = basis.restrict(f).unwrap();
            let back = basis.prolong(&z).unwrap();
            assert!(back.sub(f).unwrap().l2_norm() < 1e-12);
        }
    }

    #[test]
    fn orthonormality_invariant() {
        let snaps = snapshot_set(64, 24, 100);
        let basis = build_trunk_basis(&snaps, 8).unwrap();
        assert!(basis.orthonormality_defect() < 1e-12);
    }

    #[test]
    fn projection_residual_equals_tail_energy() {
        // Eckart-Young: Σ_s ||u_s - ΦΦ*u_s||² = Σ_{j>k} σ_j²
        let snaps = snapshot_set(64, 16, 7);
        let k = 8;
        let basis = build_trunk_basis(&snaps, k).unwrap();

        let grid = snaps[0].grid();
        let mat = DMatrix::<Complex64>::from_fn(grid.n_modes(), snaps.len(), |i, j| {
            snaps[j].coeffs()[i]
        });
        let svd = mat.svd(false, false);
        let mut sigmas: Vec<f64> = svd.singular_values.iter().copied().collect();
        sigmas.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let tail: f64 = sigmas[k..].iter().map(|s| s * s).sum();

        let mut resid = 0.0;
        for f in &snaps {
            let z = basis.restrict(f).unwrap();
            let back = basis.prolong(&z).unwrap();
            resid += f.sub(&back).unwrap().l2_norm().powi(2);
        }
        assert!(
            (resid - tail).abs() < 1e-10 * tail.max(1.0),
            "residual {resid} vs tail {tail}"
        );
    }

    #[test]
    fn restriction_non_expansive_prolongation_isometric() {
        let snaps = snapshot_set(64, 20, 3);
        let basis = build_trunk_basis(&snaps, 8).unwrap();
        let grid = snaps[0].grid();
        let f = rand_complex_field(grid, 999);
        let z = basis.restrict(&f).unwrap();
        let zn: f64 = z.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        assert!(zn <= f.l2_norm() * (1.0 + 1e-12));

        let mut latent = vec![Complex64::new(0.0, 0.0); 8];
        for (i, l) in latent.iter_mut().enumerate() {
            *l = Complex64::new(0.3 * i as f64 - 1.0, 0.1 * i as f64);
        }
        let ln: f64 = latent.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        let p = basis.prolong(&latent).unwrap();
        assert!((p.l2_norm() - ln).abs() < 1e-12 * ln);

        // unit coordinate vector maps to the column
        let mut e0 = vec![Complex64::new(0.0, 0.0); 8];
        e0[0] = Complex64::new(1.0, 0.0);
        let col = basis.prolong(&e0).unwrap();
        for (a, b) in col.coeffs().iter().zip(basis.column(0)) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn orthogonal_field_restricts_to_zero() {
        let grid = Grid1D::new(32).unwrap();
        let mut snaps = Vec::new();
        for k in 1..=4i64 {
            let mut f = SpectralField::zero(grid, Reality::ComplexValued);
            f.set_coeff(k, Complex64::new(1.0, 0.0));
            snaps.push(f);
        }
        let basis = build_trunk_basis(&snaps, 4).unwrap();
        let mut g = SpectralField::zero(grid, Reality::ComplexValued);
        g.set_coeff(9, Complex64::new(2.0, 1.0));
        let z = basis.restrict(&g).unwrap();
        assert!(z.iter().all(|c| c.norm() < 1e-13));
    }

    #[test]
    fn rank_deficiency_detected() {
        let grid = Grid1D::new(32).unwrap();
        let f = rand_complex_field(grid, 1);
        let snaps = vec![f.clone(), f.scaled(Complex64::new(2.0, 0.0)), f.clone()];
        assert!(matches!(
            build_trunk_basis(&snaps, 3),
            Err(CoreError::RankDeficient { .. })
        ));
    }

    #[test]
    fn resample_round_trip() {
        let snaps = snapshot_set(64, 20, 55);
        let basis = build_trunk_basis(&snaps, 8).unwrap();
        let big = basis.resample(Grid1D::new(128).unwrap()).unwrap();
        assert!(big.orthonormality_defect() < 1e-12);
        let small = basis.resample(Grid1D::new(32).unwrap()).unwrap();
        assert!(small.orthonormality_defect() < 1e-12);
        // growing preserves the columns on shared modes exactly
        for j in 0..8 {
            for k in -32i64..32 {
                let a = basis.column(j)[basis.grid().index_of(k)];
                let b = big.column(j)[big.grid().index_of(k)];
                assert_eq!(a, b);
            }
        }
    }
}
