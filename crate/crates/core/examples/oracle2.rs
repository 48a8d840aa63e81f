use hinlri_core::corrector::{build_trunk_basis, TrunkBasis};
use hinlri_core::equations::EquationSpec;
use hinlri_core::integrators::{measure_defect, picard_refined_step, reference_solve, IntegratorKind};
use hinlri_core::spectral::{Grid1D, Reality, SpectralField};
use hinlri_core::training::*;
use num_complex::Complex64;
use std::sync::Arc;

fn herm(e: &SpectralField) -> SpectralField {
    let grid = e.grid();
    let n = grid.n_modes();
    let coeffs: Vec<Complex64> = (0..n)
        .map(|i| {
            let k = grid.wavenumber(i);
            let nk = if k == -(n as i64) / 2 { k } else { -k };
            0.5 * (e.coeffs()[i] + e.coeffs()[grid.index_of(nk)].conj())
        })
        .collect();
    SpectralField::from_coeffs(coeffs, grid, Reality::RealValued).unwrap()
}

fn endpoint_ratio(eq: &EquationSpec, basis: &Arc<TrunkBasis>, u0: &SpectralField, tau: f64) -> (f64, f64) {
    let reference = reference_solve(eq, u0, 1.0, tau / 32.0, 1.0).unwrap();
    let ref_end = reference.last().unwrap();
    let steps = (1.0 / tau).round() as usize;
    let mut b = u0.clone();
    let mut o = u0.clone();
    for _ in 0..steps {
        let rb = picard_refined_step(IntegratorKind::Res1Kdv, eq, &b, tau, 2).unwrap();
        b = rb;
        let ro = picard_refined_step(IntegratorKind::Res1Kdv, eq, &o, tau, 2).unwrap();
        let d = measure_defect(eq, IntegratorKind::Res1Kdv, &o, tau, tau / 64.0).unwrap();
        let base = hinlri_core::integrators::step(IntegratorKind::Res1Kdv, eq, &o, tau).unwrap();
        let gap = d.add(&base.sub(&ro).unwrap()).unwrap();
        let z = basis.restrict(&gap).unwrap();
        let proj = herm(&basis.prolong(&z).unwrap());
        o = ro.add(&proj).unwrap();
    }
    let eb = b.sub(ref_end).unwrap().l2_norm();
    let eo = o.sub(ref_end).unwrap().l2_norm();
    (eb, eo)
}

fn main() {
    let eq = EquationSpec::kdv();
    let n = 64usize;
    let tau = 2f64.powi(-8);
    let grid = Grid1D::new(n).unwrap();
    let u0 = rough_initial_state(&eq, 0.5, n, 90_001, true).unwrap();

    // oracle-3: pure Fourier half-spectrum basis on bands 1..16
    let mut fourier_snaps = Vec::new();
    for k in 1..=16i64 {
        let mut f = SpectralField::zero(grid, Reality::ComplexValued);
        f.set_coeff(k, Complex64::new(1.0, 0.0));
        fourier_snaps.push(f);
    }
    let fourier_basis = Arc::new(build_trunk_basis(&fourier_snaps, 16).unwrap());
    let (eb, eo) = endpoint_ratio(&eq, &fourier_basis, &u0, tau);
    println!("fourier bands 1..16: base {eb:.3e} oracle {eo:.3e} ratio {:.2}", eb / eo);

    // oracle-2: accumulated-error snapshots from 6 training-seed runs
    let mut err_snaps = Vec::new();
    for s in 0..6u64 {
        let v = rough_initial_state(&eq, 0.5, n, 50_000 + s, true).unwrap();
        let reference = reference_solve(&eq, &v, 0.5, tau / 32.0, 0.0625).unwrap();
        let mut u = v.clone();
        for (i, ref_state) in reference.iter().enumerate().skip(1) {
            for _ in 0..16 {
                u = picard_refined_step(IntegratorKind::Res1Kdv, &eq, &u, tau, 2).unwrap();
            }
            let e = u.sub(ref_state).unwrap();
            let h = positive_half(&e);
            let nrm = h.l2_norm();
            if nrm > 1e-14 && i >= 1 {
                err_snaps.push(h.scaled(Complex64::new(1.0 / nrm, 0.0)));
            }
        }
    }
    println!("{} accumulated-error snapshots", err_snaps.len());
    let err_basis = Arc::new(build_trunk_basis(&err_snaps, 16).unwrap());
    let (eb2, eo2) = endpoint_ratio(&eq, &err_basis, &u0, tau);
    println!("accumulated-error basis: base {eb2:.3e} oracle {eo2:.3e} ratio {:.2}", eb2 / eo2);
}
