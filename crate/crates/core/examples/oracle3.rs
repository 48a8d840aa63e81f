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
        b = picard_refined_step(IntegratorKind::Res1Kdv, eq, &b, tau, 2).unwrap();
        let ro = picard_refined_step(IntegratorKind::Res1Kdv, eq, &o, tau, 2).unwrap();
        let d = measure_defect(eq, IntegratorKind::Res1Kdv, &o, tau, tau / 64.0).unwrap();
        let base = hinlri_core::integrators::step(IntegratorKind::Res1Kdv, eq, &o, tau).unwrap();
        let gap = d.add(&base.sub(&ro).unwrap()).unwrap();
        let mut z = basis.restrict(&gap).unwrap();
        for v in z.iter_mut() { *v *= 2.0; }
        let proj = herm(&basis.prolong(&z).unwrap());
        o = ro.add(&proj).unwrap();
    }
    (
        b.sub(ref_end).unwrap().l2_norm(),
        o.sub(ref_end).unwrap().l2_norm(),
    )
}

fn main() {
    let eq = EquationSpec::kdv().with_dealias_fraction(0.5).unwrap();
    let tau = 2f64.powi(-8);
    for (n, k) in [(64usize, 16usize), (32, 8)] {
        let grid = Grid1D::new(n).unwrap();
        let bands = (0.5 * n as f64 / 2.0).floor() as i64;
        let u0 = rough_initial_state(&eq, 0.5, n, 90_001, true).unwrap();
        // top-K fourier bands by measuring which carry global error: use highest K bands 
        // of the active range [1, bands] — try both lowest-K and highest-K selections
        for (name, lo, hi) in [
            ("top", bands - k as i64 + 1, bands),
            ("low", 1, k as i64),
            ("mid", (bands - k as i64) / 2 + 1, (bands - k as i64) / 2 + k as i64),
        ] {
            let mut snaps = Vec::new();
            for kk in lo..=hi {
                let mut f = SpectralField::zero(grid, Reality::ComplexValued);
                f.set_coeff(kk, Complex64::new(1.0, 0.0));
                snaps.push(f);
            }
            let basis = Arc::new(build_trunk_basis(&snaps, k).unwrap());
            let (eb, eo) = endpoint_ratio(&eq, &basis, &u0, tau);
            println!(
                "N={n:2} K={k:2} bands {lo}..{hi} ({name}): base {eb:.3e} oracle {eo:.3e} ratio {:.2}",
                eb / eo
            );
        }
        // defect-snapshot basis for comparison
        let ds = build_dataset(&eq, 0.5, &[n], &[tau], 6, 16, 10_000, 32).unwrap();
        let snaps = corrector_snapshots(&eq, IntegratorKind::Res1Kdv, &ds, 4, 64).unwrap();
        let basis = Arc::new(build_trunk_basis(&snaps, k).unwrap());
        let (eb, eo) = endpoint_ratio(&eq, &basis, &u0, tau);
        println!("N={n:2} K={k:2} defect-svd       : base {eb:.3e} oracle {eo:.3e} ratio {:.2}", eb / eo);
    }
}
