use hinlri_core::corrector::build_trunk_basis;
use hinlri_core::equations::EquationSpec;
use hinlri_core::integrators::{measure_defect, picard_refined_step, reference_solve, IntegratorKind};
use hinlri_core::rough::{sample_rough_field, RoughFieldSpec};
use hinlri_core::spectral::{Grid1D, Reality, SpectralField};
use num_complex::Complex64;
use std::sync::Arc;

fn normalized_rough(n: usize, gamma: f64, seed: u64) -> SpectralField {
    let spec = RoughFieldSpec::new(gamma, n, seed, Reality::RealValued).unwrap();
    let f = sample_rough_field(&spec);
    let h = f.sobolev_norm(gamma);
    f.scaled(Complex64::new(1.0 / h, 0.0))
}

fn positive_half(f: &SpectralField) -> SpectralField {
    let grid = f.grid();
    let mut out = SpectralField::zero(grid, Reality::ComplexValued);
    for i in 0..grid.n_modes() {
        let k = grid.wavenumber(i);
        if k > 0 {
            out.coeffs_mut()[i] = f.coeffs()[i];
        }
    }
    out
}

fn main() {
    for n in [64usize, 128] {
        let eq = EquationSpec::kdv();
        let tau = 2f64.powi(-8);
        let t_final = 1.0f64;
        let u0 = normalized_rough(n, 0.5, 4242);

        let reference = reference_solve(&eq, &u0, t_final, tau / 32.0, t_final).unwrap();
        let ref_end = reference.last().unwrap();
        let steps = (t_final / tau).round() as usize;
        let mut u = u0.clone();
        for _ in 0..steps {
            u = picard_refined_step(IntegratorKind::Res1Kdv, &eq, &u, tau, 2).unwrap();
        }
        let err = u.sub(ref_end).unwrap();
        let err_half = positive_half(&err);

        // half-spectrum defect snapshots
        let mut defect_snaps: Vec<SpectralField> = Vec::new();
        for s in 0..12u64 {
            let v = normalized_rough(n, 0.5, 77100 + s);
            let traj = reference_solve(&eq, &v, 16.0 * tau, tau / 32.0, tau).unwrap();
            for st in traj.iter().step_by(3) {
                let d = measure_defect(&eq, IntegratorKind::Res1Kdv, st, tau, tau / 64.0).unwrap();
                let h = positive_half(&d);
                let nrm = h.l2_norm();
                if nrm > 1e-14 {
                    defect_snaps.push(h.scaled(Complex64::new(1.0 / nrm, 0.0)));
                }
            }
        }
        let _ = Grid1D::new(n).unwrap();
        for k in [12usize, 16] {
            let basis = Arc::new(build_trunk_basis(&defect_snaps, k).unwrap());
            let z = basis.restrict(&err_half).unwrap();
            let proj = basis.prolong(&z).unwrap();
            let cov = proj.l2_norm().powi(2) / err_half.l2_norm().powi(2);
            println!(
                "N={n:3} half-spectrum defect basis K={k:2}: global-error coverage {:5.1}% (residual factor {:.2})",
                100.0 * cov,
                1.0 / (1.0 - cov).sqrt()
            );
        }
    }
}
