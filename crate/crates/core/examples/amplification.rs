use hinlri_core::corrector::build_trunk_basis;
use hinlri_core::equations::EquationSpec;
use hinlri_core::integrators::{measure_defect, picard_refined_step, reference_solve, IntegratorKind};
use hinlri_core::spectral::SpectralField;
use hinlri_core::training::*;
use num_complex::Complex64;
use std::sync::Arc;

fn main() {
    let eq = EquationSpec::kdv();
    let n = 64usize;
    let tau = 2f64.powi(-8);
    let u0 = rough_initial_state(&eq, 0.5, n, 90_001, true).unwrap();

    // perturbation growth of the true flow over T=1
    let mut pert = u0.clone();
    let eps = 1e-6;
    let bump = rough_initial_state(&eq, 0.5, n, 123, true).unwrap();
    pert = pert.axpy(Complex64::new(eps, 0.0), &bump).unwrap();
    let ra = reference_solve(&eq, &u0, 1.0, tau / 32.0, 0.25).unwrap();
    let rb = reference_solve(&eq, &pert, 1.0, tau / 32.0, 0.25).unwrap();
    for (i, (a, b)) in ra.iter().zip(&rb).enumerate() {
        let d = a.sub(b).unwrap().l2_norm() / (eps * bump.l2_norm());
        println!("t={:.2}: perturbation growth factor {:.2}", 0.25 * i as f64, d);
    }

    // per-step gap magnitude and its in-span share along the trajectory
    let ds = build_dataset(&eq, 0.5, &[n], &[tau], 8, 16, 10_000, 32).unwrap();
    let snaps = corrector_snapshots(&eq, IntegratorKind::Res1Kdv, &ds, 4, 64).unwrap();
    let basis = Arc::new(build_trunk_basis(&snaps, 16).unwrap());
    let mut u = u0.clone();
    let mut total_gap = 0.0;
    let mut in_span = 0.0;
    for s in 0..256 {
        let refined = picard_refined_step(IntegratorKind::Res1Kdv, &eq, &u, tau, 2).unwrap();
        if s % 32 == 0 {
            let d = measure_defect(&eq, IntegratorKind::Res1Kdv, &u, tau, tau / 64.0).unwrap();
            let base = hinlri_core::integrators::step(IntegratorKind::Res1Kdv, &eq, &u, tau).unwrap();
            let gap = d.add(&base.sub(&refined).unwrap()).unwrap();
            let z = basis.restrict(&positive_half_pub(&gap)).unwrap();
            let proj = basis.prolong(&z).unwrap();
            let g2 = gap.l2_norm().powi(2);
            // in-span share after Hermitian reconstruction: positive-half analysis
            let gp = positive_half_pub(&gap);
            let cov = proj.l2_norm().powi(2) / gp.l2_norm().powi(2);
            println!("step {s:3}: |gap| {:.3e}, half-spectrum span share {:.1}%", g2.sqrt(), 100.0 * cov);
            total_gap += g2;
            in_span += cov * g2;
        }
        u = refined;
    }
    println!("avg in-span share {:.1}%", 100.0 * in_span / total_gap);
}

fn positive_half_pub(f: &SpectralField) -> SpectralField {
    hinlri_core::training::positive_half(f)
}
