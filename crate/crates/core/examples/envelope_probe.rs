use hinlri_core::diagnostics::{convergence_study, log_envelope_test, ClassicalStepper};
use hinlri_core::equations::EquationSpec;
use hinlri_core::integrators::IntegratorKind;

fn main() {
    let kdv = EquationSpec::kdv();
    let taus: Vec<f64> = (4..=9).map(|p| (2f64).powi(-p)).collect();
    let res1 = ClassicalStepper::new(IntegratorKind::Res1Kdv, kdv);
    for n in [64usize, 128] {
        // unnormalized rough data per the sampling definition
        let report = {
            // convergence_study normalizes; build the study manually
            use hinlri_core::integrators::{reference_solve, solve_classical, PicardConfig};
            use hinlri_core::rough::{sample_rough_field, RoughFieldSpec};
            use hinlri_core::spectral::Reality;
            let mut sums = vec![0.0; taus.len()];
            for seed in [7u64, 8, 9] {
                let spec = RoughFieldSpec::new(0.5, n, seed, Reality::RealValued).unwrap();
                let u0 = sample_rough_field(&spec);
                let reference = reference_solve(&kdv, &u0, 1.0, taus[5] / 32.0, 1.0).unwrap();
                let ref_end = reference.last().unwrap();
                for (i, &tau) in taus.iter().enumerate() {
                    let traj = solve_classical(IntegratorKind::Res1Kdv, &kdv, &u0, 1.0, tau, &PicardConfig::default()).unwrap();
                    sums[i] += traj.last().unwrap().sub(ref_end).unwrap().l2_norm() / 3.0;
                }
            }
            hinlri_core::diagnostics::ConvergenceReport::from_errors(taus.clone(), sums).unwrap()
        };
        let (class, ratio) = log_envelope_test(&report, 0.5);
        println!(
            "N={n} unnormalized: errors {:?}\n  order {:.3}, envelope {class:?} (ratio {ratio:.3})",
            report.errors, report.empirical_order
        );
    }
    let _ = res1;
    // also the normalized variant through the study API for comparison
    let report = convergence_study(
        &ClassicalStepper::new(IntegratorKind::Res1Kdv, kdv),
        &kdv, 0.5, &taus, 64, 1.0, &[7, 8, 9], taus[5] / 32.0,
    ).unwrap();
    let (class, ratio) = log_envelope_test(&report, 0.5);
    println!("N=64 normalized: order {:.3}, envelope {class:?} (ratio {ratio:.3})", report.empirical_order);
}
