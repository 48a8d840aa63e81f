use hinlri_core::corrector::{build_trunk_basis, TrunkBasis};
use hinlri_core::equations::EquationSpec;
use hinlri_core::integrators::{measure_defect, picard_refined_step, reference_solve, IntegratorKind};
use hinlri_core::spectral::{Reality, SpectralField};
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

fn oracle_traj(
    eq: &EquationSpec,
    basis: &Arc<TrunkBasis>,
    u0: &SpectralField,
    steps: usize,
    tau: f64,
    use_oracle: bool,
) -> Vec<SpectralField> {
    let mut states = vec![u0.clone()];
    for n in 0..steps {
        let u = &states[n];
        let refined = picard_refined_step(IntegratorKind::Res1Kdv, eq, u, tau, 2).unwrap();
        let next = if use_oracle {
            let d = measure_defect(eq, IntegratorKind::Res1Kdv, u, tau, tau / 64.0).unwrap();
            let base = hinlri_core::integrators::step(IntegratorKind::Res1Kdv, eq, u, tau).unwrap();
            let gap = d.add(&base.sub(&refined).unwrap()).unwrap();
            let z = basis.restrict(&gap).unwrap();
            let proj = herm(&basis.prolong(&z).unwrap());
            refined.add(&proj).unwrap()
        } else {
            refined
        };
        states.push(next);
    }
    states
}

fn main() {
    let eq = EquationSpec::kdv();
    let n = 64usize;
    let tau = 2f64.powi(-8);
    let unroll = 16usize;
    let ds = build_dataset(&eq, 0.5, &[n], &[tau], 8, unroll, 10_000, 32).unwrap();
    let snaps = corrector_snapshots(&eq, IntegratorKind::Res1Kdv, &ds, 4, 64).unwrap();
    let basis = Arc::new(build_trunk_basis(&snaps, 16).unwrap());
    let sym = eq.symbol();
    let cfg = BourgainNormConfig::new(unroll as f64 * tau, 2 * unroll).unwrap();
    let queries: Vec<f64> = (0..2 * unroll).map(|l| l as f64 * tau / 2.0).collect();

    // window loss: base vs oracle-corrected
    let mut lb = 0.0;
    let mut lo = 0.0;
    for sample in ds.samples.iter().take(4) {
        let truth: Vec<SpectralField> = sample.truth[..2 * unroll].to_vec();
        let base = oracle_traj(&eq, &basis, &sample.u0, unroll, tau, false);
        let orac = oracle_traj(&eq, &basis, &sample.u0, unroll, tau, true);
        let rb = reconstruct_trajectory(&base, tau, &sym, &queries).unwrap();
        let ro = reconstruct_trajectory(&orac, tau, &sym, &queries).unwrap();
        lb += bourgain_loss(&rb, &truth, &cfg, -0.5, &sym).unwrap();
        lo += bourgain_loss(&ro, &truth, &cfg, -0.5, &sym).unwrap();
    }
    println!("window loss: base {:.5} oracle {:.5} (ratio {:.2})", lb / 4.0, lo / 4.0, lb / lo);

    // endpoint error at T=1
    let u0 = rough_initial_state(&eq, 0.5, n, 90_001, true).unwrap();
    let reference = reference_solve(&eq, &u0, 1.0, tau / 32.0, 1.0).unwrap();
    let ref_end = reference.last().unwrap();
    let steps = 256usize;
    let base = oracle_traj(&eq, &basis, &u0, steps, tau, false);
    let orac = oracle_traj(&eq, &basis, &u0, steps, tau, true);
    let eb = base.last().unwrap().sub(ref_end).unwrap().l2_norm();
    let eo = orac.last().unwrap().sub(ref_end).unwrap().l2_norm();
    println!("T=1 endpoint: base {eb:.3e} oracle {eo:.3e} (ratio {:.2})", eb / eo);
}
