use hinlri_core::corrector::{build_trunk_basis, TrunkBasis};
use hinlri_core::equations::EquationSpec;
use hinlri_core::integrators::{measure_defect, picard_refined_step, IntegratorKind};
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

fn main() {
    let eq = EquationSpec::kdv().with_dealias_fraction(0.5).unwrap();
    let n = 64usize;
    let tau = 2f64.powi(-8);
    let unroll = 16usize;
    let ds = build_dataset(&eq, 0.5, &[n], &[tau], 4, unroll, 10_000, 32).unwrap();
    let snaps = corrector_snapshots(&eq, IntegratorKind::Res1Kdv, &ds, 4, 64).unwrap();
    let basis: Arc<TrunkBasis> = Arc::new(build_trunk_basis(&snaps, 16).unwrap());
    let grid = Grid1D::new(n).unwrap();
    let _ = grid;
    let sym = eq.symbol();
    let cfg = BourgainNormConfig::new(unroll as f64 * tau, 2 * unroll).unwrap();
    let queries: Vec<f64> = (0..2 * unroll).map(|l| l as f64 * tau / 2.0).collect();

    let (mut lb, mut lf, mut lo) = (0.0, 0.0, 0.0);
    // endpoint-only variants (cadence τ): loss on N_t samples
    let cfg_end = BourgainNormConfig::new(unroll as f64 * tau, unroll).unwrap();
    let (mut lb_end, mut lo_end) = (0.0, 0.0);
    for sample in &ds.samples {
        let truth: Vec<SpectralField> = sample.truth[..2 * unroll].to_vec();
        let truth_end: Vec<SpectralField> = sample.truth.iter().step_by(2).take(unroll).cloned().collect();
        // base trajectory
        let mut base = vec![sample.u0.clone()];
        let mut orac = vec![sample.u0.clone()];
        for i in 0..unroll {
            base.push(picard_refined_step(IntegratorKind::Res1Kdv, &eq, &base[i], tau, 2).unwrap());
            let ro = picard_refined_step(IntegratorKind::Res1Kdv, &eq, &orac[i], tau, 2).unwrap();
            let d = measure_defect(&eq, IntegratorKind::Res1Kdv, &orac[i], tau, tau / 64.0).unwrap();
            let b = hinlri_core::integrators::step(IntegratorKind::Res1Kdv, &eq, &orac[i], tau).unwrap();
            let gap = d.add(&b.sub(&ro).unwrap()).unwrap();
            let mut z = basis.restrict(&gap).unwrap();
            for v in z.iter_mut() { *v *= 2.0; }
            orac.push(ro.add(&herm(&basis.prolong(&z).unwrap())).unwrap());
        }
        let exact: Vec<SpectralField> = sample.truth.iter().step_by(2).cloned().collect();
        let rb = reconstruct_trajectory(&base, tau, &sym, &queries).unwrap();
        let rf = reconstruct_trajectory(&exact, tau, &sym, &queries).unwrap();
        let ro = reconstruct_trajectory(&orac, tau, &sym, &queries).unwrap();
        lb += bourgain_loss(&rb, &truth, &cfg, -0.5, &sym).unwrap();
        lf += bourgain_loss(&rf, &truth, &cfg, -0.5, &sym).unwrap();
        lo += bourgain_loss(&ro, &truth, &cfg, -0.5, &sym).unwrap();
        // endpoint-only losses (reconstruction-free)
        let base_states: Vec<SpectralField> = base[..unroll].to_vec();
        let orac_states: Vec<SpectralField> = orac[..unroll].to_vec();
        lb_end += bourgain_loss(&base_states, &truth_end, &cfg_end, -0.5, &sym).unwrap();
        lo_end += bourgain_loss(&orac_states, &truth_end, &cfg_end, -0.5, &sym).unwrap();
    }
    println!("midpoint cadence: base {:.5e} floor {:.5e} oracle {:.5e}", lb / 4.0, lf / 4.0, lo / 4.0);
    println!("  floor share of base loss: {:.1}%", 100.0 * lf / lb);
    println!("  oracle reduction vs base: {:.1}x", lb / lo);
    println!("endpoint cadence: base {:.5e} oracle {:.5e} ({:.1}x, floor exactly 0)", lb_end / 4.0, lo_end / 4.0, lb_end / lo_end);
}
