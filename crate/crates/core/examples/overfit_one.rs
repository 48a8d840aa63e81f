use hinlri_core::corrector::{build_trunk_basis, spectral_normalize, Architecture, CorrectorParams};
use hinlri_core::equations::EquationSpec;
use hinlri_core::hinlri::HinLriConfig;
use hinlri_core::integrators::IntegratorKind;
use hinlri_core::tape::Tape;
use hinlri_core::training::*;
use std::sync::Arc;

fn main() {
    let eq = EquationSpec::kdv().with_dealias_fraction(0.5).unwrap();
    let tau = 2f64.powi(-8);
    let ds = build_dataset(&eq, 0.5, &[64], &[tau], 4, 8, 10_000, 32).unwrap();
    let snaps = corrector_snapshots(&eq, IntegratorKind::Res1Kdv, &ds, 2, 64).unwrap();
    let basis = Arc::new(build_trunk_basis(&snaps, 16).unwrap());
    let hin = HinLriConfig::default_for(IntegratorKind::Res1Kdv).unwrap();
    let mut params = CorrectorParams::init(Architecture::new(16), 1.35, 42);
    let sample = &ds.samples[0];

    // plain GD, fixed step, one sample
    let mut gd_lr = 1e-2f64;
    for it in 0..400 {
        let mut tape = Tape::new(&params);
        let node = t_sample_loss(&mut tape, sample, &eq, &basis, hin, 8, -0.5).unwrap();
        let loss = tape.value(node).as_s();
        let g = tape.backward(node).unwrap().flatten();
        let gn: f64 = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if it % 40 == 0 {
            println!("iter {it:3}: loss {loss:.6e} |g| {gn:.3e} gd_lr {gd_lr:.1e}");
        }
        // normalized GD step: move a fixed parameter distance per iteration
        let mut theta = params.flatten();
        let step = gd_lr / gn.max(1e-30);
        for (t, gi) in theta.iter_mut().zip(&g) {
            *t -= step * gi;
        }
        params.unflatten(&theta).unwrap();
        params = spectral_normalize(&params);
        if it % 100 == 99 {
            gd_lr *= 0.5;
        }
    }
    let mut tape = Tape::new(&params);
    let node = t_sample_loss(&mut tape, sample, &eq, &basis, hin, 8, -0.5).unwrap();
    println!("final loss {:.6e}", tape.value(node).as_s());
}
