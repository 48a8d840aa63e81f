use hinlri_core::corrector::{build_trunk_basis, Architecture, CorrectorParams};
use hinlri_core::equations::{EquationKind, EquationSpec};
use hinlri_core::hinlri::HinLriConfig;
use hinlri_core::integrators::IntegratorKind;
use hinlri_core::training::*;
use std::sync::Arc;

fn main() {
    let eq = EquationSpec::kdv().with_dealias_fraction(0.5).unwrap();
    let n = 64usize;
    let k = 16usize;
    let gamma = 0.5;
    let taus = [2f64.powi(-5), 2f64.powi(-6), 2f64.powi(-7), 2f64.powi(-8), 2f64.powi(-9), 2f64.powi(-10)];
    let train_set = build_dataset(&eq, gamma, &[n], &taus, 32, 16, 10_000, 32).unwrap();
    let val_set = build_dataset(&eq, gamma, &[n], &taus, 8, 16, 20_000, 32).unwrap();
    let snaps = corrector_snapshots(&eq, IntegratorKind::Res1Kdv, &train_set, 4, 64).unwrap();
    let basis = Arc::new(build_trunk_basis(&snaps, k).unwrap());
    let hin = HinLriConfig::default_for(IntegratorKind::Res1Kdv).unwrap();
    let probe_states: Vec<_> = val_set.samples.iter().take(6).map(|s| s.u0.clone()).collect();

    for &(lr, batch, epochs) in &[
        (1e-4f64, 8usize, 16usize),
        (3e-4, 8, 16),
        (1e-3, 8, 16),
        (3e-3, 8, 16),
    ] {
        let mut cfg = TrainingConfig::desk_default(EquationKind::Kdv);
        cfg.epochs = epochs;
        cfg.batch = batch;
        cfg.lr = lr;
        let ctx = TrainContext {
            eq,
            basis: basis.clone(),
            hin,
            cfg,
            defect_probe: Some((probe_states.clone(), 2f64.powi(-8))),
        };
        let init = CorrectorParams::init(Architecture::new(k), 1.35, 42);
        let out = train(&init, &train_set, &val_set, &ctx).unwrap();
        let first = &out.log.epochs[0];
        let last = out.log.epochs.last().unwrap();
        let best_val = out.log.epochs.iter().map(|e| e.val_loss).fold(f64::INFINITY, f64::min);
        let best_dr = out.log.epochs.iter().map(|e| e.defect_ratio).fold(f64::INFINITY, f64::min);
        println!(
            "lr {lr:.0e} batch {batch:2} epochs {epochs:2}: val {:.4}→{:.4} (best {:.4}) | defect_ratio {:.2}→{:.2} (best {:.2}) | L {:.2}",
            first.val_loss, last.val_loss, best_val, first.defect_ratio, last.defect_ratio, best_dr, last.lipschitz
        );
    }
}
