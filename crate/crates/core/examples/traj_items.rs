use hinlri_core::corrector::{build_trunk_basis, spectral_normalize, Architecture, CorrectorParams};
use hinlri_core::equations::EquationSpec;
use hinlri_core::hinlri::HinLriConfig;
use hinlri_core::integrators::IntegratorKind;
use hinlri_core::rng::SplitMix64;
use hinlri_core::tape::{ParamGrads, Tape};
use hinlri_core::training::*;
use std::sync::Arc;
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    let eq = EquationSpec::kdv().with_dealias_fraction(0.5).unwrap();
    let taus = [2f64.powi(-5), 2f64.powi(-6), 2f64.powi(-7), 2f64.powi(-8), 2f64.powi(-9), 2f64.powi(-10)];
    let hin = HinLriConfig::new(1, 1, IntegratorKind::Res1Kdv).unwrap();

    let mut train_states = Vec::new();
    for i in 0..64u64 {
        let tau = taus[i as usize % taus.len()];
        train_states.push((rough_initial_state(&eq, 0.5, 64, 10_000 + i, true).unwrap(), tau));
    }
    let mut val_states = Vec::new();
    for i in 0..8u64 {
        let tau = taus[i as usize % taus.len()];
        val_states.push((rough_initial_state(&eq, 0.5, 64, 20_000 + i, true).unwrap(), tau));
    }
    // horizon ~T=0.5 at each τ: steps = 0.5/τ capped at 128
    let items: Vec<RegressionItem> = {
        let mut v = Vec::new();
        for (u0, tau) in &train_states {
            let steps = ((0.5 / tau) as usize).min(128);
            v.extend(regression_items_along_trajectory(&eq, hin, &[(u0.clone(), *tau)], steps, 24, 64).unwrap());
        }
        v
    };
    let val_items: Vec<RegressionItem> = {
        let mut v = Vec::new();
        for (u0, tau) in &val_states {
            let steps = ((0.5 / tau) as usize).min(128);
            v.extend(regression_items_along_trajectory(&eq, hin, &[(u0.clone(), *tau)], steps, 12, 64).unwrap());
        }
        v
    };
    println!("[{:.1?}] {} train items, {} val items", t0.elapsed(), items.len(), val_items.len());

    let snaps_ds = build_dataset(&eq, 0.5, &[64], &taus, 16, 16, 10_000, 32).unwrap();
    let snaps = corrector_snapshots(&eq, IntegratorKind::Res1Kdv, &snaps_ds, 4, 64).unwrap();
    let basis = Arc::new(build_trunk_basis(&snaps, 16).unwrap());

    for width in [128usize, 320] {
        let mut arch = Architecture::with_depth(16, 1, 0);
        arch.hidden = width;
        let mut params = CorrectorParams::init(arch, 2.1, 42);
        let mut opt = AdamW::new(params.total_len(), 1e-4);
        let mut rng = SplitMix64::new(1);
        let batch = 32;
        let epochs = 150;
        for epoch in 0..epochs {
            let lr = cosine_lr(1e-3, epoch, epochs);
            let mut order: Vec<usize> = (0..items.len()).collect();
            for i in (1..order.len()).rev() {
                let j = (rng.next_u64() % (i as u64 + 1)) as usize;
                order.swap(i, j);
            }
            for chunk in order.chunks(batch) {
                let mut grad = ParamGrads::zeros(&params);
                for &ii in chunk {
                    let mut tape = Tape::new(&params);
                    let node = t_regression_loss(&mut tape, &items[ii], &basis, eq.reality()).unwrap();
                    let g = tape.backward(node).unwrap();
                    grad.add_scaled(&g, 1.0 / chunk.len() as f64);
                }
                let mut theta = params.flatten();
                opt.update(&mut theta, &grad.flatten(), lr);
                params.unflatten(&theta).unwrap();
                params = spectral_normalize(&params);
            }
        }
        let tr = regression_loss_value(&params, &items, &basis, eq.reality()).unwrap();
        let va = regression_loss_value(&params, &val_items, &basis, eq.reality()).unwrap();
        println!(
            "[{:.1?}] width {width}: train rel {tr:.4} val rel {va:.4} L {:.2}",
            t0.elapsed(),
            hinlri_core::corrector::lipschitz_bound(&params)
        );
    }
}
