use hinlri_core::corrector::{build_trunk_basis, spectral_normalize, Architecture, CorrectorParams};
use hinlri_core::equations::EquationSpec;
use hinlri_core::hinlri::HinLriConfig;
use hinlri_core::integrators::IntegratorKind;
use hinlri_core::rng::SplitMix64;
use hinlri_core::tape::{ParamGrads, Tape};
use hinlri_core::training::*;
use std::sync::Arc;

fn main() {
    let eq = EquationSpec::kdv().with_dealias_fraction(0.5).unwrap();
    let taus = [2f64.powi(-5), 2f64.powi(-6), 2f64.powi(-7), 2f64.powi(-8), 2f64.powi(-9), 2f64.powi(-10)];
    let train_ds = build_dataset(&eq, 0.5, &[64], &taus, 64, 16, 10_000, 32).unwrap();
    let val_ds = build_dataset(&eq, 0.5, &[64], &taus, 8, 16, 20_000, 32).unwrap();
    let hin = HinLriConfig::default_for(IntegratorKind::Res1Kdv).unwrap();
    let snaps = band_selector_snapshots(hinlri_core::spectral::Grid1D::new(64).unwrap(), 16);
    let basis = Arc::new(build_trunk_basis(&snaps, 16).unwrap());
    let items = build_regression_items(&eq, hin, &train_ds, 64).unwrap();
    let val_items = build_regression_items(&eq, hin, &val_ds, 64).unwrap();
    println!("{} train items, {} val items", items.len(), val_items.len());

    for (eh, dh, hidden, heads, epochs, lr) in [
        (0usize, 0usize, 128usize, 8usize, 200usize, 2e-3f64),
    ] {
        let mut arch = Architecture::with_depth(16, eh, dh);
        arch.hidden = hidden;
        arch.quad_heads = heads;
        let mut params = CorrectorParams::init(arch, 2.1, 42);
        // wake the head gradient path: decoder starts at the identity
        {
            let idx = params.index_of(hinlri_core::corrector::TensorRole::DecWeight(arch.dec_hidden));
            let t = params.tensor_mut(idx);
            let cols = t.cols;
            for r in 0..t.rows.min(cols) {
                t.data[r * cols + r] = 1.0;
            }
        }
        let mut opt = AdamW::new(params.total_len(), 1e-4);
        let mut rng = SplitMix64::new(1);
        let batch = 32;
        for _epoch in 0..epochs {
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
            "enc_hidden={eh} dec_hidden={dh} width={hidden} heads={heads} params={}: train rel {tr:.4} val rel {va:.4} L={:.2}",
            params.parameter_count(),
            hinlri_core::corrector::lipschitz_bound(&params)
        );
    }
}
