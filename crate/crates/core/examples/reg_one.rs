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
    let ds = build_dataset(&eq, 0.5, &[64], &[tau], 4, 4, 10_000, 32).unwrap();
    let snaps = corrector_snapshots(&eq, IntegratorKind::Res1Kdv, &ds, 2, 64).unwrap();
    let basis = Arc::new(build_trunk_basis(&snaps, 16).unwrap());
    let hin = HinLriConfig::default_for(IntegratorKind::Res1Kdv).unwrap();
    let items = build_regression_items(&eq, hin, &ds, 64).unwrap();
    println!("{} items, gap norms: {:?}", items.len(), items.iter().take(4).map(|i| i.gap_norm).collect::<Vec<_>>());
    let mut params = CorrectorParams::init(Architecture::with_depth(16, 1, 0), 2.1, 42);
    let mut opt = AdamW::new(params.total_len(), 1e-4);
    opt.eps = 1e-4;
    for it in 0..1500 {
        let mut grad = hinlri_core::tape::ParamGrads::zeros(&params);
        let mut loss_sum = 0.0;
        for item in &items {
            let mut tape = Tape::new(&params);
            let node = t_regression_loss(&mut tape, item, &basis, eq.reality()).unwrap();
            loss_sum += tape.value(node).as_s();
            let g = tape.backward(node).unwrap();
            grad.add_scaled(&g, 1.0 / items.len() as f64);
        }
        if it % 150 == 0 || it == 1499 {
            let infos = params.tensor_infos();
            let mut capped = Vec::new();
            for i in 0..params.n_tensors() {
                let t = params.tensor(i);
                if t.cols > 1 {
                    let nrm = hinlri_core::corrector::spectral_norm_estimate(t);
                    if nrm > 2.09 {
                        capped.push(format!("{}:{:.2}", infos[i].name, nrm));
                    }
                }
            }
            println!("iter {it:4}: mean rel loss {:.6e} capped: {:?}", loss_sum / items.len() as f64, capped);
        }
        let mut theta = params.flatten();
        opt.update(&mut theta, &grad.flatten(), 1e-3);
        params.unflatten(&theta).unwrap();
        if std::env::var("NO_SN").is_err() {
            params = spectral_normalize(&params);
        }
    }
    params = spectral_normalize(&params);
    {
        let mut tape = Tape::new(&params);
        let mut tot = 0.0;
        for item in &items {
            let node = t_regression_loss(&mut tape, item, &basis, eq.reality()).unwrap();
            tot += tape.value(node).as_s();
        }
        println!("after final normalize: mean rel loss {:.4e}", tot / items.len() as f64);
    }
    // per-item final
    for (i, item) in items.iter().enumerate().take(8) {
        let mut tape = Tape::new(&params);
        let node = t_regression_loss(&mut tape, item, &basis, eq.reality()).unwrap();
        println!("  item {i}: rel loss {:.3e}", tape.value(node).as_s());
    }
}
