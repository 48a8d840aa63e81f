use hinlri_core::corrector::{build_trunk_basis, spectral_normalize, Architecture, CorrectorParams, TensorRole};
use hinlri_core::equations::EquationSpec;
use hinlri_core::hinlri::HinLriConfig;
use hinlri_core::integrators::IntegratorKind;
use hinlri_core::tape::Tape;
use hinlri_core::training::*;
use std::sync::Arc;

fn run(freeze_scaling: bool, lr: f64, iters: usize) {
    let eq = EquationSpec::kdv().with_dealias_fraction(0.5).unwrap();
    let tau = 2f64.powi(-8);
    let ds = build_dataset(&eq, 0.5, &[64], &[tau], 4, 8, 10_000, 32).unwrap();
    let snaps = corrector_snapshots(&eq, IntegratorKind::Res1Kdv, &ds, 2, 64).unwrap();
    let basis = Arc::new(build_trunk_basis(&snaps, 16).unwrap());
    let hin = HinLriConfig::default_for(IntegratorKind::Res1Kdv).unwrap();
    let mut params = CorrectorParams::init(Architecture::new(16), 1.35, 42);
    let sample = &ds.samples[0];
    let mut opt = AdamW::new(params.total_len(), 0.0);

    // identify scaling-net tensor ranges for freezing
    let mut offsets = vec![0usize];
    for i in 0..params.n_tensors() {
        offsets.push(offsets[i] + params.tensor(i).data.len());
    }
    let scaling_ranges: Vec<(usize, usize)> = (0..params.n_tensors())
        .filter(|&i| {
            matches!(
                params.tensor_infos()[i].name.as_str(),
                s if s.starts_with("Scale")
            )
        })
        .map(|i| (offsets[i], offsets[i + 1]))
        .collect();

    let mut first = 0.0;
    for it in 0..iters {
        let mut tape = Tape::new(&params);
        let node = t_sample_loss(&mut tape, sample, &eq, &basis, hin, 8, -0.5).unwrap();
        let loss = tape.value(node).as_s();
        if it == 0 {
            first = loss;
        }
        if it % 250 == 0 {
            println!("  iter {it:4}: loss {loss:.6e}");
        }
        let mut g = tape.backward(node).unwrap().flatten();
        if freeze_scaling {
            for &(a, b) in &scaling_ranges {
                g[a..b].iter_mut().for_each(|v| *v = 0.0);
            }
        }
        let mut theta = params.flatten();
        opt.update(&mut theta, &g, lr);
        params.unflatten(&theta).unwrap();
        params = spectral_normalize(&params);
    }
    let mut tape = Tape::new(&params);
    let node = t_sample_loss(&mut tape, sample, &eq, &basis, hin, 8, -0.5).unwrap();
    let fin = tape.value(node).as_s();
    println!("freeze_scaling={freeze_scaling} lr={lr:.0e}: {first:.4e} -> {fin:.4e} ({:.1}x)", first / fin);
}

fn main() {
    run(true, 3e-4, 1500);
    run(false, 3e-4, 1500);
}
