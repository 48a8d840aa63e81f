use hinlri_core::corrector::{build_trunk_basis, Architecture, CorrectorParams};
use hinlri_core::equations::{EquationKind, EquationSpec};
use hinlri_core::hinlri::HinLriConfig;
use hinlri_core::integrators::IntegratorKind;
use hinlri_core::rng::SplitMix64;
use hinlri_core::tape::Tape;
use hinlri_core::training::*;
use std::sync::Arc;

fn main() {
    // full SITL loss gradient vs central differences: N=64, N_t=4, K=8
    let eq = EquationSpec::kdv();
    let tau = 2f64.powi(-8);
    let ds = build_dataset(&eq, 0.5, &[64], &[tau], 4, 4, 7_000, 32).unwrap();
    let snaps = corrector_snapshots(&eq, IntegratorKind::Res1Kdv, &ds, 2, 64).unwrap();
    let basis = Arc::new(build_trunk_basis(&snaps, 8).unwrap());
    let hin = HinLriConfig::default_for(IntegratorKind::Res1Kdv).unwrap();

    let mut params = CorrectorParams::init(Architecture::new(8), 2.1, 5);
    // non-degenerate point: fill the zero-initialised output layers
    let mut rng = SplitMix64::new(11);
    for role in [
        hinlri_core::corrector::TensorRole::DecWeight(params.arch().dec_hidden),
        hinlri_core::corrector::TensorRole::ScaleWeight(2),
    ] {
        let idx = params.index_of(role);
        for v in params.tensor_mut(idx).data.iter_mut() {
            *v = 0.05 * rng.next_gaussian();
        }
    }

    let loss_of = |p: &CorrectorParams| -> f64 {
        sample_loss_value(p, &ds.samples[0], &eq, &basis, hin, 4, -0.5).unwrap()
    };

    let mut tape = Tape::new(&params);
    let node = t_sample_loss(&mut tape, &ds.samples[0], &eq, &basis, hin, 4, -0.5).unwrap();
    println!("loss {}", tape.value(node).as_s());
    let g = tape.backward(node).unwrap().flatten();
    let gn: f64 = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    println!("grad norm {gn:.6e}, tape nodes {}", tape.len());

    let theta0 = params.flatten();
    let h = 1e-6;
    let mut worst = 0.0f64;
    let mut worst_dir = 0usize;
    for d in 0..50 {
        let mut dir = vec![0.0; theta0.len()];
        let mut drng = SplitMix64::keyed(999, d as u64);
        for v in dir.iter_mut() {
            *v = drng.next_gaussian();
        }
        let dn: f64 = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        dir.iter_mut().for_each(|v| *v /= dn);

        let mut pp = params.clone();
        let tp: Vec<f64> = theta0.iter().zip(&dir).map(|(a, b)| a + h * b).collect();
        pp.unflatten(&tp).unwrap();
        let lp = loss_of(&pp);
        let tm: Vec<f64> = theta0.iter().zip(&dir).map(|(a, b)| a - h * b).collect();
        pp.unflatten(&tm).unwrap();
        let lm = loss_of(&pp);
        let fd = (lp - lm) / (2.0 * h);
        let an: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
        let rel = (an - fd).abs() / fd.abs().max(1e-12);
        if rel > worst {
            worst = rel;
            worst_dir = d;
        }
    }
    println!("worst relative error over 50 directions: {worst:.3e} (dir {worst_dir})");
    // h-scaling on the worst direction: truncation error should fall ~h²
    {
        let mut dir = vec![0.0; theta0.len()];
        let mut drng = SplitMix64::keyed(999, worst_dir as u64);
        for v in dir.iter_mut() { *v = drng.next_gaussian(); }
        let dn: f64 = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        dir.iter_mut().for_each(|v| *v /= dn);
        let an: f64 = g.iter().zip(&dir).map(|(a, b)| a * b).sum();
        for h in [1e-5f64, 3e-6, 1e-6, 3e-7] {
            let mut pp = params.clone();
            let tp: Vec<f64> = theta0.iter().zip(&dir).map(|(a, b)| a + h * b).collect();
            pp.unflatten(&tp).unwrap();
            let lp = loss_of(&pp);
            let tm: Vec<f64> = theta0.iter().zip(&dir).map(|(a, b)| a - h * b).collect();
            pp.unflatten(&tm).unwrap();
            let lm = loss_of(&pp);
            let fd = (lp - lm) / (2.0 * h);
            println!("  h={h:.0e}: rel err {:.3e}", (an - fd).abs() / fd.abs().max(1e-12));
        }
    }
    let _ = EquationKind::Kdv;
}
// (appended) h-scaling study of the worst direction happens in main2 — quick hack: rerun via env var
