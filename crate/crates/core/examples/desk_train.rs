use hinlri_core::corrector::{build_trunk_basis, lipschitz_bound, Architecture, CorrectorParams};
use hinlri_core::equations::{EquationKind, EquationSpec};
use hinlri_core::hinlri::{HinLri, HinLriConfig};
use hinlri_core::integrators::{picard_refined_step, reference_solve, IntegratorKind};
use hinlri_core::testutil::slope;
use hinlri_core::training::*;
use std::sync::Arc;
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    let eq = EquationSpec::kdv().with_dealias_fraction(0.5).unwrap();
    let n = 64usize;
    let k = 16usize;
    let gamma = 0.5;
    let taus = [2f64.powi(-8)];

    let train_set = build_dataset(&eq, gamma, &[n], &taus, 64, 16, 10_000, 32).unwrap();
    let val_set = build_dataset(&eq, gamma, &[n], &taus, 16, 16, 20_000, 32).unwrap();
    println!("[{:6.1?}] datasets built", t0.elapsed());

    let snaps = band_selector_snapshots(hinlri_core::spectral::Grid1D::new(n).unwrap(), k);
    println!("[{:6.1?}] {} band snapshots", t0.elapsed(), snaps.len());
    let basis = Arc::new(build_trunk_basis(&snaps, k).unwrap());

    let mut cfg = TrainingConfig::desk_default(EquationKind::Kdv);
    cfg.regression_epochs = std::env::var("REG_EP").map(|v| v.parse().unwrap()).unwrap_or(0);
    cfg.epochs = std::env::var("SITL_EP").map(|v| v.parse().unwrap()).unwrap_or(0);
    let hin = HinLriConfig::new(1, 1, IntegratorKind::Res1Kdv).unwrap();

    let probe_states: Vec<_> = val_set.samples.iter().take(8).map(|s| s.u0.clone()).collect();
    let ctx = TrainContext {
        eq,
        basis: basis.clone(),
        hin,
        cfg,
        defect_probe: Some((probe_states, 2f64.powi(-8))),
    };
    let init = CorrectorParams::init(Architecture::with_depth(k, 0, 0), 2.1, 42);
    let out = train(&init, &train_set, &val_set, &ctx).unwrap();
    println!("[{:6.1?}] training done, aborted={:?}", t0.elapsed(), out.aborted);
    for e in out.log.epochs.iter() {
        if e.epoch % 10 == 9 || e.phase != "offline" {
            println!(
                "  {:7} {:3} lr {:.2e} train {:9.5} val {:9.5} L {:8.3e} defect_ratio {:.3}",
                e.phase, e.epoch, e.lr, e.train_loss, e.val_loss, e.lipschitz, e.defect_ratio
            );
        }
    }

    // (c) held-out endpoint comparison at τ=2⁻⁸, T=1
    let tau = 2f64.powi(-8);
    let solver = HinLri::new(eq, basis.clone(), out.best.clone(), hin).unwrap();
    println!("trained lipschitz bound {:.3}", lipschitz_bound(&out.best));
    let mut ratios = Vec::new();
    for s in 0..6u64 {
        let u0 = rough_initial_state(&eq, gamma, n, 90_000 + s, true).unwrap();
        let reference = reference_solve(&eq, &u0, 1.0, tau / 32.0, 1.0).unwrap();
        let ref_end = reference.last().unwrap();
        let hyb = solver.solve(&u0, 1.0, tau).unwrap();
        let e_h = hyb.last().unwrap().sub(ref_end).unwrap().l2_norm();
        let mut b = u0.clone();
        for _ in 0..256 {
            b = picard_refined_step(IntegratorKind::Res1Kdv, &eq, &b, tau, 1).unwrap();
        }
        let e_b = b.sub(ref_end).unwrap().l2_norm();
        println!("  seed {s}: base {e_b:.3e} hybrid {e_h:.3e} ratio {:.2}", e_b / e_h);
        ratios.push(e_b / e_h);
    }
    println!("[{:6.1?}] (c) improvement ratios {:?}", t0.elapsed(), ratios);

    // (d) empirical order over τ ∈ {2⁻⁵..2⁻¹⁰}
    let mut errs = Vec::new();
    let u0 = rough_initial_state(&eq, gamma, n, 95_000, true).unwrap();
    let reference = reference_solve(&eq, &u0, 1.0, 2f64.powi(-10) / 32.0, 1.0).unwrap();
    let ref_end = reference.last().unwrap();
    for p in 5..=10 {
        let tau = 2f64.powi(-p);
        let hyb = solver.solve(&u0, 1.0, tau).unwrap();
        errs.push(hyb.last().unwrap().sub(ref_end).unwrap().l2_norm());
    }
    let xs: Vec<f64> = (5..=10).map(|p| (2f64).powi(-p).ln()).collect();
    let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
    println!("(d) errors {errs:?}");
    println!("(d) empirical order {:.3}", slope(&xs, &ys));
    println!("[{:6.1?}] total", t0.elapsed());
}
