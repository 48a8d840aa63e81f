use hinlri_core::corrector::{build_trunk_basis, Architecture, CorrectorParams};
use hinlri_core::equations::EquationSpec;
use hinlri_core::hinlri::HinLriConfig;
use hinlri_core::integrators::IntegratorKind;
use hinlri_core::spectral::Grid1D;
use hinlri_core::training::*;
use std::sync::Arc;
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    let eq = EquationSpec::kdv().with_dealias_fraction(0.5).unwrap();
    let taus = [2f64.powi(-8)];
    let train_ds = build_dataset(&eq, 0.5, &[64], &taus, 64, 16, 10_000, 32).unwrap();
    let val_ds = build_dataset(&eq, 0.5, &[64], &taus, 8, 16, 20_000, 32).unwrap();
    let hin = HinLriConfig::new(1, 1, IntegratorKind::Res1Kdv).unwrap();
    let snaps = band_selector_snapshots(Grid1D::new(64).unwrap(), 16);
    let basis = Arc::new(build_trunk_basis(&snaps, 16).unwrap());
    let states: Vec<_> = train_ds.samples.iter().map(|s| (s.u0.clone(), s.tau)).collect();
    let items = regression_items_along_trajectory(&eq, hin, &states, 128, 24, 64).unwrap();
    let val_items = build_regression_items(&eq, hin, &val_ds, 64).unwrap();
    println!("[{:.1?}] {} items", t0.elapsed(), items.len());

    // stage-1 sanity: unrestricted kernel + linear map fit quality,
    // computed directly from the latents
    {
        use nalgebra::{DMatrix, DVector};
        use num_complex::Complex64;
        let k = 16usize;
        let ki = k as i64;
        let arch = Architecture::with_depth(16, 0, 0);
        let params = CorrectorParams::init(arch, 2.1, 42);
        let mut zs = Vec::new();
        let mut tgt = Vec::new();
        for item in &items {
            let lam = params.scale_estimate(&item.u_n);
            let r_c = basis.restrict(&item.residual.scaled(Complex64::new(1.0 / lam, 0.0))).unwrap();
            let u_c = basis.restrict(&item.u_n.scaled(Complex64::new(1.0 / lam, 0.0))).unwrap();
            zs.push(params.encoder_latent(&r_c, &u_c, item.tau).unwrap());
            let g_c = basis.restrict(&item.gap).unwrap();
            tgt.push(g_c.iter().map(|&g| 2.0 * g / (item.tau * lam)).collect::<Vec<_>>());
        }
        let zt = |z: &[Complex64], j: i64| -> Complex64 {
            if j == 0 || j.unsigned_abs() as usize > k {
                Complex64::new(0.0, 0.0)
            } else if j > 0 {
                z[(j - 1) as usize]
            } else {
                z[(-j - 1) as usize].conj()
            }
        };
        let (mut num, mut den) = (0.0, 0.0);
        for out in 0..k {
            let kout = (out + 1) as i64;
            let pairs: Vec<(i64, i64)> = (-ki..=ki)
                .filter_map(|k1| {
                    let k2 = kout - k1;
                    (k1 != 0 && k2 != 0 && k2.abs() <= ki && k1 <= k2).then_some((k1, k2))
                })
                .collect();
            let rows = items.len();
            let mut a = DMatrix::<Complex64>::zeros(rows, pairs.len() + k);
            let mut b = DVector::<Complex64>::zeros(rows);
            for (i, z) in zs.iter().enumerate() {
                for (c, &(k1, k2)) in pairs.iter().enumerate() {
                    a[(i, c)] = zt(z, k1) * zt(z, k2);
                }
                for j in 0..k {
                    a[(i, pairs.len() + j)] = z[j];
                }
                b[i] = tgt[i][out];
            }
            let sol = a.clone().svd(true, true).solve(&b, 1e-10).unwrap();
            let pred = &a * &sol;
            for i in 0..rows {
                num += (pred[i] - b[i]).norm_sqr();
                den += b[i].norm_sqr();
            }
        }
        println!("stage-1 direct train rel (amplitude) {:.4}", (num / den).sqrt());
    }

    for ridge in [1e-2f64, 3e-2, 1e-1] {
        for heads in [8usize] {
            let mut arch = Architecture::with_depth(16, 0, 0);
            arch.quad_heads = heads;
            let mut params = CorrectorParams::init(arch, 2.1, 42);
            offline_mixing_fit_with(&mut params, &items, &basis, 6, ridge).unwrap();
            let tr = regression_loss_value(&params, &items, &basis, eq.reality()).unwrap();
            let va = regression_loss_value(&params, &val_items, &basis, eq.reality()).unwrap();
            let l = hinlri_core::corrector::lipschitz_bound(&params);
            println!(
                "[{:.1?}] ridge={ridge:.0e} heads={heads}: train rel {tr:.4} val rel {va:.4} L {l:.2} (τL at 2^-5: {:.3})",
                t0.elapsed(),
                l * 2f64.powi(-5)
            );
        }
    }
}
