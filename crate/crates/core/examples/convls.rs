use hinlri_core::equations::EquationSpec;
use hinlri_core::hinlri::HinLriConfig;
use hinlri_core::integrators::IntegratorKind;
use hinlri_core::training::*;
use nalgebra::{Complex, DMatrix, DVector};
use num_complex::Complex64;

fn main() {
    let eq = EquationSpec::kdv().with_dealias_fraction(0.5).unwrap();
    let taus = [2f64.powi(-8)];
    let train_ds = build_dataset(&eq, 0.5, &[64], &taus, 64, 16, 10_000, 32).unwrap();
    let val_ds = build_dataset(&eq, 0.5, &[64], &taus, 8, 16, 20_000, 32).unwrap();
    let hin = HinLriConfig::default_for(IntegratorKind::Res1Kdv).unwrap();
    let items = build_regression_items(&eq, hin, &train_ds, 64).unwrap();
    let val_items = build_regression_items(&eq, hin, &val_ds, 64).unwrap();
    println!("{} train, {} val items", items.len(), val_items.len());

    let kmax = 16i64;
    // per output band k: gap_k ≈ Σ_{k1+k2=k, |ki|<=kmax, ki≠0} c(k1) û_{k1} û_{k-k1}
    // (k1 from 1.. to halve symmetric duplicates: use ordered pairs k1 <= k2)
    let mut total_num = 0.0;
    let mut total_den = 0.0;
    for k in 1..=kmax {
        let pairs: Vec<(i64, i64)> = (-kmax..=kmax)
            .filter_map(|k1| {
                let k2 = k - k1;
                if k1 == 0 || k2 == 0 || k2.abs() > kmax || k1 > k2 {
                    None
                } else {
                    Some((k1, k2))
                }
            })
            .collect();
        let nf = pairs.len();
        let rows = items.len();
        let mut a = DMatrix::<Complex<f64>>::zeros(rows, nf);
        let mut b = DVector::<Complex<f64>>::zeros(rows);
        for (r, item) in items.iter().enumerate() {
            for (c, &(k1, k2)) in pairs.iter().enumerate() {
                a[(r, c)] = item.u_n.coeff(k1) * item.u_n.coeff(k2);
            }
            b[r] = item.gap.coeff(k);
        }
        // least squares via SVD
        let svd = a.clone().svd(true, true);
        let coef = svd.solve(&b, 1e-12).unwrap();
        // validation residual for this band
        for item in &val_items {
            let mut pred = Complex64::new(0.0, 0.0);
            for (c, &(k1, k2)) in pairs.iter().enumerate() {
                pred += coef[c] * item.u_n.coeff(k1) * item.u_n.coeff(k2);
            }
            let truth = item.gap.coeff(k);
            total_num += (pred - truth).norm_sqr() + (pred.conj() - item.gap.coeff(-k)).norm_sqr();
            total_den += truth.norm_sqr() + item.gap.coeff(-k).norm_sqr();
        }
    }
    println!(
        "convolution-structured LS: val relative error {:.4} (energy fraction {:.4})",
        (total_num / total_den).sqrt(),
        total_num / total_den
    );
}
