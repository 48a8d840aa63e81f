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
    for (m, kappa) in [(1usize, 1usize), (2, 1)] {
        let hin = HinLriConfig::new(m, kappa, IntegratorKind::Res1Kdv).unwrap();
        let items = build_regression_items(&eq, hin, &train_ds, 64).unwrap();
        let val_items = build_regression_items(&eq, hin, &val_ds, 64).unwrap();
        let r_norm_avg: f64 =
            items.iter().map(|i| i.residual.l2_norm()).sum::<f64>() / items.len() as f64;
        println!("M={m} κ={kappa}: residual mean norm {r_norm_avg:.3e}");

        let kmax = 16i64;
        // complex-linear LS: gap_k ≈ Σ_j W[k,j] r_j + Σ_j V[k,j] u_j over bands
        let feats = |item: &RegressionItem| -> Vec<Complex64> {
            let mut f = Vec::with_capacity(2 * kmax as usize);
            for j in 1..=kmax {
                f.push(item.residual.coeff(j));
            }
            for j in 1..=kmax {
                f.push(item.u_n.coeff(j));
            }
            f
        };
        let nf = 2 * kmax as usize;
        let (mut num, mut den) = (0.0, 0.0);
        let (mut dnum, mut dden) = (0.0, 0.0);
        for k in 1..=kmax {
            let rows = items.len();
            let mut a = DMatrix::<Complex<f64>>::zeros(rows, nf);
            let mut b = DVector::<Complex<f64>>::zeros(rows);
            for (r, item) in items.iter().enumerate() {
                for (c, v) in feats(item).into_iter().enumerate() {
                    a[(r, c)] = v;
                }
                b[r] = item.gap.coeff(k);
            }
            let svd = a.clone().svd(true, true);
            let coef = svd.solve(&b, 1e-12).unwrap();
            for item in &val_items {
                let f = feats(item);
                let mut pred = Complex64::new(0.0, 0.0);
                for (c, v) in f.iter().enumerate() {
                    pred += coef[c] * v;
                }
                let truth = item.gap.coeff(k);
                num += (pred - truth).norm_sqr();
                den += truth.norm_sqr();
            }
            // pure k-diagonal single-coefficient fit gap_k ≈ c_k r_k
            let mut cn = Complex64::new(0.0, 0.0);
            let mut cd = 0.0;
            for item in &items {
                let rk = item.residual.coeff(k);
                cn += item.gap.coeff(k) * rk.conj();
                cd += rk.norm_sqr();
            }
            let ck = cn / cd;
            for item in &val_items {
                let pred = ck * item.residual.coeff(k);
                let truth = item.gap.coeff(k);
                dnum += (pred - truth).norm_sqr();
                dden += truth.norm_sqr();
            }
        }
        println!(
            "  complex-linear LS [r;u]: val rel {:.4} | diagonal c_k·r_k: val rel {:.4}",
            (num / den).sqrt(),
            (dnum / dden).sqrt()
        );
    }
}
