use hinlri_core::corrector::quad_head;
use num_complex::Complex64;
use nalgebra::DMatrix;
use hinlri_core::equations::EquationSpec;
use hinlri_core::hinlri::HinLriConfig;
use hinlri_core::integrators::IntegratorKind;
use hinlri_core::training::*;

fn main() {
    // (3) head algebra: a = b = 1 filters on K=4 bands
    let k = 4usize;
    let z: Vec<Complex64> = vec![
        Complex64::new(0.3, -0.2),
        Complex64::new(-0.1, 0.5),
        Complex64::new(0.2, 0.1),
        Complex64::new(-0.4, -0.3),
    ];
    let ones = vec![1.0; k];
    let zeros = vec![0.0; k];
    let head = quad_head(&z, (&ones, &zeros), (&ones, &zeros));
    // direct sum: ztilde over bands -4..4 (ztilde_{-j} = conj(z_j), 0 at 0)
    let zt = |j: i64| -> Complex64 {
        if j == 0 || j.abs() > k as i64 {
            Complex64::new(0.0, 0.0)
        } else if j > 0 {
            z[(j - 1) as usize]
        } else {
            z[(-j - 1) as usize].conj()
        }
    };
    let n4 = (4 * k) as f64;
    for out_k in 1..=k as i64 {
        let mut direct = Complex64::new(0.0, 0.0);
        for k1 in -(k as i64)..=(k as i64) {
            direct += zt(k1) * zt(out_k - k1);
        }
        // unitary DFT convention: product transform carries 1/sqrt(4K)
        direct /= n4.sqrt();
        let got = head[(out_k - 1) as usize];
        println!(
            "band {out_k}: head {:?} direct {:?} diff {:.2e}",
            got, direct, (got - direct).norm()
        );
    }

    // (1) separable rank of the true defect kernel across pair types
    let eq = EquationSpec::kdv().with_dealias_fraction(0.5).unwrap();
    let tau = 2f64.powi(-8);
    let ds = build_dataset(&eq, 0.5, &[64], &[tau], 64, 16, 10_000, 32).unwrap();
    let hin = HinLriConfig::new(1, 1, IntegratorKind::Res1Kdv).unwrap();
    let items = build_regression_items(&eq, hin, &ds, 64).unwrap();
    let kmax = 16i64;
    // solve the unrestricted LS kernel c(k1,k2) over ±bands (k1+k2 in 1..16)
    // and assemble it as a matrix over (k1 index, k2 index) to measure rank
    let mut kernel = DMatrix::<Complex64>::zeros(33, 33); // k1,k2 in -16..16
    for k in 1..=kmax {
        let pairs: Vec<(i64, i64)> = (-kmax..=kmax)
            .filter_map(|k1| {
                let k2 = k - k1;
                (k1 != 0 && k2 != 0 && k2.abs() <= kmax && k1 <= k2).then_some((k1, k2))
            })
            .collect();
        let rows = items.len();
        let mut a = DMatrix::<Complex64>::zeros(rows, pairs.len());
        let mut b = nalgebra::DVector::<Complex64>::zeros(rows);
        for (r, item) in items.iter().enumerate() {
            for (c, &(k1, k2)) in pairs.iter().enumerate() {
                a[(r, c)] = item.u_n.coeff(k1) * item.u_n.coeff(k2);
            }
            b[r] = item.gap.coeff(k);
        }
        let coef = a.svd(true, true).solve(&b, 1e-12).unwrap();
        for (c, &(k1, k2)) in pairs.iter().enumerate() {
            kernel[((k1 + 16) as usize, (k2 + 16) as usize)] = coef[c] * 0.5;
            kernel[((k2 + 16) as usize, (k1 + 16) as usize)] = coef[c] * 0.5;
        }
    }
    let svd = kernel.svd(false, false);
    let mut sv: Vec<f64> = svd.singular_values.iter().cloned().collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let total: f64 = sv.iter().map(|s| s * s).sum();
    let mut cum = 0.0;
    for (i, s) in sv.iter().take(12).enumerate() {
        cum += s * s;
        println!("kernel σ_{i} = {s:.3e} (cumulative energy {:.4})", cum / total);
    }
}
