use hinlri_core::equations::EquationSpec;
use hinlri_core::hinlri::HinLriConfig;
use hinlri_core::integrators::IntegratorKind;
use hinlri_core::training::*;

fn main() {
    let eq = EquationSpec::kdv().with_dealias_fraction(0.5).unwrap();
    for p in [5i32, 8, 10] {
        let tau = 2f64.powi(-p);
        let ds = build_dataset(&eq, 0.5, &[64], &[tau], 8, 8, 10_000, 32).unwrap();
        let hin = HinLriConfig::new(1, 1, IntegratorKind::Res1Kdv).unwrap();
        let items = build_regression_items(&eq, hin, &ds, 64).unwrap();
        let lam = 2f64.ln();
        let mut gain_max: f64 = 0.0;
        let (mut rs, mut gs, mut us) = (0.0, 0.0, 0.0);
        for item in &items {
            let r = item.residual.l2_norm();
            let u = item.u_n.l2_norm();
            let g = item.gap_norm;
            // needed latent output ≈ 2·gap/(τλ); input scale ≈ ||(r,u)||/λ
            let need = 2.0 * g / (tau * lam);
            let input = (r * r + u * u).sqrt() / lam;
            gain_max = gain_max.max(need / input);
            rs += r;
            gs += g;
            us += u;
        }
        let n = items.len() as f64;
        println!(
            "tau=2^-{p}: mean |r| {:.2e}, |gap| {:.2e}, |u| {:.2}; needed G-gain (vs full input) max {:.2}; vs r alone {:.2}",
            rs / n, gs / n, us / n, gain_max,
            2.0 * (gs / n) / (tau * (rs / n))
        );
    }
}
