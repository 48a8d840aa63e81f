//! One-step maps for the classical integrator zoo, the implicit reference
//! solver, and per-step defect measurement.
//!
//! Explicit steps are written as `u^{n+1} = U_L(τ)u^n + J(u^n, τ)` where
//! `J` is the scheme's nonlinear increment after untwisting (one
//! application of `U_L(τ)` per step). The hybrid solver reuses `J` through
//! [`nonlinear_increment`].

use num_complex::Complex64;

use crate::equations::{EquationKind, EquationSpec};
use crate::error::{CoreError, Result};
use crate::spectral::{DispersionSymbol, SpectralField};

/// `φ₁(z) = (e^z - 1)/z`, the exact average of a pure phase over a step.
///
/// Near the removable singularity (`|z| < 1e-4`) the truncated series
/// `1 + z/2 + z²/6 + z³/24` is used.
pub fn phi1(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        Complex64::new(1.0, 0.0) + z / 2.0 + z * z / 6.0 + z * z * z / 24.0
    } else {
        (z.exp() - Complex64::new(1.0, 0.0)) / z
    }
}

/// Analytic derivative `φ₁'(z) = ((z-1)e^z + 1)/z²`, with the matching
/// small-argument series `1/2 + z/3 + z²/8 + z³/30`.
pub fn phi1_derivative(z: Complex64) -> Complex64 {
    if z.norm() < 1e-4 {
        Complex64::new(0.5, 0.0) + z / 3.0 + z * z / 8.0 + z * z * z / 30.0
    } else {
        ((z - Complex64::new(1.0, 0.0)) * z.exp() + Complex64::new(1.0, 0.0)) / (z * z)
    }
}

/// Classical one-step schemes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IntegratorKind {
    /// First-order Lie splitting (NLS only): exact linear flow composed
    /// with the exact pointwise nonlinear flow.
    Lie,
    /// Second-order Strang splitting (NLS only): half-linear, full
    /// nonlinear, half-linear.
    Strang,
    /// First-order exponential time differencing:
    /// `u^{n+1} = U_L(τ)u + τ φ₁(-iτL) N(u)`.
    Etd1,
    /// Exponential Euler on the twisted variable:
    /// `u^{n+1} = U_L(τ)[u + τ N(u)]`.
    Lawson1,
    /// First-order resonance-based scheme for KdV.
    Res1Kdv,
    /// First-order resonance-based scheme for cubic NLS.
    Res1Nls,
    /// Fully implicit structure-preserving scheme: symmetric midpoint on
    /// the twisted variable, solved by Picard iteration.
    ImplicitLri,
}

impl IntegratorKind {
    pub fn name(&self) -> &'static str {
        match self {
            IntegratorKind::Lie => "lie",
            IntegratorKind::Strang => "strang",
            IntegratorKind::Etd1 => "etd1",
            IntegratorKind::Lawson1 => "lawson1",
            IntegratorKind::Res1Kdv => "res1_kdv",
            IntegratorKind::Res1Nls => "res1_nls",
            IntegratorKind::ImplicitLri => "implicit_lri",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Ok(match s {
            "lie" => IntegratorKind::Lie,
            "strang" => IntegratorKind::Strang,
            "etd1" => IntegratorKind::Etd1,
            "lawson1" => IntegratorKind::Lawson1,
            "res1_kdv" | "res1" => IntegratorKind::Res1Kdv,
            "res1_nls" => IntegratorKind::Res1Nls,
            "implicit_lri" | "implicit" => IntegratorKind::ImplicitLri,
            other => {
                return Err(CoreError::Argument(format!("unknown integrator `{other}`")))
            }
        })
    }

    /// Compatibility between scheme and equation.
    pub fn compatible(&self, eq: &EquationSpec) -> bool {
        match self {
            IntegratorKind::Lie | IntegratorKind::Strang => {
                matches!(eq.kind(), EquationKind::CubicNls | EquationKind::QuadraticNls)
            }
            IntegratorKind::Res1Kdv => eq.kind() == EquationKind::Kdv,
            IntegratorKind::Res1Nls => eq.kind() == EquationKind::CubicNls,
            IntegratorKind::Etd1 | IntegratorKind::Lawson1 | IntegratorKind::ImplicitLri => true,
        }
    }

    /// Explicit LRI-family kinds usable as the hybrid solver's base.
    pub fn is_explicit_base(&self) -> bool {
        matches!(
            self,
            IntegratorKind::Res1Kdv
                | IntegratorKind::Res1Nls
                | IntegratorKind::Etd1
                | IntegratorKind::Lawson1
        )
    }
}

/// Fixed-point iteration control for the implicit scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PicardConfig {
    pub max_iterations: usize,
    /// Residual tolerance in the discrete `L²` norm.
    pub tolerance: f64,
}

impl Default for PicardConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            tolerance: 1e-13,
        }
    }
}

impl PicardConfig {
    pub fn new(max_iterations: usize, tolerance: f64) -> Result<Self> {
        if tolerance <= 0.0 {
            return Err(CoreError::Argument("picard tolerance must be positive".into()));
        }
        if max_iterations == 0 {
            return Err(CoreError::Argument("picard max_iterations must be >= 1".into()));
        }
        Ok(Self {
            max_iterations,
            tolerance,
        })
    }
}

fn check_kind(kind: IntegratorKind, eq: &EquationSpec) -> Result<()> {
    if !kind.compatible(eq) {
        return Err(CoreError::Config(format!(
            "integrator `{}` is not applicable to equation `{}`",
            kind.name(),
            eq.kind().name()
        )));
    }
    Ok(())
}

/// Exact pointwise flow of the NLS nonlinearities over time `tau`.
///
/// Cubic: `|u|` is invariant, so the flow is the phase rotation
/// `u ↦ exp(iλ|u|²τ) u`. Quadratic: `u ↦ u / (1 - iλτu)`.
fn nls_nonlinear_flow(eq: &EquationSpec, u: &SpectralField, tau: f64) -> Result<SpectralField> {
    let lam = eq.lambda();
    let phys = u.to_physical_unchecked();
    let mapped: Vec<Complex64> = match eq.kind() {
        EquationKind::CubicNls => phys
            .iter()
            .map(|&v| Complex64::from_polar(1.0, lam * v.norm_sqr() * tau) * v)
            .collect(),
        EquationKind::QuadraticNls => phys
            .iter()
            .map(|&v| v / (Complex64::new(1.0, 0.0) - Complex64::new(0.0, lam * tau) * v))
            .collect(),
        EquationKind::Kdv => {
            return Err(CoreError::Config(
                "splitting nonlinear flow is defined for NLS kinds only".into(),
            ))
        }
    };
    SpectralField::from_physical_complex(&mapped, u.grid())
}

/// Multiplier field `φ₁(-2iτ s Δ)` acting on a conjugated factor: mode `m`
/// is multiplied by `φ₁(2iτ s m²)`, with `s` the quadratic symbol scale.
fn res1_nls_filter(u: &SpectralField, tau: f64, scale: f64) -> SpectralField {
    let mut out = u.clone();
    let grid = u.grid();
    for i in 0..grid.n_modes() {
        let m = grid.wavenumber(i) as f64;
        out.coeffs_mut()[i] *= phi1(Complex64::new(0.0, 2.0 * tau * scale * m * m));
    }
    out
}

/// Nonlinear increment `J(w, τ)` of an explicit scheme, so that a full
/// step reads `U_L(τ)u^n + J(w, τ)` (with `w = u^n` for the plain step).
pub fn nonlinear_increment(
    kind: IntegratorKind,
    eq: &EquationSpec,
    w: &SpectralField,
    tau: f64,
) -> Result<SpectralField> {
    let sym = eq.symbol();
    match kind {
        IntegratorKind::Etd1 => {
            let nl = eq.nonlinearity(w)?;
            let grid = nl.grid();
            let mut out = nl;
            for i in 0..grid.n_modes() {
                let k = grid.wavenumber(i);
                let z = Complex64::new(0.0, -tau * sym.eval(k));
                out.coeffs_mut()[i] *= tau * phi1(z);
            }
            Ok(out)
        }
        IntegratorKind::Lawson1 => {
            let nl = eq.nonlinearity(w)?;
            Ok(nl
                .scaled(Complex64::new(tau, 0.0))
                .propagate_linear(&sym, tau))
        }
        IntegratorKind::Res1Kdv => {
            // For ω(k) = -c k³ the resonance identity integrates to
            // J(w) = (1/(6c)) [ U_L(τ) P(∂ₓ⁻¹w)² - P(U_L(τ)∂ₓ⁻¹w)² ],
            // products dealiased by the 2/3 rule.
            let c = -sym.eval(1);
            if !matches!(sym, DispersionSymbol::Cubic { .. }) || c == 0.0 {
                return Err(CoreError::Config(
                    "res1_kdv requires a nonzero cubic dispersion symbol".into(),
                ));
            }
            let frac = eq.dealias_fraction();
            let wd = w.dealias(frac);
            let anti = wd.antiderivative();
            let plain_sq = anti
                .pointwise_product(&anti)?
                .dealias(frac)
                .mean_zero_project();
            let prop = anti.propagate_linear(&sym, tau);
            let prop_sq = prop
                .pointwise_product(&prop)?
                .dealias(frac)
                .mean_zero_project();
            let pre = 1.0 / (6.0 * c);
            plain_sq
                .propagate_linear(&sym, tau)
                .sub(&prop_sq)
                .map(|d| d.scaled(Complex64::new(pre, 0.0)))
        }
        IntegratorKind::Res1Nls => {
            // u^{n+1} = U_L(τ)[u + iλτ u² (φ₁(-2iτsΔ) ū)]
            let s = sym.eval(1);
            let frac = eq.dealias_fraction();
            let wd = w.dealias(frac);
            let filt = res1_nls_filter(&wd.conj_field(), tau, s);
            let prod = wd.pointwise_product(&wd)?.pointwise_product(&filt)?;
            Ok(prod
                .dealias(frac)
                .scaled(Complex64::new(0.0, eq.lambda() * tau))
                .propagate_linear(&sym, tau))
        }
        _ => Err(CoreError::Config(format!(
            "`{}` has no explicit nonlinear increment",
            kind.name()
        ))),
    }
}

fn implicit_lri_step(
    eq: &EquationSpec,
    u: &SpectralField,
    tau: f64,
    picard: &PicardConfig,
) -> Result<SpectralField> {
    let sym = eq.symbol();
    // twisted midpoint: w = u + τ U_L(-τ/2) N(U_L(τ/2) (u + w)/2)
    let half = tau / 2.0;
    let g_of = |m: &SpectralField| -> Result<SpectralField> {
        Ok(eq
            .nonlinearity(&m.propagate_linear(&sym, half))?
            .propagate_linear(&sym, -half))
    };
    let mut w = u.add(&g_of(u)?.scaled(Complex64::new(tau, 0.0)))?;
    let mut residual = f64::INFINITY;
    for it in 0..picard.max_iterations {
        let mid = u.add(&w)?.scaled(Complex64::new(0.5, 0.0));
        let next = u.add(&g_of(&mid)?.scaled(Complex64::new(tau, 0.0)))?;
        residual = next.sub(&w)?.l2_norm();
        w = next;
        if !residual.is_finite() {
            return Err(CoreError::Divergence {
                iterations: it + 1,
                residual,
            });
        }
        if residual < picard.tolerance {
            return Ok(w.propagate_linear(&sym, tau));
        }
    }
    Err(CoreError::Divergence {
        iterations: picard.max_iterations,
        residual,
    })
}

/// One step of the chosen scheme.
pub fn step_with(
    kind: IntegratorKind,
    eq: &EquationSpec,
    u: &SpectralField,
    tau: f64,
    picard: &PicardConfig,
) -> Result<SpectralField> {
    check_kind(kind, eq)?;
    if tau <= 0.0 {
        return Err(CoreError::Argument("step size must be positive".into()));
    }
    let sym = eq.symbol();
    match kind {
        IntegratorKind::Lie => {
            let lin = u.propagate_linear(&sym, tau);
            nls_nonlinear_flow(eq, &lin, tau)
        }
        IntegratorKind::Strang => {
            let a = u.propagate_linear(&sym, tau / 2.0);
            let b = nls_nonlinear_flow(eq, &a, tau)?;
            Ok(b.propagate_linear(&sym, tau / 2.0))
        }
        IntegratorKind::ImplicitLri => implicit_lri_step(eq, u, tau, picard),
        _ => {
            let j = nonlinear_increment(kind, eq, u, tau)?;
            u.propagate_linear(&sym, tau).add(&j)
        }
    }
}

/// One step with default Picard settings.
pub fn step(
    kind: IntegratorKind,
    eq: &EquationSpec,
    u: &SpectralField,
    tau: f64,
) -> Result<SpectralField> {
    step_with(kind, eq, u, tau, &PicardConfig::default())
}

/// `m`-fold Picard refinement of an explicit base step: the fixed-point
/// iteration `u ← U_L(τ)u^n + J(u, τ)` started from the plain step.
pub fn picard_refined_step(
    kind: IntegratorKind,
    eq: &EquationSpec,
    u: &SpectralField,
    tau: f64,
    refinements: usize,
) -> Result<SpectralField> {
    if !kind.is_explicit_base() {
        return Err(CoreError::Config(format!(
            "`{}` cannot be Picard-refined (not an explicit base)",
            kind.name()
        )));
    }
    check_kind(kind, eq)?;
    let lin = u.propagate_linear(&eq.symbol(), tau);
    let mut cur = lin.add(&nonlinear_increment(kind, eq, u, tau)?)?;
    for _ in 0..refinements {
        cur = lin.add(&nonlinear_increment(kind, eq, &cur, tau)?)?;
    }
    Ok(cur)
}

/// Advance a trajectory with a fixed scheme, recording every state.
pub fn solve_classical(
    kind: IntegratorKind,
    eq: &EquationSpec,
    u0: &SpectralField,
    t_final: f64,
    tau: f64,
    picard: &PicardConfig,
) -> Result<Vec<SpectralField>> {
    let n_steps = (t_final / tau).round() as usize;
    if ((n_steps as f64) * tau - t_final).abs() > 1e-9 * tau.max(1.0) {
        return Err(CoreError::Argument(format!(
            "t_final {t_final} is not an integer multiple of tau {tau}"
        )));
    }
    let mut traj = Vec::with_capacity(n_steps + 1);
    traj.push(u0.clone());
    let mut u = u0.clone();
    for s in 0..n_steps {
        u = step_with(kind, eq, &u, tau, picard)?;
        if !u.is_finite() {
            return Err(CoreError::NonFinite { step: s + 1 });
        }
        traj.push(u.clone());
    }
    Ok(traj)
}

/// High-accuracy trajectory: implicit LRI at step `tau_ref`, subsampled to
/// the output cadence `out_dt`.
pub fn reference_solve(
    eq: &EquationSpec,
    u0: &SpectralField,
    t_final: f64,
    tau_ref: f64,
    out_dt: f64,
) -> Result<Vec<SpectralField>> {
    if t_final == 0.0 {
        return Ok(vec![u0.clone()]);
    }
    let n_out = (t_final / out_dt).round() as usize;
    let sub = (out_dt / tau_ref).round() as usize;
    if sub == 0 || (sub as f64 * tau_ref - out_dt).abs() > 1e-9 * out_dt {
        return Err(CoreError::Argument(format!(
            "tau_ref {tau_ref} does not divide the output cadence {out_dt}"
        )));
    }
    if (n_out as f64 * out_dt - t_final).abs() > 1e-9 * t_final {
        return Err(CoreError::Argument(format!(
            "output cadence {out_dt} does not divide t_final {t_final}"
        )));
    }
    let picard = PicardConfig::default();
    let mut traj = Vec::with_capacity(n_out + 1);
    traj.push(u0.clone());
    let mut u = u0.clone();
    for block in 0..n_out {
        for _ in 0..sub {
            u = step_with(IntegratorKind::ImplicitLri, eq, &u, tau_ref, &picard)?;
        }
        if !u.is_finite() {
            return Err(CoreError::NonFinite { step: block + 1 });
        }
        traj.push(u.clone());
    }
    Ok(traj)
}

/// A single high-accuracy step over `tau` using `n_sub` implicit substeps.
pub fn reference_step(
    eq: &EquationSpec,
    u: &SpectralField,
    tau: f64,
    n_sub: usize,
) -> Result<SpectralField> {
    let picard = PicardConfig::default();
    let sub_tau = tau / n_sub as f64;
    let mut v = u.clone();
    for _ in 0..n_sub {
        v = step_with(IntegratorKind::ImplicitLri, eq, &v, sub_tau, &picard)?;
    }
    Ok(v)
}

/// The resonance defect of one base step:
/// `reference_step(u, τ) - step(base, u, τ)`.
pub fn measure_defect(
    eq: &EquationSpec,
    base: IntegratorKind,
    u: &SpectralField,
    tau: f64,
    tau_ref: f64,
) -> Result<SpectralField> {
    if tau_ref >= tau {
        return Err(CoreError::Argument(
            "defect measurement needs tau_ref << tau".into(),
        ));
    }
    let n_sub = (tau / tau_ref).round() as usize;
    let reference = reference_step(eq, u, tau, n_sub)?;
    let base_step = step(base, eq, u, tau)?;
    reference.sub(&base_step)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rough::{sample_rough_field, RoughFieldSpec};
    use crate::spectral::{Grid1D, Reality};
    use crate::testutil::{rand_complex_field, slope};

    #[test]
    fn phi1_values() {
        assert_eq!(phi1(Complex64::new(0.0, 0.0)), Complex64::new(1.0, 0.0));
        let e1 = phi1(Complex64::new(1.0, 0.0));
        assert!((e1.re - (1f64.exp() - 1.0)).abs() < 1e-14);
        assert!(e1.im.abs() < 1e-14);
        let ipi = phi1(Complex64::new(0.0, std::f64::consts::PI));
        let expect = Complex64::new(0.0, 2.0 / std::f64::consts::PI);
        assert!((ipi - expect).norm() < 1e-14);
        assert!((ipi.norm() - 2.0 / std::f64::consts::PI).abs() < 1e-14);
    }

    #[test]
    fn phi1_derivative_matches_finite_differences() {
        let h = 1e-6;
        for &z in &[
            Complex64::new(0.7, -1.3),
            Complex64::new(0.0, 4.0),
            Complex64::new(-2.0, 0.3),
        ] {
            let d = phi1_derivative(z);
            let fd_re = (phi1(z + Complex64::new(h, 0.0)) - phi1(z - Complex64::new(h, 0.0)))
                / (2.0 * h);
            assert!((d - fd_re).norm() < 1e-8 * d.norm().max(1.0), "z={z}");
        }
        // series branch consistency at the guard boundary
        let z = Complex64::new(9e-5, 4e-5);
        let series = phi1_derivative(z);
        let direct = ((z - Complex64::new(1.0, 0.0)) * z.exp() + Complex64::new(1.0, 0.0)) / (z * z);
        assert!((series - direct).norm() < 5e-8);
        assert!((phi1_derivative(Complex64::new(0.0, 0.0)) - Complex64::new(0.5, 0.0)).norm() == 0.0);
    }

    #[test]
    fn phi1_series_continuity() {
        // the direct path loses ~4 digits to cancellation at |z| ≈ 1e-4,
        // so the two branches agree to ~1e-12 at the switchover
        for &mag in &[9.9e-5, 1.01e-4] {
            let z = Complex64::new(mag, mag / 3.0);
            let series = Complex64::new(1.0, 0.0) + z / 2.0 + z * z / 6.0 + z * z * z / 24.0;
            let direct = (z.exp() - Complex64::new(1.0, 0.0)) / z;
            assert!((series - direct).norm() < 5e-12);
        }
    }

    #[test]
    fn linear_reduction_all_kinds() {
        // λ = 0 cubic NLS: every scheme collapses to the exact linear flow
        let g = Grid1D::new(64).unwrap();
        let eq = EquationSpec::cubic_nls(0.0);
        let u = rand_complex_field(g, 2);
        let tau = 0.01;
        let exact = u.propagate_linear(&eq.symbol(), tau);
        for kind in [
            IntegratorKind::Lie,
            IntegratorKind::Strang,
            IntegratorKind::Etd1,
            IntegratorKind::Lawson1,
            IntegratorKind::Res1Nls,
            IntegratorKind::ImplicitLri,
        ] {
            let got = step(kind, &eq, &u, tau).unwrap();
            let err = got.sub(&exact).unwrap().l2_norm();
            assert!(err < 1e-12, "{}: err {err:e}", kind.name());
        }
    }

    #[test]
    fn incompatible_kind_rejected() {
        let g = Grid1D::new(32).unwrap();
        let kdv = EquationSpec::kdv();
        let u = SpectralField::zero(g, Reality::RealValued);
        assert!(step(IntegratorKind::Lie, &kdv, &u, 0.1).is_err());
        assert!(step(IntegratorKind::Res1Nls, &kdv, &u, 0.1).is_err());
        let cnls = EquationSpec::cubic_nls(1.0);
        let v = SpectralField::zero(g, Reality::ComplexValued);
        assert!(step(IntegratorKind::Res1Kdv, &cnls, &v, 0.1).is_err());
    }

    #[test]
    fn res1_kdv_one_step_error_is_second_order() {
        let g = Grid1D::new(64).unwrap();
        let eq = EquationSpec::kdv();
        let cos: Vec<f64> = g.nodes().iter().map(|&x| x.cos()).collect();
        let u = SpectralField::from_physical_real(&cos, g).unwrap();
        let mut errs = Vec::new();
        for &tau in &[1e-3, 5e-4] {
            let d = measure_defect(&eq, IntegratorKind::Res1Kdv, &u, tau, tau / 64.0).unwrap();
            errs.push(d.l2_norm());
        }
        let ratio = errs[0] / errs[1];
        assert!(
            (3.0..5.0).contains(&ratio),
            "one-step error ratio {ratio} not ≈ 4 (τ² scaling)"
        );
    }

    #[test]
    fn splitting_preserves_mass_per_step() {
        let g = Grid1D::new(64).unwrap();
        let eq = EquationSpec::cubic_nls(1.0);
        let u = rand_complex_field(g, 8);
        let m0 = eq.mass(&u);
        for kind in [IntegratorKind::Lie, IntegratorKind::Strang] {
            let v = step(kind, &eq, &u, 0.05).unwrap();
            let drift = (eq.mass(&v) - m0).abs() / m0;
            assert!(drift < 1e-13, "{} drift {drift:e}", kind.name());
        }
    }

    #[test]
    fn implicit_lri_conserves_mass_per_step() {
        
        let eq = EquationSpec::kdv();
        let spec = RoughFieldSpec::new(2.0, 64, 5, Reality::RealValued).unwrap();
        let u = sample_rough_field(&spec);
        let m0 = eq.mass(&u);
        let v = step(IntegratorKind::ImplicitLri, &eq, &u, 1e-3).unwrap();
        assert!((eq.mass(&v) - m0).abs() / m0 < 1e-12);
    }

    #[test]
    fn strang_second_order_on_smooth_nls() {
        let eq = EquationSpec::cubic_nls(1.0);
        let spec = RoughFieldSpec::new(3.0, 64, 21, Reality::ComplexValued).unwrap();
        // band-limit well inside the dealias cutoff so temporal error
        // dominates the tiny dealiased-vs-pointwise system difference
        let u0 = sample_rough_field(&spec).dealias(0.25);
        let t_final = 0.25;
        let reference = reference_solve(&eq, &u0, t_final, t_final / 4096.0, t_final).unwrap();
        let ref_end = reference.last().unwrap();
        let taus: Vec<f64> = (4..=7).map(|p| (2f64).powi(-p)).collect();
        let mut errs = Vec::new();
        for &tau in &taus {
            let traj =
                solve_classical(IntegratorKind::Strang, &eq, &u0, t_final, tau, &PicardConfig::default())
                    .unwrap();
            errs.push(traj.last().unwrap().sub(ref_end).unwrap().l2_norm());
        }
        let xs: Vec<f64> = taus.iter().map(|t| t.ln()).collect();
        let ys: Vec<f64> = errs.iter().map(|e| e.ln()).collect();
        let order = slope(&xs, &ys);
        assert!((order - 2.0).abs() < 0.2, "strang order {order}");
    }

    #[test]
    fn reference_solve_trivial_cases() {
        let g = Grid1D::new(32).unwrap();
        let eq = EquationSpec::cubic_nls(0.0);
        let u0 = rand_complex_field(g, 13);
        let traj = reference_solve(&eq, &u0, 0.0, 1e-3, 1e-2).unwrap();
        assert_eq!(traj.len(), 1);
        // λ=0: endpoint equals the exact linear flow
        let traj = reference_solve(&eq, &u0, 0.125, 2f64.powi(-10), 0.125).unwrap();
        let exact = u0.propagate_linear(&eq.symbol(), 0.125);
        let err = traj.last().unwrap().sub(&exact).unwrap().l2_norm();
        assert!(err < 1e-12, "err {err:e}");
    }

    #[test]
    fn reference_self_consistency() {
        
        let eq = EquationSpec::kdv();
        let spec = RoughFieldSpec::new(3.0, 32, 40, Reality::RealValued).unwrap();
        let u0 = sample_rough_field(&spec).scaled(Complex64::new(0.5, 0.0));
        let t = 0.25;
        let a = reference_solve(&eq, &u0, t, 2f64.powi(-14), t).unwrap();
        let b = reference_solve(&eq, &u0, t, 2f64.powi(-15), t).unwrap();
        let diff = a.last().unwrap().sub(b.last().unwrap()).unwrap().l2_norm();
        assert!(diff < 1e-9, "Richardson diff {diff:e}");
    }

    #[test]
    fn defect_zero_for_linear_equation() {
        let g = Grid1D::new(32).unwrap();
        let eq = EquationSpec::cubic_nls(0.0);
        let u = rand_complex_field(g, 77);
        let d = measure_defect(&eq, IntegratorKind::Res1Nls, &u, 1e-2, 1e-2 / 64.0).unwrap();
        assert!(d.l2_norm() < 1e-12);
    }

    #[test]
    fn defect_shrinks_with_tau_on_rough_data() {
        let spec = RoughFieldSpec::new(0.5, 64, 3, Reality::RealValued).unwrap();
        let u = sample_rough_field(&spec);
        let eq = EquationSpec::kdv();
        let mut norms = Vec::new();
        for &tau in &[2f64.powi(-8), 2f64.powi(-9), 2f64.powi(-10)] {
            let d = measure_defect(&eq, IntegratorKind::Res1Kdv, &u, tau, tau / 64.0).unwrap();
            norms.push(d.l2_norm());
        }
        assert!(norms[0] > 0.0);
        assert!(norms[0] > norms[1] && norms[1] > norms[2], "{norms:?}");
    }

    #[test]
    fn picard_divergence_reported() {
        // huge step on rough KdV data: the fixed point is not contractive
        let spec = RoughFieldSpec::new(0.5, 128, 9, Reality::RealValued).unwrap();
        let u = sample_rough_field(&spec);
        let eq = EquationSpec::kdv();
        let out = step_with(
            IntegratorKind::ImplicitLri,
            &eq,
            &u,
            0.5,
            &PicardConfig::new(30, 1e-13).unwrap(),
        );
        assert!(matches!(out, Err(CoreError::Divergence { .. })));
    }
}
