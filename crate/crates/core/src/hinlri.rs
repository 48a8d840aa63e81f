//! The alternating spectral-neural one-step map and trajectory driver, in a
//! plain flavour for inference and a tape-traced flavour for training. Both
//! follow the same operation order so their outputs agree to rounding.

use std::sync::Arc;

use num_complex::Complex64;

use crate::corrector::{lipschitz_bound, CorrectorParams, TensorRole, TrunkBasis};
use crate::equations::{EquationKind, EquationSpec};
use crate::error::{CoreError, Result};
use crate::integrators::{nonlinear_increment, phi1, IntegratorKind};
use crate::spectral::{DispersionSymbol, Grid1D, Reality, SpectralField};
use crate::tape::{NodeId, Tape};

/// Iteration layout of the hybrid step.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HinLriConfig {
    /// Max Picard iterations `M`.
    pub picard_m: usize,
    /// Alternating trigger frequency `κ`: the neural branch fires on
    /// iterations with `m ≡ 0 (mod κ)`.
    pub trigger_kappa: usize,
    /// Explicit base scheme supplying the physical increment.
    pub base_kind: IntegratorKind,
}

impl HinLriConfig {
    pub fn new(picard_m: usize, trigger_kappa: usize, base_kind: IntegratorKind) -> Result<Self> {
        if picard_m == 0 || trigger_kappa == 0 {
            return Err(CoreError::Config("M and κ must be at least 1".into()));
        }
        if trigger_kappa > picard_m {
            return Err(CoreError::Config(format!(
                "trigger κ={trigger_kappa} exceeds M={picard_m}: the neural branch would never fire"
            )));
        }
        if !base_kind.is_explicit_base() {
            return Err(CoreError::Config(format!(
                "base `{}` is not an explicit LRI",
                base_kind.name()
            )));
        }
        Ok(Self {
            picard_m,
            trigger_kappa,
            base_kind,
        })
    }

    /// Defaults: M = 1, κ = 1 — a single Picard iteration whose residual
    /// feeds one neural correction. The first-iteration residual carries
    /// the defect structure the corrector maps; at deeper κ the residual
    /// is converged to rounding noise and the designed input goes dark.
    pub fn default_for(base_kind: IntegratorKind) -> Result<Self> {
        Self::new(1, 1, base_kind)
    }
}

/// Project a complex correction onto the Hermitian (real-field) manifold.
fn hermitian_projected(e: &SpectralField) -> SpectralField {
    let grid = e.grid();
    let n = grid.n_modes();
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n];
    for (i, c) in coeffs.iter_mut().enumerate() {
        let k = grid.wavenumber(i);
        let nk = if k == -(n as i64) / 2 { k } else { -k };
        *c = 0.5 * (e.coeffs()[i] + e.coeffs()[grid.index_of(nk)].conj());
    }
    SpectralField::from_coeffs(coeffs, grid, Reality::RealValued).expect("same grid")
}

/// Hybrid solver with validated configuration and cached Lipschitz bound.
pub struct HinLri {
    pub eq: EquationSpec,
    pub basis: Arc<TrunkBasis>,
    pub params: CorrectorParams,
    pub cfg: HinLriConfig,
    lipschitz: f64,
}

impl HinLri {
    pub fn new(
        eq: EquationSpec,
        basis: Arc<TrunkBasis>,
        params: CorrectorParams,
        cfg: HinLriConfig,
    ) -> Result<Self> {
        if !cfg.base_kind.compatible(&eq) {
            return Err(CoreError::Config(format!(
                "base `{}` is incompatible with `{}`",
                cfg.base_kind.name(),
                eq.kind().name()
            )));
        }
        let lipschitz = lipschitz_bound(&params);
        Ok(Self {
            eq,
            basis,
            params,
            cfg,
            lipschitz,
        })
    }

    /// Activation-corrected Lipschitz bound cached at construction.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// The stability precondition `τ · L_{θ,K} < 1`; refuse to run
    /// otherwise.
    pub fn check_stability(&self, tau: f64) -> Result<()> {
        if tau <= 0.0 {
            return Err(CoreError::Argument("step size must be positive".into()));
        }
        if tau * self.lipschitz >= 1.0 {
            return Err(CoreError::Config(format!(
                "stability precondition violated: τ·L = {:.3e} ≥ 1 (τ = {tau:.3e}, L = {:.3e})",
                tau * self.lipschitz,
                self.lipschitz
            )));
        }
        Ok(())
    }

    fn basis_for(&self, grid: Grid1D) -> Result<Arc<TrunkBasis>> {
        if grid == self.basis.grid() {
            Ok(self.basis.clone())
        } else {
            Ok(Arc::new(self.basis.resample(grid)?))
        }
    }

    /// One alternating spectral-neural step.
    pub fn step(&self, u_n: &SpectralField, tau: f64) -> Result<SpectralField> {
        self.check_stability(tau)?;
        let basis = self.basis_for(u_n.grid())?;
        let sym = self.eq.symbol();
        let lin = u_n.propagate_linear(&sym, tau);
        let mut cur = lin.add(&nonlinear_increment(self.cfg.base_kind, &self.eq, u_n, tau)?)?;
        for m in 1..=self.cfg.picard_m {
            let v = lin.add(&nonlinear_increment(self.cfg.base_kind, &self.eq, &cur, tau)?)?;
            if m % self.cfg.trigger_kappa == 0 {
                let r = v.sub(&cur)?;
                let lam = self.params.scale_estimate(u_n);
                let r_c = basis.restrict(&r.scaled(Complex64::new(1.0 / lam, 0.0)))?;
                let u_c = basis.restrict(&u_n.scaled(Complex64::new(1.0 / lam, 0.0)))?;
                let e_c = self.params.latent_forward(&r_c, &u_c, tau)?;
                let e_s = basis.prolong(&e_c)?;
                let mut e = e_s.scaled(Complex64::new(lam, 0.0));
                if self.eq.reality() == Reality::RealValued {
                    e = hermitian_projected(&e);
                }
                cur = v.axpy(Complex64::new(tau, 0.0), &e)?;
            } else {
                cur = v;
            }
        }
        Ok(cur)
    }

    /// Autoregressive trajectory of `t_final/τ` hybrid steps.
    pub fn solve(&self, u0: &SpectralField, t_final: f64, tau: f64) -> Result<Vec<SpectralField>> {
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
            u = self.step(&u, tau)?;
            if !u.is_finite() {
                return Err(CoreError::NonFinite { step: s + 1 });
            }
            traj.push(u.clone());
        }
        Ok(traj)
    }
}

/// One hybrid step with ad-hoc dependencies (convenience wrapper).
pub fn hinlri_step(
    u_n: &SpectralField,
    tau: f64,
    eq: &EquationSpec,
    basis: &Arc<TrunkBasis>,
    params: &CorrectorParams,
    cfg: HinLriConfig,
) -> Result<SpectralField> {
    HinLri::new(*eq, basis.clone(), params.clone(), cfg)?.step(u_n, tau)
}

// ---------------------------------------------------------------------
// tape-traced flavour
// ---------------------------------------------------------------------

/// Diagonal multiplier of the linear flow `exp(-itω(k))`.
fn propagator_diag(grid: Grid1D, sym: &DispersionSymbol, t: f64) -> Vec<Complex64> {
    (0..grid.n_modes())
        .map(|i| Complex64::from_polar(1.0, -t * sym.eval(grid.wavenumber(i))))
        .collect()
}

fn dealias_mask(grid: Grid1D, fraction: f64, zero_mean: bool) -> Vec<f64> {
    let cutoff = fraction * grid.n_modes() as f64 / 2.0;
    (0..grid.n_modes())
        .map(|i| {
            let k = grid.wavenumber(i);
            if (k.abs() as f64) > cutoff || (zero_mean && k == 0) {
                0.0
            } else {
                1.0
            }
        })
        .collect()
}

pub fn t_propagate(tape: &mut Tape, x: NodeId, grid: Grid1D, sym: &DispersionSymbol, t: f64) -> NodeId {
    let d = propagator_diag(grid, sym, t);
    tape.diag(x, d)
}

fn t_pointwise_product(tape: &mut Tape, x: NodeId, y: NodeId) -> NodeId {
    let xp = tape.dft(x, true);
    let yp = tape.dft(y, true);
    let prod = tape.cmul(xp, yp);
    tape.dft(prod, false)
}

fn t_antiderivative(tape: &mut Tape, x: NodeId, grid: Grid1D, reality: Reality) -> NodeId {
    let n = grid.n_modes() as i64;
    let d: Vec<Complex64> = (0..grid.n_modes())
        .map(|i| {
            let k = grid.wavenumber(i);
            if k == 0 || (reality == Reality::RealValued && k == -n / 2) {
                Complex64::new(0.0, 0.0)
            } else {
                1.0 / Complex64::new(0.0, k as f64)
            }
        })
        .collect();
    tape.diag(x, d)
}

fn t_derivative(tape: &mut Tape, x: NodeId, grid: Grid1D, reality: Reality) -> NodeId {
    let n = grid.n_modes() as i64;
    let d: Vec<Complex64> = (0..grid.n_modes())
        .map(|i| {
            let k = grid.wavenumber(i);
            if reality == Reality::RealValued && k == -n / 2 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(0.0, k as f64)
            }
        })
        .collect();
    tape.diag(x, d)
}

/// Tape mirror of [`EquationSpec::nonlinearity`].
pub fn t_nonlinearity(tape: &mut Tape, eq: &EquationSpec, x: NodeId, grid: Grid1D) -> NodeId {
    let frac = eq.dealias_fraction();
    let pre = dealias_mask(grid, frac, false);
    let xd = tape.mask(x, &pre);
    let out = match eq.kind() {
        EquationKind::Kdv => {
            let du = t_derivative(tape, xd, grid, Reality::RealValued);
            let prod = t_pointwise_product(tape, xd, du);
            tape.scale_const(prod, Complex64::new(-1.0, 0.0))
        }
        EquationKind::CubicNls => {
            let conj = tape.conj_field(xd, grid);
            let sq = t_pointwise_product(tape, xd, xd);
            let cube = t_pointwise_product(tape, sq, conj);
            tape.scale_const(cube, Complex64::new(0.0, eq.lambda()))
        }
        EquationKind::QuadraticNls => {
            let sq = t_pointwise_product(tape, xd, xd);
            tape.scale_const(sq, Complex64::new(0.0, eq.lambda()))
        }
    };
    tape.mask(out, &pre)
}

/// Tape mirror of [`nonlinear_increment`].
pub fn t_nonlinear_increment(
    tape: &mut Tape,
    kind: IntegratorKind,
    eq: &EquationSpec,
    w: NodeId,
    grid: Grid1D,
    tau: f64,
) -> Result<NodeId> {
    let sym = eq.symbol();
    Ok(match kind {
        IntegratorKind::Etd1 => {
            let nl = t_nonlinearity(tape, eq, w, grid);
            let d: Vec<Complex64> = (0..grid.n_modes())
                .map(|i| {
                    let k = grid.wavenumber(i);
                    tau * phi1(Complex64::new(0.0, -tau * sym.eval(k)))
                })
                .collect();
            tape.diag(nl, d)
        }
        IntegratorKind::Lawson1 => {
            let nl = t_nonlinearity(tape, eq, w, grid);
            let scaled = tape.scale_const(nl, Complex64::new(tau, 0.0));
            t_propagate(tape, scaled, grid, &sym, tau)
        }
        IntegratorKind::Res1Kdv => {
            let c = -sym.eval(1);
            if c == 0.0 {
                return Err(CoreError::Config(
                    "res1_kdv requires a nonzero cubic dispersion symbol".into(),
                ));
            }
            let frac = eq.dealias_fraction();
            let pre = dealias_mask(grid, frac, false);
            let post = dealias_mask(grid, frac, true);
            let wd = tape.mask(w, &pre);
            let anti = t_antiderivative(tape, wd, grid, eq.reality());
            let sq_raw = t_pointwise_product(tape, anti, anti);
            let plain_sq = tape.mask(sq_raw, &post);
            let prop = t_propagate(tape, anti, grid, &sym, tau);
            let psq_raw = t_pointwise_product(tape, prop, prop);
            let prop_sq = tape.mask(psq_raw, &post);
            let moved = t_propagate(tape, plain_sq, grid, &sym, tau);
            let diff = tape.sub(moved, prop_sq);
            tape.scale_const(diff, Complex64::new(1.0 / (6.0 * c), 0.0))
        }
        IntegratorKind::Res1Nls => {
            let s = sym.eval(1);
            let frac = eq.dealias_fraction();
            let pre = dealias_mask(grid, frac, false);
            let wd = tape.mask(w, &pre);
            let conj = tape.conj_field(wd, grid);
            let d: Vec<Complex64> = (0..grid.n_modes())
                .map(|i| {
                    let m = grid.wavenumber(i) as f64;
                    phi1(Complex64::new(0.0, 2.0 * tau * s * m * m))
                })
                .collect();
            let filt = tape.diag(conj, d);
            let sq = t_pointwise_product(tape, wd, wd);
            let prod = t_pointwise_product(tape, sq, filt);
            let masked = tape.mask(prod, &pre);
            let scaled = tape.scale_const(masked, Complex64::new(0.0, eq.lambda() * tau));
            t_propagate(tape, scaled, grid, &sym, tau)
        }
        _ => {
            return Err(CoreError::Config(format!(
                "`{}` has no explicit nonlinear increment",
                kind.name()
            )))
        }
    })
}

/// Tape mirror of the phase-invariant scale features.
pub fn t_scale_features(tape: &mut Tape, u: NodeId, grid: Grid1D) -> NodeId {
    let n = grid.n_modes() as f64;
    let k_sq: Vec<f64> = (0..grid.n_modes())
        .map(|i| {
            let k = grid.wavenumber(i) as f64;
            k * k
        })
        .collect();
    let k_inv_sq: Vec<f64> = (0..grid.n_modes())
        .map(|i| {
            let k = grid.wavenumber(i) as f64;
            if k == 0.0 {
                0.0
            } else {
                1.0 / (k * k)
            }
        })
        .collect();
    let k_abs: Vec<f64> = (0..grid.n_modes())
        .map(|i| (grid.wavenumber(i) as f64).abs())
        .collect();

    let sum_sq = tape.weighted_sumsq(u, None);
    let l2 = tape.s_sqrt(sum_sq);
    let h1_sq = tape.weighted_sumsq(u, Some(k_sq));
    let h1 = tape.s_sqrt(h1_sq);
    let hm1_sq = tape.weighted_sumsq(u, Some(k_inv_sq));
    let hm1 = tape.s_sqrt(hm1_sq);
    let phys = tape.dft(u, true);
    let max_phys = tape.max_abs(phys);
    let max_coeff = tape.max_abs(u);
    let cen_num = tape.weighted_sumsq(u, Some(k_abs));
    let cen_den = tape.s_affine(sum_sq, 1.0, 1e-30);
    let centroid = tape.s_div(cen_num, cen_den);
    let m1_raw = tape.sum_abs(u);
    let m1 = tape.s_affine(m1_raw, 1.0 / n, 0.0);
    let m3_raw = tape.sum_abs3(u);
    let m3_scaled = tape.s_affine(m3_raw, 1.0 / n, 0.0);
    let m3 = tape.s_pow(m3_scaled, 1.0 / 3.0);

    tape.concat(
        vec![l2, h1, hm1, max_phys, max_coeff, centroid, m1, m3],
        vec![],
    )
}

/// Tape mirror of the scaling net.
pub fn t_scale_estimate(tape: &mut Tape, u: NodeId, grid: Grid1D) -> NodeId {
    let mut x = t_scale_features(tape, u, grid);
    for i in 0..3 {
        let w = tape.params().index_of(TensorRole::ScaleWeight(i));
        let b = tape.params().index_of(TensorRole::ScaleBias(i));
        x = tape.linear(x, w, b);
        if i < 2 {
            x = tape.gelu_node(x);
            let g = tape.params().index_of(TensorRole::ScaleLnGain(i));
            let bn = tape.params().index_of(TensorRole::ScaleLnBias(i));
            x = tape.layer_norm_node(x, g, bn);
        }
    }
    let pre = tape.pick(x, 0);
    tape.s_softplus(pre)
}

/// Tape mirror of the latent operator forward pass.
pub fn t_latent_forward(tape: &mut Tape, r_c: NodeId, u_c: NodeId, tau: f64) -> NodeId {
    let params = tape.params();
    let arch = params.arch();
    let ri = tape.interleave(r_c);
    let ui = tape.interleave(u_c);
    let mut x = tape.concat(vec![ri, ui], vec![tau]);
    for i in 0..=arch.enc_hidden {
        let w = tape.params().index_of(TensorRole::EncWeight(i));
        let b = tape.params().index_of(TensorRole::EncBias(i));
        x = tape.linear(x, w, b);
        if i < arch.enc_hidden {
            x = tape.gelu_node(x);
        }
    }
    let z = tape.deinterleave(x);
    let re = tape.params().index_of(TensorRole::MixRe);
    let im = tape.params().index_of(TensorRole::MixIm);
    let mut mixed = tape.mix(z, re, im);
    let k = arch.latent_dim;
    for m in 0..arch.quad_heads {
        let are = tape.params().index_of(TensorRole::QuadARe(m));
        let aim = tape.params().index_of(TensorRole::QuadAIm(m));
        let bre = tape.params().index_of(TensorRole::QuadBRe(m));
        let bim = tape.params().index_of(TensorRole::QuadBIm(m));
        let fa = tape.diag_param(z, are, aim);
        let fb = tape.diag_param(z, bre, bim);
        let sa = tape.herm_synth(fa);
        let sb = tape.herm_synth(fb);
        let wa = tape.dft(sa, true);
        let wb = tape.dft(sb, true);
        let prod = tape.cmul(wa, wb);
        let spec = tape.dft(prod, false);
        let head = tape.band_slice(spec, k);
        mixed = tape.add(mixed, head);
    }
    let mut y = tape.interleave(mixed);
    for i in 0..=arch.dec_hidden {
        let w = tape.params().index_of(TensorRole::DecWeight(i));
        let b = tape.params().index_of(TensorRole::DecBias(i));
        y = tape.linear(y, w, b);
        if i < arch.dec_hidden {
            y = tape.gelu_node(y);
        }
    }
    tape.deinterleave(y)
}

fn t_hermitian_project(tape: &mut Tape, e: NodeId, grid: Grid1D) -> NodeId {
    let conj = tape.conj_field(e, grid);
    let sum = tape.add(e, conj);
    tape.scale_const(sum, Complex64::new(0.5, 0.0))
}

/// Tape mirror of [`HinLri::step`].
pub fn t_hinlri_step(
    tape: &mut Tape,
    u_n: NodeId,
    tau: f64,
    eq: &EquationSpec,
    basis: &Arc<TrunkBasis>,
    cfg: HinLriConfig,
    grid: Grid1D,
) -> Result<NodeId> {
    let sym = eq.symbol();
    let lin = t_propagate(tape, u_n, grid, &sym, tau);
    let j0 = t_nonlinear_increment(tape, cfg.base_kind, eq, u_n, grid, tau)?;
    let mut cur = tape.add(lin, j0);
    for m in 1..=cfg.picard_m {
        let j = t_nonlinear_increment(tape, cfg.base_kind, eq, cur, grid, tau)?;
        let v = tape.add(lin, j);
        if m % cfg.trigger_kappa == 0 {
            let r = tape.sub(v, cur);
            let lam = t_scale_estimate(tape, u_n, grid);
            let inv_lam = tape.s_recip(lam);
            let r_s = tape.sv_mul(inv_lam, r);
            let u_s = tape.sv_mul(inv_lam, u_n);
            let r_c = tape.restrict(r_s, basis.clone());
            let u_c = tape.restrict(u_s, basis.clone());
            let e_c = t_latent_forward(tape, r_c, u_c, tau);
            let e_s = tape.prolong(e_c, basis.clone());
            let mut e = tape.sv_mul(lam, e_s);
            if eq.reality() == Reality::RealValued {
                e = t_hermitian_project(tape, e, grid);
            }
            cur = tape.axpy(v, Complex64::new(tau, 0.0), e);
        } else {
            cur = v;
        }
    }
    Ok(cur)
}
