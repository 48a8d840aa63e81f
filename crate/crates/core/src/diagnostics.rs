//! Defect-verification experiments and the evaluation harness: convergence
//! studies, refinement scans, the averaging mismatch kernel, factorization
//! residuals, invariant drift, error spectra, timing and cost accounting.

use std::time::Instant;

use num_complex::Complex64;

use crate::equations::EquationSpec;
use crate::error::{CoreError, Result};
use crate::hinlri::HinLri;
use crate::integrators::{
    phi1, picard_refined_step, reference_solve, step_with, IntegratorKind, PicardConfig,
};
use crate::spectral::{Grid1D, SpectralField};
use crate::training::rough_initial_state;

/// One-step map abstraction: classical kinds, the hybrid solver and test
/// fixtures all drive the same studies through this seam. Optional
/// integrator plug-ins implement it to join the harness.
pub trait Stepper {
    fn name(&self) -> String;
    fn step(&self, u: &SpectralField, tau: f64) -> Result<SpectralField>;
}

/// Classical one-step schemes as a [`Stepper`].
pub struct ClassicalStepper {
    pub kind: IntegratorKind,
    pub eq: EquationSpec,
    pub picard: PicardConfig,
}

impl ClassicalStepper {
    pub fn new(kind: IntegratorKind, eq: EquationSpec) -> Self {
        Self {
            kind,
            eq,
            picard: PicardConfig::default(),
        }
    }
}

impl Stepper for ClassicalStepper {
    fn name(&self) -> String {
        self.kind.name().to_string()
    }

    fn step(&self, u: &SpectralField, tau: f64) -> Result<SpectralField> {
        step_with(self.kind, &self.eq, u, tau, &self.picard)
    }
}

/// Picard-refined explicit base (the hybrid solver's cost twin).
pub struct RefinedStepper {
    pub kind: IntegratorKind,
    pub eq: EquationSpec,
    pub refinements: usize,
}

impl Stepper for RefinedStepper {
    fn name(&self) -> String {
        format!("{}_refined{}", self.kind.name(), self.refinements)
    }

    fn step(&self, u: &SpectralField, tau: f64) -> Result<SpectralField> {
        picard_refined_step(self.kind, &self.eq, u, tau, self.refinements)
    }
}

impl Stepper for HinLri {
    fn name(&self) -> String {
        format!("hinlri_{}", self.cfg.base_kind.name())
    }

    fn step(&self, u: &SpectralField, tau: f64) -> Result<SpectralField> {
        HinLri::step(self, u, tau)
    }
}

fn advance(stepper: &dyn Stepper, u0: &SpectralField, t_final: f64, tau: f64) -> Result<SpectralField> {
    let n_steps = (t_final / tau).round() as usize;
    let mut u = u0.clone();
    for s in 0..n_steps {
        u = stepper.step(&u, tau)?;
        if !u.is_finite() {
            return Err(CoreError::NonFinite { step: s + 1 });
        }
    }
    Ok(u)
}

/// Least-squares slope of `ln y` against `ln x` plus the fit residual.
fn loglog_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&x, &y) in lx.iter().zip(&ly) {
        num += (x - mx) * (y - my);
        den += (x - mx) * (x - mx);
    }
    let slope = num / den;
    let intercept = my - slope * mx;
    let residual: f64 = lx
        .iter()
        .zip(&ly)
        .map(|(&x, &y)| (y - slope * x - intercept).powi(2))
        .sum();
    (slope, residual)
}

/// Outcome of a τ-convergence study.
#[derive(Clone, Debug)]
pub struct ConvergenceReport {
    pub tau_values: Vec<f64>,
    /// Mean `L²` endpoint error over seeds; NaN where every run diverged.
    pub errors: Vec<f64>,
    pub empirical_order: f64,
    pub fit_residual: f64,
    /// τ values flagged as diverged (excluded from the fit).
    pub diverged: Vec<bool>,
}

impl ConvergenceReport {
    /// Build a report from precomputed (τ, error) pairs.
    pub fn from_errors(tau_values: Vec<f64>, errors: Vec<f64>) -> Result<Self> {
        if tau_values.len() != errors.len() || tau_values.len() < 2 {
            return Err(CoreError::Argument(
                "convergence report needs matched τ/error lists (≥2 points)".into(),
            ));
        }
        let mut clean_t = Vec::new();
        let mut clean_e = Vec::new();
        let mut diverged = Vec::new();
        for (&t, &e) in tau_values.iter().zip(&errors) {
            let bad = !e.is_finite() || e <= 0.0;
            diverged.push(bad);
            if !bad {
                clean_t.push(t);
                clean_e.push(e);
            }
        }
        if clean_t.len() < 2 {
            return Err(CoreError::Argument(
                "fewer than two convergent cells in the study".into(),
            ));
        }
        let (slope, residual) = loglog_fit(&clean_t, &clean_e);
        Ok(Self {
            tau_values,
            errors,
            empirical_order: slope,
            fit_residual: residual,
            diverged,
        })
    }
}

/// τ-convergence of a stepper against the implicit reference, mean error
/// over rough-data seeds (unit-`H^γ` normalised data).
#[allow(clippy::too_many_arguments)]
pub fn convergence_study(
    stepper: &dyn Stepper,
    eq: &EquationSpec,
    gamma: f64,
    tau_values: &[f64],
    n: usize,
    t_final: f64,
    seeds: &[u64],
    tau_ref: f64,
) -> Result<ConvergenceReport> {
    convergence_study_with(stepper, eq, gamma, tau_values, n, t_final, seeds, tau_ref, true)
}

/// As [`convergence_study`], with explicit control of the data
/// normalisation (the raw fractional-field amplitude drives stronger
/// nonlinear interaction and exposes the logarithmic envelope).
#[allow(clippy::too_many_arguments)]
pub fn convergence_study_with(
    stepper: &dyn Stepper,
    eq: &EquationSpec,
    gamma: f64,
    tau_values: &[f64],
    n: usize,
    t_final: f64,
    seeds: &[u64],
    tau_ref: f64,
    normalize: bool,
) -> Result<ConvergenceReport> {
    if tau_values.len() < 3 {
        return Err(CoreError::Argument("need at least 3 τ values".into()));
    }
    let mut sums = vec![0.0f64; tau_values.len()];
    let mut counts = vec![0usize; tau_values.len()];
    for &seed in seeds {
        let u0 = rough_initial_state(eq, gamma, n, seed, normalize)?;
        let reference = reference_solve(eq, &u0, t_final, tau_ref, t_final)?;
        let ref_end = reference.last().unwrap();
        for (i, &tau) in tau_values.iter().enumerate() {
            match advance(stepper, &u0, t_final, tau) {
                Ok(end) => {
                    let e = end.sub(ref_end)?.l2_norm();
                    if e.is_finite() {
                        sums[i] += e;
                        counts[i] += 1;
                    }
                }
                Err(CoreError::NonFinite { .. }) | Err(CoreError::Divergence { .. }) => {}
                Err(other) => return Err(other),
            }
        }
    }
    let errors: Vec<f64> = sums
        .iter()
        .zip(&counts)
        .map(|(&s, &c)| if c > 0 { s / c as f64 } else { f64::NAN })
        .collect();
    ConvergenceReport::from_errors(tau_values.to_vec(), errors)
}

/// Classification of a convergence curve.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnvelopeClass {
    PowerLaw,
    LogEnvelope,
}

/// Compare the residuals of fitting `C·τ^γ` against `C·τ^γ·ln(1/τ)`;
/// return the better model and the residual ratio (log-model residual over
/// power-model residual). Ties break toward the simpler power law.
pub fn log_envelope_test(report: &ConvergenceReport, gamma: f64) -> (EnvelopeClass, f64) {
    let mut power_res = 0.0;
    let mut log_res = 0.0;
    // both models are linear in ln C: residual of the constant fit
    let mut c_power = Vec::new();
    let mut c_log = Vec::new();
    for (i, (&tau, &err)) in report.tau_values.iter().zip(&report.errors).enumerate() {
        if report.diverged[i] {
            continue;
        }
        c_power.push(err.ln() - gamma * tau.ln());
        c_log.push(err.ln() - gamma * tau.ln() - (1.0 / tau).ln().ln());
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let mp = mean(&c_power);
    let ml = mean(&c_log);
    for (&a, &b) in c_power.iter().zip(&c_log) {
        power_res += (a - mp).powi(2);
        log_res += (b - ml).powi(2);
    }
    if log_res < power_res {
        (EnvelopeClass::LogEnvelope, log_res / power_res.max(1e-300))
    } else {
        (EnvelopeClass::PowerLaw, log_res / power_res.max(1e-300))
    }
}

/// Outcome of a spatial-refinement scan at fixed τ.
#[derive(Clone, Debug)]
pub struct RefinementReport {
    pub grid_sizes: Vec<usize>,
    pub errors: Vec<f64>,
    /// Smallest N whose error exceeds 10× the minimum over smaller N.
    pub divergence_threshold: Option<usize>,
}

pub fn refinement_scan(
    stepper: &dyn Stepper,
    eq: &EquationSpec,
    gamma: f64,
    tau: f64,
    grid_sizes: &[usize],
    t_final: f64,
    seed: u64,
    tau_ref: f64,
) -> Result<RefinementReport> {
    if grid_sizes.len() < 3 {
        return Err(CoreError::Argument("need at least 3 grid sizes".into()));
    }
    let mut errors = Vec::with_capacity(grid_sizes.len());
    for &n in grid_sizes {
        let u0 = rough_initial_state(eq, gamma, n, seed, true)?;
        let err = match advance(stepper, &u0, t_final, tau) {
            Ok(end) => {
                let reference = reference_solve(eq, &u0, t_final, tau_ref, t_final)?;
                let e = end.sub(reference.last().unwrap())?.l2_norm();
                if e.is_finite() {
                    e
                } else {
                    f64::INFINITY
                }
            }
            Err(CoreError::NonFinite { .. }) | Err(CoreError::Divergence { .. }) => f64::INFINITY,
            Err(other) => return Err(other),
        };
        errors.push(err);
    }
    let mut threshold = None;
    let mut running_min = f64::INFINITY;
    for (i, &e) in errors.iter().enumerate() {
        if i > 0 && running_min.is_finite() && e > 10.0 * running_min {
            threshold = Some(grid_sizes[i]);
            break;
        }
        running_min = running_min.min(e);
    }
    Ok(RefinementReport {
        grid_sizes: grid_sizes.to_vec(),
        errors,
        divergence_threshold: threshold,
    })
}

/// Phase mismatch kernel of the averaging approximation:
/// `η(τ,φ₁,φ₂) = M_τ(e^{-is(φ₁+φ₂)}) - M_τ(e^{-isφ₁}) M_τ(e^{-isφ₂})`
/// with `M_τ(e^{-isφ}) = φ₁-function at `-iτφ`, series-guarded near zero.
pub fn eta_kernel(tau: f64, phi_1: f64, phi_2: f64) -> Result<Complex64> {
    if tau <= 0.0 {
        return Err(CoreError::Argument("eta kernel needs τ > 0".into()));
    }
    let avg = |phi: f64| phi1(Complex64::new(0.0, -tau * phi));
    Ok(avg(phi_1 + phi_2) - avg(phi_1) * avg(phi_2))
}

/// Quadrature evaluation of the same kernel (oracle path): composite
/// Simpson with `points` panels on each time average.
pub fn eta_kernel_quadrature(tau: f64, phi_1: f64, phi_2: f64, points: usize) -> Complex64 {
    let avg = |phi: f64| -> Complex64 {
        let n = points + points % 2; // even panel count
        let h = tau / n as f64;
        let f = |s: f64| Complex64::from_polar(1.0, -s * phi);
        let mut acc = f(0.0) + f(tau);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(i as f64 * h);
        }
        acc * h / 3.0 / tau
    };
    avg(phi_1 + phi_2) - avg(phi_1) * avg(phi_2)
}

/// Residual of the KdV cubic factorization identity under a
/// KdV-Burgers-type symbol perturbation `ω_ε(k) = k³ + ε k²`:
/// `|ω_ε(k) - ω_ε(k₁) - ω_ε(k₂) - 3kk₁k₂| / |3kk₁k₂|` with `k₂ = k - k₁`.
/// The cubic part cancels exactly in integer arithmetic, so the residual
/// is exactly linear in ε.
pub fn factorization_residual(k: i64, k1: i64, eps: f64) -> Result<f64> {
    let k2 = k - k1;
    if k == 0 || k1 == 0 || k2 == 0 {
        return Err(CoreError::Argument(
            "factorization residual needs nonzero k, k₁, k₂".into(),
        ));
    }
    let cube = |x: i64| (x as i128).pow(3);
    let cubic_residue = cube(k) - cube(k1) - cube(k2) - 3 * (k as i128) * (k1 as i128) * (k2 as i128);
    debug_assert_eq!(cubic_residue, 0);
    let quad = (k as i128) * (k as i128) - (k1 as i128) * (k1 as i128) - (k2 as i128) * (k2 as i128);
    let denom = 3 * (k as i128) * (k1 as i128) * (k2 as i128);
    Ok((cubic_residue as f64 + eps * quad as f64).abs() / (denom as f64).abs())
}

/// Relative drift series of mass and Hamiltonian along a trajectory.
#[derive(Clone, Debug)]
pub struct DriftReport {
    pub times: Vec<f64>,
    pub mass_drift: Vec<f64>,
    pub hamiltonian_drift: Vec<f64>,
    pub max_mass_drift: f64,
    pub max_hamiltonian_drift: f64,
    /// Set when `H(0) = 0` and the Hamiltonian drift is absolute.
    pub hamiltonian_absolute: bool,
}

pub fn invariant_drift(trajectory: &[SpectralField], eq: &EquationSpec, dt: f64) -> Result<DriftReport> {
    if trajectory.is_empty() {
        return Err(CoreError::Argument("empty trajectory".into()));
    }
    let m0 = eq.mass(&trajectory[0]);
    let h0 = eq.hamiltonian(&trajectory[0])?;
    let ham_absolute = h0.abs() < 1e-14;
    let mut times = Vec::with_capacity(trajectory.len());
    let mut mass = Vec::with_capacity(trajectory.len());
    let mut ham = Vec::with_capacity(trajectory.len());
    for (i, state) in trajectory.iter().enumerate() {
        times.push(i as f64 * dt);
        mass.push((eq.mass(state) - m0).abs() / m0.max(1e-300));
        let h = eq.hamiltonian(state)?;
        ham.push(if ham_absolute {
            (h - h0).abs()
        } else {
            (h - h0).abs() / h0.abs()
        });
    }
    let max_mass_drift = mass.iter().cloned().fold(0.0, f64::max);
    let max_hamiltonian_drift = ham.iter().cloned().fold(0.0, f64::max);
    Ok(DriftReport {
        times,
        mass_drift: mass,
        hamiltonian_drift: ham,
        max_mass_drift,
        max_hamiltonian_drift,
        hamiltonian_absolute: ham_absolute,
    })
}

/// Fourier amplitude of the error, binned by `|k|`.
pub fn error_spectrum(u_num: &SpectralField, u_ref: &SpectralField) -> Result<Vec<f64>> {
    if u_num.grid() != u_ref.grid() {
        return Err(CoreError::Dimension {
            expected: u_ref.grid().n_modes(),
            got: u_num.grid().n_modes(),
        });
    }
    let grid = u_num.grid();
    let mut bins = vec![0.0f64; grid.n_modes() / 2 + 1];
    for i in 0..grid.n_modes() {
        let b = grid.wavenumber(i).unsigned_abs() as usize;
        bins[b] += (u_num.coeffs()[i] - u_ref.coeffs()[i]).norm_sqr();
    }
    Ok(bins.into_iter().map(f64::sqrt).collect())
}

/// Decorated-tree term count at nonlinearity interaction order `p`: the
/// Catalan number `C_{p+1}` (132 terms at p = 5).
pub fn catalan_term_count(p: u32) -> u128 {
    let mut c: u128 = 1; // C_0
    for n in 0..=p as u128 {
        c = c * 2 * (2 * n + 1) / (n + 2);
    }
    c
}

/// FFT-path vs brute-force quadratic convolution: equality check and
/// log-log timing slopes.
#[derive(Clone, Debug)]
pub struct ConvolutionBench {
    pub grid_sizes: Vec<usize>,
    pub fft_ms: Vec<f64>,
    pub brute_ms: Vec<f64>,
    pub max_abs_diff: f64,
    pub fft_slope: f64,
    pub brute_slope: f64,
}

fn brute_quadratic_convolution(a: &SpectralField, cutoff: i64) -> SpectralField {
    let grid = a.grid();
    let n = grid.n_modes() as i64;
    let scale = 1.0 / (grid.n_modes() as f64).sqrt();
    // dense band buffer indexed by k + cutoff for branch-free inner loops
    let width = (2 * cutoff + 1) as usize;
    let mut band = vec![Complex64::new(0.0, 0.0); width];
    for (i, slot) in band.iter_mut().enumerate() {
        *slot = a.coeff(i as i64 - cutoff);
    }
    let mut out = SpectralField::zero(grid, crate::spectral::Reality::ComplexValued);
    for k in -cutoff.min(n / 2 - 1)..=cutoff.min(n / 2 - 1) {
        let lo = (-cutoff).max(k - cutoff);
        let hi = cutoff.min(k + cutoff);
        let mut acc = Complex64::new(0.0, 0.0);
        for k1 in lo..=hi {
            let k2 = k - k1;
            acc += band[(k1 + cutoff) as usize] * band[(k2 + cutoff) as usize];
        }
        out.set_coeff(k, acc * scale);
    }
    out
}

pub fn convolution_bench(grid_sizes: &[usize], seed: u64) -> Result<ConvolutionBench> {
    let mut fft_ms = Vec::new();
    let mut brute_ms = Vec::new();
    let mut max_abs_diff: f64 = 0.0;
    for &n in grid_sizes {
        if n > 4096 {
            return Err(CoreError::Argument(
                "brute-force convolution is capped at N ≤ 4096".into(),
            ));
        }
        let grid = Grid1D::new(n)?;
        let field = crate::testutil::rand_complex_field(grid, seed + n as u64);
        let fraction = 2.0 / 3.0;
        let cutoff = (fraction * n as f64 / 2.0).floor() as i64;
        let ud = field.dealias(fraction);

        // median of per-repetition timings; blocks of work between timer
        // reads keep granularity effects out of the small-N cells
        let fft_reps = (400_000 / n).max(16);
        let mut samples = Vec::with_capacity(fft_reps);
        let mut fft_out = None;
        for _ in 0..fft_reps {
            let t0 = Instant::now();
            fft_out = Some(ud.pointwise_product(&ud)?.dealias(fraction));
            samples.push(t0.elapsed().as_secs_f64() * 1000.0);
        }
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        fft_ms.push(samples[samples.len() / 2]);

        let brute_reps = (8_000_000 / (n * n)).max(5);
        let mut samples = Vec::with_capacity(brute_reps);
        let mut brute_out = None;
        for _ in 0..brute_reps {
            let t0 = Instant::now();
            brute_out = Some(brute_quadratic_convolution(&ud, cutoff));
            samples.push(t0.elapsed().as_secs_f64() * 1000.0);
        }
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        brute_ms.push(samples[samples.len() / 2]);

        let f = fft_out.unwrap();
        let b = brute_out.unwrap().dealias(fraction);
        for (x, y) in f.coeffs().iter().zip(b.coeffs()) {
            max_abs_diff = max_abs_diff.max((x - y).norm());
        }
    }
    let ns: Vec<f64> = grid_sizes.iter().map(|&n| n as f64).collect();
    let (fft_slope, _) = loglog_fit(&ns, &fft_ms);
    let (brute_slope, _) = loglog_fit(&ns, &brute_ms);
    Ok(ConvolutionBench {
        grid_sizes: grid_sizes.to_vec(),
        fft_ms,
        brute_ms,
        max_abs_diff,
        fft_slope,
        brute_slope,
    })
}

/// Median wall-clock per step of a stepper at each grid size.
pub fn timing_bench(
    stepper: &dyn Stepper,
    make_state: impl Fn(usize) -> Result<SpectralField>,
    grid_sizes: &[usize],
    tau: f64,
    timed_steps: usize,
) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(grid_sizes.len());
    for &n in grid_sizes {
        let u0 = make_state(n)?;
        // warmup (also primes the FFT planner cache)
        let mut u = u0.clone();
        for _ in 0..5.min(timed_steps) {
            u = stepper.step(&u, tau)?;
        }
        let mut samples = Vec::with_capacity(timed_steps);
        let mut state = u0.clone();
        for _ in 0..timed_steps {
            let t0 = Instant::now();
            state = stepper.step(&state, tau)?;
            samples.push(t0.elapsed().as_secs_f64() * 1000.0);
        }
        samples.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out.push(samples[samples.len() / 2]);
    }
    Ok(out)
}

/// Break-even simulation count of the amortised-training comparison:
/// `W* = c_td / (c_num - c_hyb)`; `None` when the hybrid is not cheaper.
pub fn tct_breakeven(c_num: f64, c_hyb: f64, c_td: f64) -> Option<f64> {
    if c_num <= c_hyb {
        return None;
    }
    Some(c_td / (c_num - c_hyb))
}
