//! End-to-end run orchestration shared by the command-line driver and the
//! acceptance suite: training runs, checkpointing, studies and their
//! CSV/JSON emission.

use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::checkpoint::{
    decode_basis, decode_fields, decode_params, encode_basis, encode_fields, encode_params,
    Checkpoint,
};
use crate::config::{Command, RunConfig};
use crate::corrector::{build_trunk_basis, Architecture, CorrectorParams, TrunkBasis};
use crate::diagnostics::{
    catalan_term_count, convergence_study, convolution_bench, eta_kernel, eta_kernel_quadrature,
    factorization_residual, invariant_drift, log_envelope_test, refinement_scan, timing_bench,
    ClassicalStepper, EnvelopeClass, RefinedStepper, Stepper,
};
use crate::equations::EquationSpec;
use crate::error::{CoreError, Result};
use crate::hinlri::{HinLri, HinLriConfig};
use crate::integrators::{solve_classical, IntegratorKind, PicardConfig};
use crate::results::{fmt_f64, write_csv, write_json_summary, Provenance, Table};
use crate::rough::{ood_profile, OodKind};
use crate::spectral::{Grid1D, SpectralField};
use crate::training::{
    build_dataset_with, corrector_snapshots, dataset_from_states, mini_retrain,
    rough_initial_state, train, Dataset, TrainContext, TrainOutcome, TrainingConfig, TrainingLog,
};

/// A trained hybrid solver: basis, weights and step configuration.
pub struct TrainedModel {
    pub eq: EquationSpec,
    pub basis: Arc<TrunkBasis>,
    pub params: CorrectorParams,
    pub hin: HinLriConfig,
}

impl TrainedModel {
    pub fn solver(&self) -> Result<HinLri> {
        HinLri::new(self.eq, self.basis.clone(), self.params.clone(), self.hin)
    }
}

pub fn provenance(cfg: &RunConfig) -> Provenance {
    Provenance {
        config_hash: cfg.config_hash(),
        seeds: cfg.seeds.clone(),
    }
}

fn hin_config(cfg: &RunConfig) -> Result<HinLriConfig> {
    let base = cfg.integrator_kind()?;
    let base = if base.is_explicit_base() {
        base
    } else {
        match cfg.equation_kind()? {
            crate::equations::EquationKind::Kdv => IntegratorKind::Res1Kdv,
            crate::equations::EquationKind::CubicNls => IntegratorKind::Res1Nls,
            crate::equations::EquationKind::QuadraticNls => IntegratorKind::Etd1,
        }
    };
    HinLriConfig::new(cfg.hinlri.picard_m, cfg.hinlri.trigger_kappa, base)
}

fn training_config(cfg: &RunConfig) -> Result<TrainingConfig> {
    let mut tc = TrainingConfig::desk_default(cfg.equation_kind()?);
    tc.unroll_steps = cfg.training.unroll_steps;
    tc.batch = cfg.training.batch;
    tc.lr = cfg.training.lr;
    tc.weight_decay = cfg.training.weight_decay;
    tc.epochs = cfg.training.epochs;
    tc.sobolev_s = cfg.sobolev_s()?;
    tc.seed = cfg.seeds[0];
    Ok(tc)
}

/// Training datasets, basis and context from a run configuration.
pub fn prepare_training(cfg: &RunConfig) -> Result<(Dataset, Dataset, TrainContext)> {
    let eq = cfg.equation_spec()?;
    let tc = training_config(cfg)?;
    let seed_base = cfg.seeds[0].wrapping_mul(1_000_003);
    let train_set = build_dataset_with(
        &eq,
        cfg.gamma,
        &cfg.grid_sizes,
        &cfg.tau_values,
        cfg.training.train_samples,
        tc.unroll_steps,
        seed_base,
        32,
        cfg.training.normalize_data,
    )?;
    let val_set = build_dataset_with(
        &eq,
        cfg.gamma,
        &cfg.grid_sizes,
        &cfg.tau_values,
        cfg.training.val_samples,
        tc.unroll_steps,
        seed_base.wrapping_add(500_009),
        32,
        cfg.training.normalize_data,
    )?;
    let hin = hin_config(cfg)?;
    let snaps = corrector_snapshots(&eq, hin.base_kind, &train_set, 4, 64)?;
    let basis = Arc::new(build_trunk_basis(&snaps, cfg.hinlri.latent_dim)?);
    let probe_tau = cfg.tau_values[cfg.tau_values.len() / 2];
    let probe: Vec<SpectralField> = val_set
        .samples
        .iter()
        .take(8)
        .map(|s| s.u0.clone())
        .collect();
    let ctx = TrainContext {
        eq,
        basis,
        hin,
        cfg: tc,
        defect_probe: Some((probe, probe_tau)),
    };
    Ok((train_set, val_set, ctx))
}

/// Full training run; returns the trained model (best validation) and log.
pub fn run_training(cfg: &RunConfig) -> Result<(TrainedModel, TrainOutcome)> {
    let (train_set, val_set, ctx) = prepare_training(cfg)?;
    let init = CorrectorParams::init(
        Architecture::with_depth(
            cfg.hinlri.latent_dim,
            cfg.hinlri.enc_hidden,
            cfg.hinlri.dec_hidden,
        ),
        cfg.hinlri.w_max,
        ctx.cfg.seed,
    );
    let outcome = train(&init, &train_set, &val_set, &ctx)?;
    let model = TrainedModel {
        eq: ctx.eq,
        basis: ctx.basis.clone(),
        params: outcome.best.clone(),
        hin: ctx.hin,
    };
    Ok((model, outcome))
}

pub fn save_model(path: &Path, model: &TrainedModel, cfg: &RunConfig) -> Result<()> {
    let mut ck = Checkpoint::new();
    ck.insert("trunk_basis", encode_basis(&model.basis));
    ck.insert("corrector", encode_params(&model.params));
    ck.insert(
        "config_snapshot",
        cfg.to_effective_json().into_bytes(),
    );
    ck.save(path)
}

pub fn load_model(path: &Path, cfg: &RunConfig) -> Result<TrainedModel> {
    let ck = Checkpoint::load(path)?;
    let basis = decode_basis(ck.require("trunk_basis")?)?;
    let params = decode_params(ck.require("corrector")?)?;
    Ok(TrainedModel {
        eq: cfg.equation_spec()?,
        basis: Arc::new(basis),
        params,
        hin: hin_config(cfg)?,
    })
}

pub fn training_log_table(log: &TrainingLog) -> Table {
    let mut t = Table::new(&[
        "phase",
        "epoch",
        "lr",
        "train_loss",
        "val_loss",
        "lipschitz_bound",
        "defect_ratio",
    ]);
    for e in &log.epochs {
        t.push_row(vec![
            e.phase.to_string(),
            e.epoch.to_string(),
            fmt_f64(e.lr),
            fmt_f64(e.train_loss),
            fmt_f64(e.val_loss),
            fmt_f64(e.lipschitz),
            fmt_f64(e.defect_ratio),
        ])
        .expect("fixed arity");
    }
    t
}

fn stepper_for(cfg: &RunConfig, model: Option<&TrainedModel>) -> Result<Box<dyn Stepper>> {
    match model {
        Some(m) => Ok(Box::new(m.solver()?)),
        None => Ok(Box::new(ClassicalStepper::new(
            cfg.integrator_kind()?,
            cfg.equation_spec()?,
        ))),
    }
}

/// `converge` command: τ-convergence study plus envelope classification.
pub fn run_converge(cfg: &RunConfig, model: Option<&TrainedModel>, out: &Path) -> Result<f64> {
    let eq = cfg.equation_spec()?;
    let stepper = stepper_for(cfg, model)?;
    let tau_min = cfg.tau_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let report = convergence_study(
        stepper.as_ref(),
        &eq,
        cfg.gamma,
        &cfg.tau_values,
        cfg.grid_sizes[0],
        cfg.t_final,
        &cfg.seeds,
        tau_min / 32.0,
    )?;
    let (envelope, residual_ratio) = log_envelope_test(&report, cfg.gamma);
    let prov = provenance(cfg);
    let mut table = Table::new(&["tau", "mean_l2_error", "diverged"]);
    for i in 0..report.tau_values.len() {
        table.push_row(vec![
            fmt_f64(report.tau_values[i]),
            fmt_f64(report.errors[i]),
            report.diverged[i].to_string(),
        ])?;
    }
    write_csv(&out.join("convergence.csv"), &table, &prov)?;
    write_json_summary(
        &out.join("convergence_summary.json"),
        serde_json::json!({
            "integrator": stepper.name(),
            "empirical_order": report.empirical_order,
            "fit_residual": report.fit_residual,
            "envelope": match envelope {
                EnvelopeClass::PowerLaw => "power_law",
                EnvelopeClass::LogEnvelope => "log_envelope",
            },
            "envelope_residual_ratio": residual_ratio,
        }),
        &prov,
    )?;
    Ok(report.empirical_order)
}

/// `refine` command: error across grid sizes at fixed τ.
pub fn run_refine(cfg: &RunConfig, model: Option<&TrainedModel>, out: &Path) -> Result<Option<usize>> {
    let eq = cfg.equation_spec()?;
    let stepper = stepper_for(cfg, model)?;
    let tau = cfg.tau_values[0];
    let report = refinement_scan(
        stepper.as_ref(),
        &eq,
        cfg.gamma,
        tau,
        &cfg.grid_sizes,
        cfg.t_final,
        cfg.seeds[0],
        tau / 32.0,
    )?;
    let prov = provenance(cfg);
    let mut table = Table::new(&["n", "l2_error"]);
    for (n, e) in report.grid_sizes.iter().zip(&report.errors) {
        table.push_row(vec![n.to_string(), fmt_f64(*e)])?;
    }
    write_csv(&out.join("refinement.csv"), &table, &prov)?;
    write_json_summary(
        &out.join("refinement_summary.json"),
        serde_json::json!({
            "integrator": stepper.name(),
            "tau": tau,
            "divergence_threshold": report.divergence_threshold,
        }),
        &prov,
    )?;
    Ok(report.divergence_threshold)
}

/// `diagnose` command: the defect-verification bundle.
pub fn run_diagnose(cfg: &RunConfig, out: &Path) -> Result<()> {
    let eq = cfg.equation_spec()?;
    let prov = provenance(cfg);

    // factorization residuals under symbol perturbation
    let mut fact = Table::new(&["k", "k1", "eps", "residual"]);
    for &eps in &[0.0, 1e-3, 1e-2, 1e-1] {
        for k in 2..=32i64 {
            let k1 = k / 2;
            let k2 = k - k1;
            if k1 == 0 || k2 == 0 {
                continue;
            }
            fact.push_row(vec![
                k.to_string(),
                k1.to_string(),
                fmt_f64(eps),
                fmt_f64(factorization_residual(k, k1, eps)?),
            ])?;
        }
    }
    write_csv(&out.join("factorization_residual.csv"), &fact, &prov)?;

    // averaging mismatch kernel vs quadrature
    let mut eta = Table::new(&["tau", "phi1", "phi2", "eta_re", "eta_im", "quad_diff"]);
    let mut max_quad_diff: f64 = 0.0;
    for &tau in &[1e-3, 1e-2, 1e-1] {
        for &(p1, p2) in &[(1.0, 1.0), (10.0, -3.0), (120.0, 7.0), (500.0, 500.0)] {
            let v = eta_kernel(tau, p1, p2)?;
            let q = eta_kernel_quadrature(tau, p1, p2, 10_000);
            let d = (v - q).norm();
            max_quad_diff = max_quad_diff.max(d);
            eta.push_row(vec![
                fmt_f64(tau),
                fmt_f64(p1),
                fmt_f64(p2),
                fmt_f64(v.re),
                fmt_f64(v.im),
                fmt_f64(d),
            ])?;
        }
    }
    write_csv(&out.join("eta_kernel.csv"), &eta, &prov)?;

    // decorated-tree term counts
    let mut cat = Table::new(&["p", "terms"]);
    for p in 1..=8u32 {
        cat.push_row(vec![p.to_string(), catalan_term_count(p).to_string()])?;
    }
    write_csv(&out.join("catalan_terms.csv"), &cat, &prov)?;

    // invariant drift of the configured integrator
    let kind = cfg.integrator_kind()?;
    let tau = cfg.tau_values[0];
    let u0 = rough_initial_state(&eq, cfg.gamma, cfg.grid_sizes[0], cfg.seeds[0], true)?;
    let traj = solve_classical(kind, &eq, &u0, cfg.t_final, tau, &PicardConfig::default())?;
    let drift = invariant_drift(&traj, &eq, tau)?;
    let mut dt = Table::new(&["t", "mass_drift", "hamiltonian_drift"]);
    let stride = (drift.times.len() / 64).max(1);
    for i in (0..drift.times.len()).step_by(stride) {
        dt.push_row(vec![
            fmt_f64(drift.times[i]),
            fmt_f64(drift.mass_drift[i]),
            fmt_f64(drift.hamiltonian_drift[i]),
        ])?;
    }
    write_csv(&out.join("invariant_drift.csv"), &dt, &prov)?;

    write_json_summary(
        &out.join("diagnose_summary.json"),
        serde_json::json!({
            "eta_max_quadrature_diff": max_quad_diff,
            "catalan_p5": catalan_term_count(5) as u64,
            "max_mass_drift": drift.max_mass_drift,
            "max_hamiltonian_drift": drift.max_hamiltonian_drift,
            "hamiltonian_drift_absolute": drift.hamiltonian_absolute,
            "integrator": kind.name(),
        }),
        &prov,
    )?;
    Ok(())
}

/// `bench` command: convolution scaling, per-step timings and the
/// amortised break-even account.
pub fn run_bench(cfg: &RunConfig, model: Option<&TrainedModel>, out: &Path) -> Result<()> {
    let eq = cfg.equation_spec()?;
    let prov = provenance(cfg);
    let conv_sizes: Vec<usize> = cfg
        .grid_sizes
        .iter()
        .cloned()
        .filter(|&n| n <= 4096)
        .collect();
    let conv = convolution_bench(&conv_sizes, cfg.seeds[0])?;
    let mut ct = Table::new(&["n", "fft_ms", "brute_ms"]);
    for i in 0..conv.grid_sizes.len() {
        ct.push_row(vec![
            conv.grid_sizes[i].to_string(),
            fmt_f64(conv.fft_ms[i]),
            fmt_f64(conv.brute_ms[i]),
        ])?;
    }
    write_csv(&out.join("convolution_bench.csv"), &ct, &prov)?;

    let tau = cfg.tau_values[0];
    let gamma = cfg.gamma;
    let make_state = |n: usize| {
        // small-amplitude smooth state keeps the implicit iteration
        // contractive at macro steps on every grid
        let f = rough_initial_state(&eq, 3.0, n, 11, true)?;
        Ok(f.scaled(Complex64::new(0.25, 0.0)))
    };
    let _ = gamma;
    let base_kind = hin_config(cfg)?.base_kind;
    let base = ClassicalStepper::new(base_kind, eq);
    let refined = RefinedStepper {
        kind: base_kind,
        eq,
        refinements: cfg.hinlri.picard_m,
    };
    let implicit = ClassicalStepper::new(IntegratorKind::ImplicitLri, eq);
    let timed = 100;
    let base_ms = timing_bench(&base, make_state, &cfg.grid_sizes, tau, timed)?;
    let refined_ms = timing_bench(&refined, make_state, &cfg.grid_sizes, tau, timed)?;
    let implicit_ms = timing_bench(&implicit, make_state, &cfg.grid_sizes, tau, timed)?;
    let hybrid_ms = match model {
        Some(m) => Some(timing_bench(&m.solver()?, make_state, &cfg.grid_sizes, tau, timed)?),
        None => None,
    };
    let mut tt = Table::new(&["n", "base_ms", "refined_ms", "implicit_ms", "hinlri_ms"]);
    for (i, &n) in cfg.grid_sizes.iter().enumerate() {
        tt.push_row(vec![
            n.to_string(),
            fmt_f64(base_ms[i]),
            fmt_f64(refined_ms[i]),
            fmt_f64(implicit_ms[i]),
            hybrid_ms
                .as_ref()
                .map(|h| fmt_f64(h[i]))
                .unwrap_or_else(|| "nan".into()),
        ])?;
    }
    write_csv(&out.join("timing_bench.csv"), &tt, &prov)?;

    let last = cfg.grid_sizes.len() - 1;
    let steps_per_sim = (cfg.t_final / tau).round();
    let breakeven = hybrid_ms.as_ref().map(|h| {
        // per-simulation costs in minutes; training cost c_td from the
        // reference offline budget (the paper-scale 140 min)
        let c_num = implicit_ms[last] * steps_per_sim / 60_000.0;
        let c_hyb = h[last] * steps_per_sim / 60_000.0;
        crate::diagnostics::tct_breakeven(c_num, c_hyb, 140.0)
    });
    write_json_summary(
        &out.join("bench_summary.json"),
        serde_json::json!({
            "fft_slope": conv.fft_slope,
            "brute_slope": conv.brute_slope,
            "conv_max_abs_diff": conv.max_abs_diff,
            "hinlri_over_refined_ratio": hybrid_ms
                .as_ref()
                .map(|h| h[last] / refined_ms[last]),
            "implicit_over_base_ratio": implicit_ms[last] / base_ms[last],
            "tct_breakeven_sims_at_140min": breakeven,
        }),
        &prov,
    )?;
    Ok(())
}

/// `generate-data` command: rough fields for every seed into a container.
pub fn run_generate_data(cfg: &RunConfig, out: &Path) -> Result<usize> {
    let eq = cfg.equation_spec()?;
    let mut fields = Vec::new();
    for &seed in &cfg.seeds {
        for &n in &cfg.grid_sizes {
            fields.push(rough_initial_state(
                &eq,
                cfg.gamma,
                n,
                seed,
                cfg.training.normalize_data,
            )?);
        }
    }
    let mut ck = Checkpoint::new();
    ck.insert("fields", encode_fields(&fields));
    ck.insert("config_snapshot", cfg.to_effective_json().into_bytes());
    std::fs::create_dir_all(out).map_err(|e| CoreError::Io {
        path: out.display().to_string(),
        source: e,
    })?;
    ck.save(&out.join("dataset.ckpt"))?;
    let prov = provenance(cfg);
    let mut t = Table::new(&["index", "seed", "n", "l2_norm"]);
    let mut i = 0;
    for &seed in &cfg.seeds {
        for &n in &cfg.grid_sizes {
            t.push_row(vec![
                i.to_string(),
                seed.to_string(),
                n.to_string(),
                fmt_f64(fields[i].l2_norm()),
            ])?;
            i += 1;
        }
    }
    write_csv(&out.join("dataset_manifest.csv"), &t, &prov)?;
    Ok(fields.len())
}

/// `run-solver` command: one trajectory with per-step invariant logging.
pub fn run_solver(cfg: &RunConfig, model: Option<&TrainedModel>, out: &Path) -> Result<()> {
    let eq = cfg.equation_spec()?;
    let tau = cfg.tau_values[0];
    let u0 = rough_initial_state(
        &eq,
        cfg.gamma,
        cfg.grid_sizes[0],
        cfg.seeds[0],
        cfg.training.normalize_data,
    )?;
    let traj = match model {
        Some(m) => m.solver()?.solve(&u0, cfg.t_final, tau)?,
        None => solve_classical(
            cfg.integrator_kind()?,
            &eq,
            &u0,
            cfg.t_final,
            tau,
            &PicardConfig::default(),
        )?,
    };
    let drift = invariant_drift(&traj, &eq, tau)?;
    let prov = provenance(cfg);
    let mut t = Table::new(&["t", "mass_drift", "hamiltonian_drift"]);
    for i in 0..drift.times.len() {
        t.push_row(vec![
            fmt_f64(drift.times[i]),
            fmt_f64(drift.mass_drift[i]),
            fmt_f64(drift.hamiltonian_drift[i]),
        ])?;
    }
    write_csv(&out.join("invariants.csv"), &t, &prov)?;
    let mut ck = Checkpoint::new();
    let stride = (traj.len() / 32).max(1);
    let kept: Vec<SpectralField> = traj.iter().step_by(stride).cloned().collect();
    ck.insert("fields", encode_fields(&kept));
    ck.insert("config_snapshot", cfg.to_effective_json().into_bytes());
    ck.save(&out.join("trajectory.ckpt"))?;
    write_json_summary(
        &out.join("solver_summary.json"),
        serde_json::json!({
            "max_mass_drift": drift.max_mass_drift,
            "max_hamiltonian_drift": drift.max_hamiltonian_drift,
            "steps": traj.len() - 1,
        }),
        &prov,
    )?;
    Ok(())
}

/// Family of OOD initial states: the base profile under random amplitude
/// scaling and circular shifts.
pub fn ood_family(
    kind: OodKind,
    grid: Grid1D,
    width: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<SpectralField>> {
    let base = ood_profile(kind, grid, width)?;
    let mut out = Vec::with_capacity(count);
    let mut rng = crate::rng::SplitMix64::keyed(seed, 0x00D);
    for _ in 0..count {
        let amp = rng.next_range(0.5, 1.5);
        let shift = rng.next_range(0.0, 2.0 * std::f64::consts::PI);
        let mut f = base.scaled(Complex64::new(amp, 0.0));
        for i in 0..grid.n_modes() {
            let k = grid.wavenumber(i) as f64;
            f.coeffs_mut()[i] *= Complex64::from_polar(1.0, -k * shift);
        }
        out.push(f);
    }
    Ok(out)
}

pub struct RetrainReport {
    pub zero_shot_error: f64,
    pub retrained_error: f64,
    pub base_error: f64,
}

/// `retrain` command: zero-shot OOD evaluation, mini retraining on a fresh
/// OOD family, and re-evaluation.
pub fn run_retrain(
    cfg: &RunConfig,
    model: &TrainedModel,
    steps: usize,
    out: &Path,
) -> Result<RetrainReport> {
    let eq = model.eq;
    let grid = Grid1D::new(cfg.grid_sizes[0])?;
    let tau = cfg.tau_values[0];
    let family = ood_family(OodKind::RiemannStep, grid, 0.0, 50, cfg.seeds[0])?;
    let unroll = cfg.training.unroll_steps.min(8);
    let ood_set = dataset_from_states(&eq, &family[..family.len().min(50)], tau, unroll, 32)?;

    let eval_state = ood_profile(OodKind::RiemannStep, grid, 0.0)?
        .scaled(Complex64::new(0.35, 0.0));
    let t_eval = cfg.t_final.min(0.25);
    let reference = crate::integrators::reference_solve(&eq, &eval_state, t_eval, tau / 32.0, t_eval)?;
    let ref_end = reference.last().unwrap();

    let solver = model.solver()?;
    let zero_traj = solver.solve(&eval_state, t_eval, tau)?;
    let zero_err = zero_traj.last().unwrap().sub(ref_end)?.l2_norm();

    let mut base = eval_state.clone();
    let n_steps = (t_eval / tau).round() as usize;
    for _ in 0..n_steps {
        base = crate::integrators::picard_refined_step(
            model.hin.base_kind,
            &eq,
            &base,
            tau,
            model.hin.picard_m,
        )?;
    }
    let base_err = base.sub(ref_end)?.l2_norm();

    let mut tc = training_config(cfg)?;
    tc.unroll_steps = unroll;
    let ctx = TrainContext {
        eq,
        basis: model.basis.clone(),
        hin: model.hin,
        cfg: tc,
        defect_probe: None,
    };
    let retrained = mini_retrain(&model.params, &ood_set, steps, &ctx)?;
    let solver2 = HinLri::new(eq, model.basis.clone(), retrained.clone(), model.hin)?;
    let re_traj = solver2.solve(&eval_state, t_eval, tau)?;
    let re_err = re_traj.last().unwrap().sub(ref_end)?.l2_norm();

    let prov = provenance(cfg);
    write_json_summary(
        &out.join("retrain_summary.json"),
        serde_json::json!({
            "zero_shot_error": zero_err,
            "retrained_error": re_err,
            "base_error": base_err,
            "steps": steps,
        }),
        &prov,
    )?;
    let mut ck = Checkpoint::new();
    ck.insert("trunk_basis", encode_basis(&model.basis));
    ck.insert("corrector", encode_params(&retrained));
    ck.insert("config_snapshot", cfg.to_effective_json().into_bytes());
    ck.save(&out.join("retrained.ckpt"))?;
    Ok(RetrainReport {
        zero_shot_error: zero_err,
        retrained_error: re_err,
        base_error: base_err,
    })
}

/// Load the field set written by `generate-data`.
pub fn load_fields(path: &Path) -> Result<Vec<SpectralField>> {
    let ck = Checkpoint::load(path)?;
    decode_fields(ck.require("fields")?)
}

/// Dispatch a full command; returns a one-line outcome description.
pub fn run_command(cfg: &RunConfig) -> Result<String> {
    let out = Path::new(&cfg.out_dir);
    std::fs::create_dir_all(out).map_err(|e| CoreError::Io {
        path: out.display().to_string(),
        source: e,
    })?;
    // emit the effective config for provenance
    std::fs::write(out.join("effective_config.json"), cfg.to_effective_json()).map_err(|e| {
        CoreError::Io {
            path: out.display().to_string(),
            source: e,
        }
    })?;
    let model = match &cfg.checkpoint {
        Some(p) if cfg.command != Command::Train => Some(load_model(Path::new(p), cfg)?),
        _ => None,
    };
    Ok(match cfg.command {
        Command::GenerateData => {
            let n = run_generate_data(cfg, out)?;
            format!("generated {n} fields into {}", out.display())
        }
        Command::RunSolver => {
            run_solver(cfg, model.as_ref(), out)?;
            format!("trajectory and invariant log written to {}", out.display())
        }
        Command::Train => {
            let (trained, outcome) = run_training(cfg)?;
            let ck_path = out.join("model.ckpt");
            save_model(&ck_path, &trained, cfg)?;
            let prov = provenance(cfg);
            write_csv(&out.join("training_log.csv"), &training_log_table(&outcome.log), &prov)?;
            let last = outcome.log.epochs.last();
            write_json_summary(
                &out.join("training_summary.json"),
                serde_json::json!({
                    "final_val_loss": last.map(|e| e.val_loss),
                    "final_defect_ratio": last.map(|e| e.defect_ratio),
                    "final_lipschitz": last.map(|e| e.lipschitz),
                    "aborted": outcome.aborted,
                }),
                &prov,
            )?;
            match outcome.aborted {
                Some(msg) => format!("training aborted early ({msg}); artifacts in {}", out.display()),
                None => format!("model written to {}", ck_path.display()),
            }
        }
        Command::Converge => {
            let order = run_converge(cfg, model.as_ref(), out)?;
            format!("empirical order {order:.3}; study written to {}", out.display())
        }
        Command::Refine => {
            let threshold = run_refine(cfg, model.as_ref(), out)?;
            match threshold {
                Some(n) => format!("divergence threshold N* = {n}; study in {}", out.display()),
                None => format!("no divergence threshold detected; study in {}", out.display()),
            }
        }
        Command::Diagnose => {
            run_diagnose(cfg, out)?;
            format!("diagnostics written to {}", out.display())
        }
        Command::Bench => {
            run_bench(cfg, model.as_ref(), out)?;
            format!("benchmarks written to {}", out.display())
        }
        Command::Retrain => {
            let model = model.ok_or_else(|| {
                CoreError::Config("retrain requires --checkpoint".into())
            })?;
            let report = run_retrain(cfg, &model, 10, out)?;
            format!(
                "zero-shot {:.3e} → retrained {:.3e} (base {:.3e}); artifacts in {}",
                report.zero_shot_error,
                report.retrained_error,
                report.base_error,
                out.display()
            )
        }
    })
}
