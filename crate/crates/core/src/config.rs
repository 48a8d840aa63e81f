//! Declarative run configuration: a human-readable JSON key-value tree
//! with strict unknown-key rejection, defaulting, validation, and a
//! deterministic "effective config" emission for provenance.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::equations::EquationKind;
use crate::error::{CoreError, Result};
use crate::integrators::IntegratorKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    GenerateData,
    RunSolver,
    Train,
    Converge,
    Refine,
    Diagnose,
    Bench,
    Retrain,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::GenerateData => "generate-data",
            Command::RunSolver => "run-solver",
            Command::Train => "train",
            Command::Converge => "converge",
            Command::Refine => "refine",
            Command::Diagnose => "diagnose",
            Command::Bench => "bench",
            Command::Retrain => "retrain",
        }
    }
}

fn default_lambda() -> f64 {
    1.0
}
fn default_gamma() -> f64 {
    0.5
}
fn default_grids() -> Vec<usize> {
    vec![256]
}
fn default_taus() -> Vec<f64> {
    (4..=9).map(|p| (2f64).powi(-p)).collect()
}
fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3]
}
fn default_t_final() -> f64 {
    1.0
}
fn default_out() -> String {
    "out".to_string()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HinLriSettings {
    #[serde(default = "default_m")]
    pub picard_m: usize,
    #[serde(default = "default_kappa")]
    pub trigger_kappa: usize,
    #[serde(default = "default_latent")]
    pub latent_dim: usize,
    #[serde(default = "default_wmax")]
    pub w_max: f64,
    /// Hidden (GELU) layers in the latent encoder; the default keeps the
    /// effective spectral-norm product at four factors.
    #[serde(default = "default_enc_hidden")]
    pub enc_hidden: usize,
    #[serde(default = "default_dec_hidden")]
    pub dec_hidden: usize,
}

fn default_enc_hidden() -> usize {
    1
}
fn default_dec_hidden() -> usize {
    0
}

fn default_m() -> usize {
    1
}
fn default_kappa() -> usize {
    1
}
fn default_latent() -> usize {
    16
}
fn default_wmax() -> f64 {
    2.1
}

impl Default for HinLriSettings {
    fn default() -> Self {
        Self {
            picard_m: default_m(),
            trigger_kappa: default_kappa(),
            latent_dim: default_latent(),
            w_max: default_wmax(),
            enc_hidden: default_enc_hidden(),
            dec_hidden: default_dec_hidden(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingSettings {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_wd")]
    pub weight_decay: f64,
    #[serde(default = "default_unroll")]
    pub unroll_steps: usize,
    #[serde(default = "default_train_samples")]
    pub train_samples: usize,
    #[serde(default = "default_val_samples")]
    pub val_samples: usize,
    /// Bourgain spatial index; per-equation default applied when absent.
    #[serde(default)]
    pub sobolev_s: Option<f64>,
    #[serde(default = "default_true")]
    pub normalize_data: bool,
}

fn default_epochs() -> usize {
    30
}
fn default_batch() -> usize {
    8
}
fn default_lr() -> f64 {
    1e-3
}
fn default_wd() -> f64 {
    1e-4
}
fn default_unroll() -> usize {
    16
}
fn default_train_samples() -> usize {
    64
}
fn default_val_samples() -> usize {
    16
}
fn default_true() -> bool {
    true
}

impl Default for TrainingSettings {
    fn default() -> Self {
        Self {
            epochs: default_epochs(),
            batch: default_batch(),
            lr: default_lr(),
            weight_decay: default_wd(),
            unroll_steps: default_unroll(),
            train_samples: default_train_samples(),
            val_samples: default_val_samples(),
            sobolev_s: None,
            normalize_data: default_true(),
        }
    }
}

/// Full declarative run description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub equation: String,
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_grids")]
    pub grid_sizes: Vec<usize>,
    #[serde(default = "default_taus")]
    pub tau_values: Vec<f64>,
    /// Integrator name; per-equation default applied when absent.
    #[serde(default)]
    pub integrator: Option<String>,
    #[serde(default)]
    pub hinlri: HinLriSettings,
    #[serde(default)]
    pub training: TrainingSettings,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_t_final")]
    pub t_final: f64,
    /// Dealiasing fraction override; per-equation default when absent.
    #[serde(default)]
    pub dealias_fraction: Option<f64>,
    #[serde(default = "default_out")]
    pub out_dir: String,
    #[serde(default)]
    pub checkpoint: Option<String>,
}

impl RunConfig {
    pub fn minimal(command: Command, equation: &str) -> Self {
        serde_json::from_value(serde_json::json!({
            "command": command.name(),
            "equation": equation,
        }))
        .expect("minimal config is valid")
    }

    pub fn equation_kind(&self) -> Result<EquationKind> {
        EquationKind::parse(&self.equation)
    }

    pub fn equation_spec(&self) -> Result<crate::equations::EquationSpec> {
        let eq = crate::equations::EquationSpec::from_kind(self.equation_kind()?, self.lambda);
        match self.dealias_fraction {
            Some(f) => eq.with_dealias_fraction(f),
            None => Ok(eq),
        }
    }

    pub fn integrator_kind(&self) -> Result<IntegratorKind> {
        match &self.integrator {
            Some(name) => IntegratorKind::parse(name),
            None => Ok(match self.equation_kind()? {
                EquationKind::Kdv => IntegratorKind::Res1Kdv,
                EquationKind::CubicNls => IntegratorKind::Res1Nls,
                EquationKind::QuadraticNls => IntegratorKind::Etd1,
            }),
        }
    }

    pub fn sobolev_s(&self) -> Result<f64> {
        Ok(match self.training.sobolev_s {
            Some(s) => s,
            None => match self.equation_kind()? {
                EquationKind::Kdv => -0.5,
                _ => 0.0,
            },
        })
    }

    /// Constraint validation beyond shape: every referenced path must
    /// exist, seeds nonempty, grids/τ sane.
    pub fn validate(&self) -> Result<()> {
        self.equation_spec()?;
        self.integrator_kind()?;
        if self.seeds.is_empty() {
            return Err(CoreError::Config("seed list must be nonempty".into()));
        }
        if self.grid_sizes.is_empty() || self.tau_values.is_empty() {
            return Err(CoreError::Config("grid_sizes and tau_values must be nonempty".into()));
        }
        for &n in &self.grid_sizes {
            crate::spectral::Grid1D::new(n)?;
        }
        if self.tau_values.iter().any(|&t| t <= 0.0) {
            return Err(CoreError::Config("tau values must be positive".into()));
        }
        if self.hinlri.trigger_kappa > self.hinlri.picard_m {
            return Err(CoreError::Config(
                "hinlri.trigger_kappa must not exceed hinlri.picard_m".into(),
            ));
        }
        if let Some(path) = &self.checkpoint {
            let needs_existing = matches!(
                self.command,
                Command::RunSolver | Command::Retrain | Command::Refine | Command::Converge
            );
            if needs_existing && !Path::new(path).exists() {
                return Err(CoreError::Config(format!(
                    "checkpoint path `{path}` does not exist"
                )));
            }
        }
        Ok(())
    }

    /// Parse from JSON text with strict unknown-key rejection.
    pub fn parse_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text)
            .map_err(|e| CoreError::Config(format!("config parse error: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn parse_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CoreError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::parse_str(&text)
    }

    /// Deterministic effective-config emission (fixed field order).
    pub fn to_effective_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("config serializes");
        s.push('\n');
        s
    }

    /// Provenance hash of the effective configuration.
    pub fn config_hash(&self) -> String {
        format!("{:016x}", crate::checkpoint::crc64(self.to_effective_json().as_bytes()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_fills_desk_defaults() {
        let cfg = RunConfig::parse_str(
            r#"{ "command": "converge", "equation": "kdv", "gamma": 0.5 }"#,
        )
        .unwrap();
        assert_eq!(cfg.grid_sizes, vec![256]);
        assert_eq!(cfg.tau_values.len(), 6);
        assert!((cfg.tau_values[0] - 2f64.powi(-4)).abs() < 1e-18);
        assert!((cfg.tau_values[5] - 2f64.powi(-9)).abs() < 1e-18);
        assert_eq!(cfg.integrator_kind().unwrap(), IntegratorKind::Res1Kdv);
        assert_eq!(cfg.sobolev_s().unwrap(), -0.5);
    }

    #[test]
    fn unknown_key_named_in_error() {
        let err = RunConfig::parse_str(
            r#"{ "command": "converge", "equation": "kdv", "gama": 0.5 }"#,
        )
        .unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("gama"), "error should name the key: {msg}");
    }

    #[test]
    fn effective_config_round_trip_identical() {
        let cfg = RunConfig::parse_str(
            r#"{ "command": "train", "equation": "cnls", "lambda": -1.0,
                "grid_sizes": [64, 128], "seeds": [7],
                "training": { "epochs": 3, "lr": 0.0005 } }"#,
        )
        .unwrap();
        let emitted = cfg.to_effective_json();
        let re = RunConfig::parse_str(&emitted).unwrap();
        assert_eq!(cfg, re);
        assert_eq!(emitted, re.to_effective_json());
        assert_eq!(cfg.config_hash(), re.config_hash());
    }

    #[test]
    fn constraint_violations_rejected() {
        assert!(RunConfig::parse_str(r#"{ "command": "converge", "equation": "kvd" }"#).is_err());
        assert!(RunConfig::parse_str(
            r#"{ "command": "converge", "equation": "kdv", "seeds": [] }"#
        )
        .is_err());
        assert!(RunConfig::parse_str(
            r#"{ "command": "converge", "equation": "kdv", "grid_sizes": [13] }"#
        )
        .is_err());
        assert!(RunConfig::parse_str(
            r#"{ "command": "run-solver", "equation": "kdv", "checkpoint": "/nonexistent/x.ckpt" }"#
        )
        .is_err());
        assert!(RunConfig::parse_str(
            r#"{ "command": "train", "equation": "kdv", "hinlri": { "picard_m": 1, "trigger_kappa": 2 } }"#
        )
        .is_err());
    }
}
