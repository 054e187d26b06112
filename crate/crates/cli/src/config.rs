use std::path::{Path, PathBuf};
use std::sync::Arc;

use epiflow_core::diagnostics::CertificateKind;
use epiflow_core::flow::{InitialProfile, ProxSettings, StepSchedule};
use epiflow_core::{GridSpec, ModelParams, Profile};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const OUTPUT_ROOT_VAR: &str = "EPIFLOW_OUTPUT_ROOT";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepperConfig {
    pub tau0: f64,
    pub tau_max: f64,
    pub growth: f64,
    pub n_grow: usize,
    pub adaptive: bool,
    pub t_final: f64,
    pub stop_slope: f64,
    pub max_halvings: usize,
    pub newton_tol: f64,
    pub newton_max_iters: usize,
}

impl Default for StepperConfig {
    fn default() -> Self {
        let s = StepSchedule::default();
        Self {
            tau0: s.tau0,
            tau_max: s.tau_max,
            growth: s.growth,
            n_grow: s.n_grow,
            adaptive: s.adaptive,
            t_final: s.t_final,
            stop_slope: s.stop_slope,
            max_halvings: s.max_halvings,
            newton_tol: s.prox.tol,
            newton_max_iters: s.prox.max_iters,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CheckConfig {
    pub seed: u64,
    pub convexity_triples: usize,
    pub identity_profiles: usize,
    pub evi_profiles: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            seed: 1,
            convexity_triples: 200,
            identity_profiles: 4,
            evi_profiles: 20,
        }
    }
}

/// Overwrites one kernel coefficient. Only meant for negative controls.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelOverride {
    pub k: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    pub a: f64,
    pub initial: InitialProfile,
    #[serde(default)]
    pub stepper: StepperConfig,
    #[serde(default)]
    pub checkpoint_times: Vec<f64>,
    pub output_dir: PathBuf,
    #[serde(default = "default_certificates")]
    pub certificates: Vec<CertificateKind>,
    #[serde(default)]
    pub check: CheckConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel_override: Option<KernelOverride>,
}

fn default_certificates() -> Vec<CertificateKind> {
    use CertificateKind::*;
    vec![Evi, SlopeDecay, ExpDecay, Positivity, DiffQuotient]
}

/// A validated config with everything the commands need.
pub struct Loaded {
    pub config: RunConfig,
    pub hash: String,
    pub grid: Arc<GridSpec>,
    pub params: ModelParams,
    pub u0: Profile,
    pub schedule: StepSchedule,
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn schedule(&self) -> StepSchedule {
        let s = &self.stepper;
        StepSchedule {
            tau0: s.tau0,
            tau_max: s.tau_max,
            growth: s.growth,
            n_grow: s.n_grow,
            adaptive: s.adaptive,
            t_final: s.t_final,
            stop_slope: s.stop_slope,
            max_halvings: s.max_halvings,
            checkpoint_times: self.checkpoint_times.clone(),
            retain_states: self.certificates.contains(&CertificateKind::Evi),
            prox: ProxSettings {
                tol: s.newton_tol,
                max_iters: s.newton_max_iters,
                ..ProxSettings::default()
            },
        }
    }

    /// Hex SHA-256 of the canonical JSON form (defaults filled in).
    pub fn hash(&self) -> String {
        let text = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(text.as_bytes()))
    }
}

fn input(e: impl std::fmt::Display) -> CliError {
    CliError::Input(e.to_string())
}

pub fn load(path: &Path) -> Result<Loaded, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))?;
    let config: RunConfig =
        serde_json::from_str(&text).map_err(|e| input(format!("{}: {e}", path.display())))?;
    validate(config)
}

pub fn validate(config: RunConfig) -> Result<Loaded, CliError> {
    let mut grid = GridSpec::new(config.n).map_err(input)?;
    if let Some(o) = &config.kernel_override {
        grid = grid.with_kernel_override(o.k, o.value).map_err(input)?;
    }
    let params = ModelParams::new(config.a).map_err(input)?;
    let u0 = config.initial.build(&grid, &params).map_err(input)?;
    let schedule = config.schedule();
    schedule.validate().map_err(input)?;
    if config.stepper.newton_max_iters == 0 {
        return Err(input("newton_max_iters must be positive"));
    }
    if config.output_dir.as_os_str().is_empty() {
        return Err(input("output_dir must not be empty"));
    }
    let out_dir = match std::env::var_os(OUTPUT_ROOT_VAR) {
        Some(root) if config.output_dir.is_relative() => PathBuf::from(root).join(&config.output_dir),
        _ => config.output_dir.clone(),
    };
    Ok(Loaded {
        hash: config.hash(),
        config,
        grid,
        params,
        u0,
        schedule,
        out_dir,
    })
}
