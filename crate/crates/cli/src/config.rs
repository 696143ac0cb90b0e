use std::path::Path;

use periodauth::auth::AuthConfig;
use periodauth::energy::PolicyConfig;
use periodauth::eval::CvConfig;
use periodauth::forecast::FitConfig;
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Rolling-origin split sizes and per-fold preprocessing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CrossvalSettings {
    pub train_len: usize,
    pub block: usize,
    pub n_blocks: usize,
    pub normalize: bool,
}

impl Default for CrossvalSettings {
    fn default() -> Self {
        CrossvalSettings {
            train_len: 500,
            block: 100,
            n_blocks: 5,
            normalize: true,
        }
    }
}

/// Authentication settings other than the shared level, seed, simulation
/// count and tolerable-error threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuthSettings {
    pub escalation_floor: f64,
    pub window_len: usize,
    pub window_stride: usize,
    pub min_cycles: usize,
    pub cycle_tolerance: f64,
    pub buffer_cap: usize,
}

impl Default for AuthSettings {
    fn default() -> Self {
        let d = AuthConfig::default();
        AuthSettings {
            escalation_floor: d.escalation_floor,
            window_len: d.window_len,
            window_stride: d.window_stride,
            min_cycles: d.min_cycles,
            cycle_tolerance: d.cycle_tolerance,
            buffer_cap: d.buffer_cap,
        }
    }
}

/// Every tunable of a run. Defaults, then the `--config` file, then flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub level: f64,
    pub n_sims: usize,
    pub te_threshold: f64,
    /// Forecast steps for `predict`.
    pub horizon: usize,
    pub sample_rate_hz: f64,
    /// Shortest period considered when estimating seasonality, in samples.
    pub min_period: f64,
    pub max_order: usize,
    pub fit: FitConfig,
    pub crossval: CrossvalSettings,
    pub auth: AuthSettings,
    pub policy: PolicyConfig,
    /// Sensor whose currents price the schedules.
    pub sensor: String,
    /// Optional JSON table of sensor profiles replacing the built-in one.
    pub power_profiles: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            level: 0.8,
            n_sims: 1000,
            te_threshold: 0.7,
            horizon: 300,
            sample_rate_hz: 50.0,
            min_period: 4.0,
            max_order: 10,
            fit: FitConfig::default(),
            crossval: CrossvalSettings::default(),
            auth: AuthSettings::default(),
            policy: PolicyConfig::default(),
            sensor: "BMA220".into(),
            power_profiles: None,
        }
    }
}

/// Values given on the command line; `None` leaves the file or default.
#[derive(Debug, Default, Clone)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub level: Option<f64>,
    pub te_threshold: Option<f64>,
    pub horizon: Option<usize>,
}

impl RunConfig {
    pub fn resolve(file: Option<&Path>, o: &Overrides) -> Result<RunConfig, CliError> {
        let mut cfg = match file {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?;
                serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))?
            }
            None => RunConfig::default(),
        };
        if let Some(v) = o.seed {
            cfg.seed = v;
        }
        if let Some(v) = o.level {
            cfg.level = v;
        }
        if let Some(v) = o.te_threshold {
            cfg.te_threshold = v;
        }
        if let Some(v) = o.horizon {
            cfg.horizon = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(self.sample_rate_hz > 0.0 && self.sample_rate_hz.is_finite()) {
            return Err(CliError::Input(format!("sample_rate_hz must be positive, got {}", self.sample_rate_hz)));
        }
        if self.horizon == 0 {
            return Err(CliError::Input("horizon must be at least 1".into()));
        }
        self.auth_config().validate()?;
        self.policy.validate()?;
        Ok(())
    }

    pub fn auth_config(&self) -> AuthConfig {
        let a = &self.auth;
        AuthConfig {
            te_threshold: self.te_threshold,
            escalation_floor: a.escalation_floor,
            level: self.level,
            n_sims: self.n_sims,
            seed: self.seed,
            window_len: a.window_len,
            window_stride: a.window_stride,
            min_cycles: a.min_cycles,
            cycle_tolerance: a.cycle_tolerance,
            buffer_cap: a.buffer_cap,
            min_period: self.min_period,
            max_order: self.max_order,
            fit: self.fit.clone(),
        }
    }

    pub fn cv_config(&self) -> CvConfig {
        CvConfig {
            fit: self.fit.clone(),
            level: self.level,
            n_sims: self.n_sims,
            seed: self.seed,
            normalize: self.crossval.normalize,
            min_period: self.min_period,
            max_order: self.max_order,
        }
    }
}
