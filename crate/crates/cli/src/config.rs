//! TOML configuration with one flat table per command plus `[global]`.
//! Command-line flags override anything read here.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use uqcal::surveillance::JointModelConfig;
use uqcal::LossFunction;

use crate::error::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudyConfig {
    pub global: Global,
    pub prevalence: Prevalence,
    pub renewal: Renewal,
    pub surveillance: Surveillance,
    pub voi: Voi,
}

impl StudyConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::usage(format!("config {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Global {
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: PathBuf,
}

impl Default for Global {
    fn default() -> Self {
        Self {
            seed: 20_240_101,
            threads: None,
            out: PathBuf::from("out"),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Prevalence {
    pub alpha0: f64,
    pub beta0: f64,
    pub tested: u64,
    pub positives: u64,
    pub m_grid: Vec<u64>,
    pub replicates: usize,
    /// When set, the finite-population posterior is written as well.
    pub population: Option<u64>,
}

impl Default for Prevalence {
    fn default() -> Self {
        Self {
            alpha0: 1.0,
            beta0: 1.0,
            tested: 10,
            positives: 3,
            m_grid: vec![0, 1, 2, 4, 8, 12, 20, 40, 80, 160],
            replicates: 10_000,
            population: None,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Renewal {
    pub cases: PathBuf,
    pub serial_interval: PathBuf,
    pub prior_shape: f64,
    pub prior_rate: f64,
    pub window: usize,
    pub rho: f64,
    pub particles: usize,
    pub replicates: usize,
    pub level: f64,
}

impl Default for Renewal {
    fn default() -> Self {
        Self {
            cases: PathBuf::from("data/renewal_cases.csv"),
            serial_interval: PathBuf::from("data/serial_interval.csv"),
            prior_shape: 1.0,
            prior_rate: 0.2,
            window: 7,
            rho: 0.5,
            particles: 2_000,
            replicates: 1_000,
            level: 0.95,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Surveillance {
    pub simulate: bool,
    pub coverage_full: bool,
    pub cases: Option<PathBuf>,
    pub wastewater: Option<PathBuf>,
    pub start_date: String,
    pub days: usize,
    pub sampled_days: usize,
    pub population: u64,
    pub coverage_min: u64,
    pub coverage_max: u64,
    pub particles: usize,
    pub smoothing_lag: usize,
    pub replicates: usize,
    pub prior_shape: f64,
    pub prior_rate: f64,
    pub window: usize,
    pub serial_interval: Vec<f64>,
    pub rw_sd: f64,
    pub rho: f64,
    pub dispersion: f64,
    pub shedding_kernel: Vec<f64>,
    pub shedding_scale: f64,
    pub noise_base: f64,
    pub initial_infections: u64,
    pub initial_reproduction: f64,
}

impl Default for Surveillance {
    fn default() -> Self {
        let m = JointModelConfig::default();
        Self {
            simulate: false,
            coverage_full: false,
            cases: None,
            wastewater: None,
            start_date: "2022-01-01".into(),
            days: 60,
            sampled_days: 41,
            population: 5_150_000,
            coverage_min: 31_000,
            coverage_max: 3_600_000,
            particles: 10_000,
            smoothing_lag: 7,
            replicates: 100,
            prior_shape: m.prior.shape,
            prior_rate: m.prior.rate,
            window: m.prior.window,
            serial_interval: m.serial_interval,
            rw_sd: m.rw_sd,
            rho: m.rho,
            dispersion: m.dispersion,
            shedding_kernel: m.shedding_kernel,
            shedding_scale: m.shedding_scale,
            noise_base: m.noise_base,
            initial_infections: m.initial_infections,
            initial_reproduction: m.initial_reproduction,
        }
    }
}

impl Surveillance {
    pub fn model(&self) -> Result<JointModelConfig, CliError> {
        let prior = uqcal::renewal::RenewalPrior::new(self.prior_shape, self.prior_rate, self.window)
            .map_err(|e| CliError::usage(format!("surveillance prior: {e}")))?;
        let m = JointModelConfig {
            prior,
            serial_interval: self.serial_interval.clone(),
            rw_sd: self.rw_sd,
            rho: self.rho,
            dispersion: self.dispersion,
            shedding_kernel: self.shedding_kernel.clone(),
            shedding_scale: self.shedding_scale,
            noise_base: self.noise_base,
            initial_infections: self.initial_infections,
            initial_reproduction: self.initial_reproduction,
        };
        m.validate()
            .map_err(|e| CliError::usage(format!("surveillance: {e}")))?;
        Ok(m)
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Voi {
    pub alpha0: f64,
    pub beta0: f64,
    pub tested: u64,
    pub positives: u64,
    pub m: u64,
    pub losses: Vec<String>,
    pub replicates: usize,
    /// Optional case series for the Fisher-information table.
    pub cases: Option<PathBuf>,
    pub serial_interval: Option<PathBuf>,
    pub window: usize,
}

impl Default for Voi {
    fn default() -> Self {
        Self {
            alpha0: 1.0,
            beta0: 1.0,
            tested: 10,
            positives: 3,
            m: 12,
            losses: ["quadratic", "log", "pinball:0.5", "pinball:0.9", "asymmetric:1:4"]
                .map(String::from)
                .to_vec(),
            replicates: 10_000,
            cases: None,
            serial_interval: None,
            window: 7,
        }
    }
}

/// `quadratic`, `log`, `pinball:LEVEL` or `asymmetric:UNDER:OVER`.
pub fn parse_loss(spec: &str) -> Result<LossFunction, CliError> {
    let bad = || CliError::usage(format!("unknown loss `{spec}`"));
    let parts: Vec<&str> = spec.split(':').collect();
    let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
    let loss = match parts.as_slice() {
        ["quadratic"] => Ok(LossFunction::Quadratic),
        ["log"] => Ok(LossFunction::Log),
        ["pinball", q] => LossFunction::pinball(num(q)?),
        ["asymmetric", u, o] => LossFunction::asymmetric_linear(num(u)?, num(o)?),
        _ => return Err(bad()),
    };
    loss.map_err(|e| CliError::usage(format!("loss `{spec}`: {e}")))
}

pub fn loss_label(loss: &LossFunction) -> String {
    match loss {
        LossFunction::Quadratic => "quadratic".into(),
        LossFunction::Log => "log".into(),
        LossFunction::Pinball { level } => format!("pinball:{level}"),
        LossFunction::AsymmetricLinear { under_cost, over_cost } => format!("asymmetric:{under_cost}:{over_cost}"),
    }
}
