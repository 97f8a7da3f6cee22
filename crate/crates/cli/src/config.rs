//! Experiment configuration: a single TOML file, fully echoed into every
//! output so runs are reproducible from their artifacts alone.

use litm_core::sampler::{InitialSampler, SamplerKind};
use litm_core::sim::DriftMethod;
use litm_core::ModelParams;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Simulate,
    Meanfield,
    Correlations,
    Profile,
    Accuracy,
    Verify,
}

impl Experiment {
    pub fn label(&self) -> &'static str {
        match self {
            Experiment::Simulate => "simulate",
            Experiment::Meanfield => "meanfield",
            Experiment::Correlations => "correlations",
            Experiment::Profile => "profile",
            Experiment::Accuracy => "accuracy",
            Experiment::Verify => "verify",
        }
    }
}

fn default_checkpoints() -> Vec<f64> {
    Vec::new()
}

fn default_s_grid() -> usize {
    512
}

fn default_n_max() -> usize {
    32
}

fn default_profile_points() -> usize {
    512
}

fn default_phi_harmonic() -> i64 {
    1
}

/// The experiment file. Physical parameters (β, λ, N, M, t_final), the
/// sampler, the seed, step sizes, and the output directory carry no
/// defaults: leaving them out is an error. Numerical resolutions default
/// as documented and are echoed, resolved, into all outputs.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub params: ModelParams,
    pub sampler: SamplerKind,
    pub seed: u64,
    pub replicates: usize,
    pub dt_particle: f64,
    pub dt_field: f64,
    pub output_dir: String,
    /// Observation times; empty means {0, t_final}, resolved at load.
    #[serde(default = "default_checkpoints")]
    pub checkpoints: Vec<f64>,
    #[serde(default)]
    pub sigma_list: Vec<f64>,
    #[serde(default)]
    pub sigma0_list: Vec<f64>,
    #[serde(default)]
    pub n_list: Vec<i64>,
    /// σ-cells of the spectral solver grid.
    #[serde(default = "default_s_grid")]
    pub s_grid: usize,
    /// frequency cutoff of the spectral solver
    #[serde(default = "default_n_max")]
    pub n_max: usize,
    /// σ₀-grid size for retrieval profiles
    #[serde(default = "default_profile_points")]
    pub profile_points: usize,
    /// frequency of the harmonic test function e^{inθ} used by the
    /// correlation estimators
    #[serde(default = "default_phi_harmonic")]
    pub phi_harmonic: i64,
    #[serde(default)]
    pub drift_method: DriftMethod,
}

#[derive(Debug)]
pub enum ConfigError {
    Parse(String),
    Invalid(String),
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Parse(m) => write!(f, "config parse error: {m}"),
            ConfigError::Invalid(m) => write!(f, "config error: {m}"),
        }
    }
}

impl std::error::Error for ConfigError {}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let mut cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.resolve();
        cfg.validate()?;
        Ok(cfg)
    }

    /// Fill documented defaults so the echoed config is complete.
    fn resolve(&mut self) {
        if self.checkpoints.is_empty() {
            self.checkpoints = if self.params.t_final > 0.0 {
                vec![0.0, self.params.t_final]
            } else {
                vec![0.0]
            };
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let inv = |m: String| Err(ConfigError::Invalid(m));
        if let Err(e) = self.params.validate() {
            return inv(e.to_string());
        }
        let sampler = self.initial_sampler();
        if let Err(e) = sampler.validate(&self.params) {
            return inv(e.to_string());
        }
        if self.replicates < 1 {
            return inv("replicates must be >= 1".into());
        }
        if !(self.dt_particle > 0.0) || !(self.dt_field > 0.0) {
            return inv(format!(
                "step sizes must be > 0, got dt_particle = {}, dt_field = {}",
                self.dt_particle, self.dt_field
            ));
        }
        if self.checkpoints.windows(2).any(|w| w[1] < w[0]) {
            return inv("checkpoints must be sorted".into());
        }
        if self
            .checkpoints
            .iter()
            .any(|&t| t < 0.0 || t > self.params.t_final + 1e-12)
        {
            return inv(format!(
                "checkpoints must lie in [0, {}]",
                self.params.t_final
            ));
        }
        if self.sigma_list.iter().any(|&s| !(s > 0.0 && s <= 1.0)) {
            return inv(format!("sigma_list entries must be in (0,1]: {:?}", self.sigma_list));
        }
        if self.sigma0_list.iter().any(|&s| !(s > 0.0 && s < 1.0)) {
            return inv(format!(
                "sigma0_list entries must be in (0,1): {:?}",
                self.sigma0_list
            ));
        }
        if self.s_grid < 2 || self.n_max < 1 || self.profile_points < 2 {
            return inv("resolutions must be positive".into());
        }
        Ok(())
    }

    pub fn initial_sampler(&self) -> InitialSampler {
        InitialSampler {
            kind: self.sampler.clone(),
            seed: self.seed,
        }
    }

    /// The resolved config as canonical TOML; outputs embed this text and
    /// its hash.
    pub fn canonical_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }
}
