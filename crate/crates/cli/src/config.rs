//! TOML experiment configuration, one section per subcommand.

use std::path::Path;

use linopt::bounds::ExperimentConfig as BoundsExperiment;
use linopt::junta::StagePolicy;
use linopt::optimizer::OptimConfig;
use linopt::SchemeTag;
use serde::{Deserialize, Serialize};

use crate::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    /// Base seed; `--seed` overrides it.
    pub seed: u64,
    pub erm: ErmConfig,
    pub junta: JuntaConfig,
    pub bounds: BoundsConfig,
    pub verify: VerifyConfig,
    pub swap_risk: SwapRiskConfig,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Config = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: &str| Err(CliError::Config(msg.to_string()));
        let e = &self.erm;
        if e.modes == 0 || e.sizes.is_empty() || e.energies.is_empty() || e.schemes.is_empty() {
            return bad("erm: modes, sizes, energies and schemes must be non-empty");
        }
        if e.sizes.contains(&0) || e.energies.iter().any(|v| !(*v >= 0.0)) {
            return bad("erm: sizes must be ≥ 1 and energies ≥ 0");
        }
        let j = &self.junta;
        if j.modes < 2 || j.junta_size > j.modes || j.sizes.is_empty() || j.energy_scales.is_empty() {
            return bad("junta: need M ≥ 2, k ≤ M and non-empty sizes and energy_scales");
        }
        if let Some(set) = &j.junta_modes {
            if set.len() != j.junta_size || set.iter().any(|&m| m == 0 || m > j.modes) {
                return bad("junta: junta_modes must list k distinct 1-based modes");
            }
        }
        let b = &self.bounds;
        if b.modes == 0 || b.sizes.is_empty() || b.sets_per_size == 0 || !(b.delta > 0.0 && b.delta < 1.0) {
            return bad("bounds: need M ≥ 1, non-empty sizes, sets_per_size ≥ 1 and δ in (0, 1)");
        }
        if self.swap_risk.shots.is_empty() || self.swap_risk.shots.contains(&0) {
            return bad("swap_risk: shots must be non-empty and positive");
        }
        e.optim.validate().map_err(|err| CliError::Config(format!("erm.optim: {err}")))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ErmConfig {
    pub schemes: Vec<SchemeTag>,
    pub modes: usize,
    pub sizes: Vec<usize>,
    pub energies: Vec<f64>,
    pub seeds: u64,
    pub optim: OptimConfig,
}

impl Default for ErmConfig {
    fn default() -> Self {
        Self {
            schemes: vec![SchemeTag::Erm1],
            modes: 4,
            sizes: (2..=8).collect(),
            energies: vec![1.0, 4.0],
            seeds: 10,
            optim: OptimConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct JuntaConfig {
    pub modes: usize,
    pub junta_size: usize,
    /// Fixed 1-based junta set; drawn at random per seed when absent.
    pub junta_modes: Option<Vec<usize>>,
    /// Training sizes `T`; stage `m` uses `max(T, m)` states.
    pub sizes: Vec<usize>,
    /// Stage energy per ansatz mode, `E_m = scale · m`.
    pub energy_scales: Vec<f64>,
    pub seeds: u64,
    pub policy: StagePolicy,
}

impl Default for JuntaConfig {
    fn default() -> Self {
        Self {
            modes: 8,
            junta_size: 4,
            junta_modes: None,
            sizes: vec![4],
            energy_scales: vec![1.0],
            seeds: 10,
            policy: StagePolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsConfig {
    pub schemes: Vec<SchemeTag>,
    pub modes: usize,
    pub energy: f64,
    pub sizes: Vec<usize>,
    pub delta: f64,
    pub sets_per_size: usize,
    pub experiment: BoundsExperiment,
}

impl Default for BoundsConfig {
    fn default() -> Self {
        Self {
            schemes: vec![SchemeTag::Erm2, SchemeTag::Erm1Prime],
            modes: 2,
            energy: 1.0,
            sizes: vec![2, 4, 8, 16],
            delta: 0.1,
            sets_per_size: 20,
            experiment: BoundsExperiment::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifyConfig {
    pub oracle_instances: usize,
    /// Fock cutoff per mode; the oracle default when absent.
    pub oracle_cutoff: Option<usize>,
    pub gradient_instances: usize,
    pub lipschitz_trials: usize,
    pub lipschitz_mc_samples: usize,
    pub marginal_sets: usize,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            oracle_instances: 100,
            oracle_cutoff: Some(40),
            gradient_instances: 50,
            lipschitz_trials: 1000,
            lipschitz_mc_samples: 4096,
            marginal_sets: 100_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwapRiskConfig {
    pub scheme: SchemeTag,
    pub modes: usize,
    pub size: usize,
    pub energy: f64,
    pub shots: Vec<u64>,
    pub seeds: u64,
}

impl Default for SwapRiskConfig {
    fn default() -> Self {
        Self {
            scheme: SchemeTag::Erm2,
            modes: 4,
            size: 4,
            energy: 4.0,
            shots: vec![100, 1_000, 10_000],
            seeds: 10,
        }
    }
}
