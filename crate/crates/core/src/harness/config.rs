//! Experiment configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::critic::{CriticConfig, CriticKind};
use crate::env::{Difficulty, EnvKind};
use crate::llm::LlmConfig;
use crate::optimizer::{OptimConfig, TrainConfig};
use crate::policy::PolicyParams;
use crate::rollout::RolloutConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvSection {
    pub kind: EnvKind,
    pub noise: f64,
    pub hops: (usize, usize),
    pub plan_length: (usize, usize),
    pub max_steps: Option<usize>,
    pub tasks: usize,
    pub held_out_tasks: usize,
}

impl Default for EnvSection {
    fn default() -> Self {
        Self {
            kind: EnvKind::Search,
            noise: 0.5,
            hops: (2, 4),
            plan_length: (12, 12),
            max_steps: None,
            tasks: 500,
            held_out_tasks: 100,
        }
    }
}

impl EnvSection {
    pub fn difficulty(&self) -> Difficulty {
        Difficulty {
            hops: self.hops,
            plan_length: self.plan_length,
            noise_level: self.noise,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolicySection {
    /// Parameters; the environment's default prior when absent.
    pub theta: Option<Vec<f64>>,
    pub temperature: f64,
    /// Checkpoint to load instead of `theta`.
    pub checkpoint: Option<PathBuf>,
    /// Temperature increase that turns the strong policy into the weak one.
    pub weak_delta_t: f64,
}

impl Default for PolicySection {
    fn default() -> Self {
        Self {
            theta: None,
            temperature: 0.7,
            checkpoint: None,
            weak_delta_t: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CriticSection {
    pub kind: CriticKind,
    /// Rewind threshold; negative disables rewinding.
    pub threshold: i32,
    pub reversible: bool,
    pub refiner_fidelity: f64,
    pub max_refinements_per_step: u32,
}

impl Default for CriticSection {
    fn default() -> Self {
        let c = CriticConfig::default();
        Self {
            kind: c.kind,
            threshold: 3,
            reversible: c.reversible_env,
            refiner_fidelity: c.refiner_fidelity,
            max_refinements_per_step: c.max_refinements_per_step,
        }
    }
}

impl CriticSection {
    pub fn to_config(&self) -> Result<CriticConfig, HarnessError> {
        let threshold = match self.threshold {
            t if t < 0 => None,
            t if t <= 10 => Some(t as u8),
            t => return Err(HarnessError::Config(format!("threshold {t} above 10"))),
        };
        let c = CriticConfig {
            threshold,
            kind: self.kind,
            reversible_env: self.reversible,
            max_refinements_per_step: self.max_refinements_per_step,
            refiner_fidelity: self.refiner_fidelity,
        };
        c.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RolloutSection {
    pub group_size: usize,
    pub proceed_fraction: f64,
    pub literal_double_step: bool,
}

impl Default for RolloutSection {
    fn default() -> Self {
        let r = RolloutConfig::default();
        Self {
            group_size: r.group_size,
            proceed_fraction: r.proceed_fraction,
            literal_double_step: r.literal_double_step,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dapo,
    ProceedRl,
    Rft,
    Sft,
    ProceedSft,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Dapo => "dapo",
            Method::ProceedRl => "proceedrl",
            Method::Rft => "rft",
            Method::Sft => "sft",
            Method::ProceedSft => "proceedsft",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [Method::Dapo, Method::ProceedRl, Method::Rft, Method::Sft, Method::ProceedSft]
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| format!("unknown method {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub iterations: usize,
    pub batch_size: usize,
    pub seeds: Vec<u64>,
    pub methods: Vec<Method>,
    /// Sampled episodes per held-out task when scoring a trained policy.
    pub eval_episodes: usize,
    /// Write a checkpoint every this many iterations (0 = only the final one).
    pub checkpoint_every: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self {
            iterations: 200,
            batch_size: 32,
            seeds: vec![0, 1, 2],
            methods: vec![Method::Dapo, Method::ProceedRl],
            eval_episodes: 4,
            checkpoint_every: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PasskSection {
    pub vanilla_k: usize,
    pub proceed_k: usize,
}

impl Default for PasskSection {
    fn default() -> Self {
        Self {
            vanilla_k: 32,
            proceed_k: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub nu_low: f64,
    pub nu_high: f64,
    pub episodes: usize,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            nu_low: 0.2,
            nu_high: 0.6,
            episodes: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThresholdSection {
    pub thresholds: Vec<u8>,
    /// Also run with rewinding disabled.
    pub include_none: bool,
    /// Critic-guided samples per task at each threshold.
    pub samples_per_task: usize,
}

impl Default for ThresholdSection {
    fn default() -> Self {
        Self {
            thresholds: (0..=10).collect(),
            include_none: true,
            samples_per_task: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RefineSection {
    /// Harvest steps whose score is below this value.
    pub harvest_below: u8,
    /// Most steps harvested per original score.
    pub per_score_cap: usize,
    /// Vanilla episodes per task used for harvesting.
    pub episodes_per_task: usize,
}

impl Default for RefineSection {
    fn default() -> Self {
        Self {
            harvest_below: 5,
            per_score_cap: 2000,
            episodes_per_task: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    pub env: EnvSection,
    pub policy: PolicySection,
    pub critic: CriticSection,
    pub rollout: RolloutSection,
    pub optim: OptimConfig,
    pub train: TrainSection,
    pub passk: PasskSection,
    pub noise: NoiseSection,
    pub threshold: ThresholdSection,
    pub refine: RefineSection,
    pub llm: Option<LlmConfig>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from("out"),
            workers: 0,
            env: EnvSection::default(),
            policy: PolicySection::default(),
            critic: CriticSection::default(),
            rollout: RolloutSection::default(),
            optim: OptimConfig::default(),
            train: TrainSection::default(),
            passk: PasskSection::default(),
            noise: NoiseSection::default(),
            threshold: ThresholdSection::default(),
            refine: RefineSection::default(),
            llm: None,
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let c: Self = toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if let Some(p) = &self.policy.checkpoint {
            if !p.exists() {
                return bad(format!("checkpoint {} does not exist", p.display()));
            }
        }
        if self.env.tasks == 0 {
            return bad("env.tasks must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.env.noise) {
            return bad(format!("env.noise {} outside [0, 1]", self.env.noise));
        }
        self.critic.to_config()?;
        self.rollout_config()
            .validate()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
        self.optim.validate().map_err(|e| HarnessError::Config(e.to_string()))?;
        if self.passk.vanilla_k == 0 || self.passk.proceed_k == 0 {
            return bad("pass@k sizes must be positive".into());
        }
        if self.threshold.thresholds.iter().any(|&t| t > 10) {
            return bad("thresholds must lie in 0..=10".into());
        }
        Ok(())
    }

    /// First 8 bytes of the SHA-256 of the canonical serialization, in hex.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(&Sha256::digest(canonical.as_bytes())[..8])
    }

    pub fn rollout_config(&self) -> RolloutConfig {
        RolloutConfig {
            group_size: self.rollout.group_size,
            proceed_fraction: self.rollout.proceed_fraction,
            max_steps: self.env.max_steps,
            critic: self.critic.to_config().unwrap_or_default(),
            literal_double_step: self.rollout.literal_double_step,
        }
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            iterations: self.train.iterations,
            batch_size: self.train.batch_size,
            optim: self.optim.clone(),
            rollout: self.rollout_config(),
            seed,
        }
    }

    /// The configured policy: checkpoint, explicit θ, or the environment prior.
    pub fn policy_params(&self) -> Result<PolicyParams, HarnessError> {
        if let Some(p) = &self.policy.checkpoint {
            return PolicyParams::load(p).map_err(|e| HarnessError::Config(e.to_string()));
        }
        let theta = self
            .policy
            .theta
            .clone()
            .unwrap_or_else(|| default_theta(self.env.kind));
        PolicyParams::new(theta, self.policy.temperature, feature_map_id(self.env.kind))
            .map_err(|e| HarnessError::Config(e.to_string()))
    }
}

pub fn feature_map_id(kind: EnvKind) -> &'static str {
    match kind {
        EnvKind::Search => "search-v1",
        EnvKind::Corridor => "corridor-v1",
    }
}

/// Initial parameters when none are configured. The search prior stands in
/// for a pretrained model; the corridor policy starts uniform so training
/// has something to learn.
pub fn default_theta(kind: EnvKind) -> Vec<f64> {
    match kind {
        // targets hop, follows last observed, is answer, answer matches, answer × budget, repeats
        EnvKind::Search => vec![3.0, 0.0, -2.0, 5.0, 2.0, 0.0],
        // progress, interaction, backtrack, unvisited, dead end, look
        EnvKind::Corridor => vec![0.0; 6],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_hash() {
        let c = ExperimentConfig::default();
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
        assert_eq!(back.hash(), c.hash());
        let other = ExperimentConfig { seed: 1, ..c.clone() };
        assert_ne!(other.hash(), c.hash());
        assert_eq!(c.hash().len(), 16);
    }

    #[test]
    fn partial_file_uses_defaults() {
        let c = ExperimentConfig::from_toml("seed = 7\n[env]\nkind = \"corridor\"\n").unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.env.kind, EnvKind::Corridor);
        assert_eq!(c.rollout.group_size, 8);
    }

    #[test]
    fn invalid_files_rejected() {
        assert!(ExperimentConfig::from_toml("[critic]\nthreshold = 11\n").is_err());
        assert!(ExperimentConfig::from_toml("bogus = 1\n").is_err());
        assert!(ExperimentConfig::from_toml("[policy]\ncheckpoint = \"/no/such/file\"\n").is_err());
    }
}
