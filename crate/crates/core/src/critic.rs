//! Process critic and refiner contracts, with exact oracle implementations.
//!
//! A critic scores one proposed action on a 0–10 scale; when the score is at
//! or below the rewind threshold the refiner proposes a replacement.

use std::collections::BTreeMap;
use std::str::FromStr;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::{EnvError, EnvView, Environment};
use crate::policy::sample_index;
use crate::trajectory::Trajectory;

#[derive(Debug, Error)]
pub enum CriticError {
    #[error("critic contract violated: {0}")]
    ContractViolation(String),
    #[error("no alternative action to refine to")]
    NoAlternativeAction,
    #[error("refiner produced no usable action")]
    UnusableRefinement,
    #[error("backend failure: {0}")]
    Backend(String),
    #[error("invalid critic config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Env(#[from] EnvError),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CritiqueRecord {
    pub score: u8,
    pub critique: String,
    pub suggestion_action: Option<String>,
    pub suggestion_reasoning: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CriticKind {
    Oracle,
    #[serde(rename = "self")]
    SelfCritic,
    Homogeneous,
    External,
}

impl FromStr for CriticKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(CriticKind::Oracle),
            "self" => Ok(CriticKind::SelfCritic),
            "homogeneous" => Ok(CriticKind::Homogeneous),
            "external" => Ok(CriticKind::External),
            other => Err(format!("unknown critic kind {other:?}")),
        }
    }
}

impl std::fmt::Display for CriticKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CriticKind::Oracle => "oracle",
            CriticKind::SelfCritic => "self",
            CriticKind::Homogeneous => "homogeneous",
            CriticKind::External => "external",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CriticConfig {
    /// Rewind threshold `l_th`; `None` disables rewinding entirely.
    pub threshold: Option<u8>,
    pub kind: CriticKind,
    pub reversible_env: bool,
    pub max_refinements_per_step: u32,
    /// Probability that the oracle refiner returns the best action.
    pub refiner_fidelity: f64,
}

impl Default for CriticConfig {
    fn default() -> Self {
        Self {
            threshold: Some(3),
            kind: CriticKind::Oracle,
            reversible_env: true,
            max_refinements_per_step: 1,
            refiner_fidelity: 0.8,
        }
    }
}

impl CriticConfig {
    pub fn validate(&self) -> Result<(), CriticError> {
        if let Some(t) = self.threshold {
            if t > 10 {
                return Err(CriticError::InvalidConfig(format!("threshold {t} outside 0..=10")));
            }
        }
        if !(0.0..=1.0).contains(&self.refiner_fidelity) {
            return Err(CriticError::InvalidConfig(format!(
                "refiner fidelity {} outside [0, 1]",
                self.refiner_fidelity
            )));
        }
        Ok(())
    }
}

/// Inputs to one critic call. `env_before` is the state in which `action`
/// was proposed.
pub struct CritiqueRequest<'a> {
    pub env_before: &'a dyn EnvView,
    pub trajectory: &'a Trajectory,
    pub action: &'a str,
    pub next_observation: Option<&'a str>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Critique {
    pub record: CritiqueRecord,
    /// Generation cost of producing the critique.
    pub units: u64,
}

pub trait Critic: Send + Sync {
    fn critique(&self, req: &CritiqueRequest<'_>) -> Result<Critique, CriticError>;
}

/// Checks the observation contract, then calls the critic.
pub fn evaluate(critic: &dyn Critic, config: &CriticConfig, req: &CritiqueRequest<'_>) -> Result<Critique, CriticError> {
    match (config.reversible_env, req.next_observation.is_some()) {
        (true, false) => Err(CriticError::ContractViolation(
            "reversible environment requires the probed observation".into(),
        )),
        (false, true) => Err(CriticError::ContractViolation(
            "irreversible environment must be critiqued before stepping".into(),
        )),
        _ => critic.critique(req),
    }
}

pub fn should_rewind(record: &CritiqueRecord, config: &CriticConfig) -> bool {
    config.threshold.is_some_and(|t| record.score <= t)
}

pub struct RefineRequest<'a> {
    pub env_before: &'a dyn EnvView,
    pub trajectory: &'a Trajectory,
    pub candidates: &'a [String],
    /// The rejected action.
    pub action: &'a str,
    pub record: &'a CritiqueRecord,
    /// Behavior policy distribution over `candidates`, if known.
    pub policy_probs: Option<&'a [f64]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Refinement {
    pub index: usize,
    pub action: String,
    pub units: u64,
}

pub trait Refiner: Send + Sync {
    fn refine(&self, req: &RefineRequest<'_>, rng: &mut dyn RngCore) -> Result<Refinement, CriticError>;
}

/// Index of the highest-valued candidate, lowest index on ties.
pub fn best_candidate(env: &dyn EnvView, candidates: &[String]) -> Result<(usize, u8), EnvError> {
    let mut best: Option<(usize, u8)> = None;
    for (i, c) in candidates.iter().enumerate() {
        let v = env.oracle_step_value(c)?;
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    best.ok_or_else(|| EnvError::InadmissibleAction("no candidates".into()))
}

/// Scores each action with the environment's exact step value.
#[derive(Debug, Clone, Default)]
pub struct OracleCritic;

impl Critic for OracleCritic {
    fn critique(&self, req: &CritiqueRequest<'_>) -> Result<Critique, CriticError> {
        let score = req.env_before.oracle_step_value(req.action)?;
        let candidates = req.env_before.candidates();
        let (best, best_value) = best_candidate(req.env_before, &candidates)?;
        let critique = if score >= best_value {
            format!("\"{}\" is among the most useful actions here.", req.action)
        } else {
            format!(
                "\"{}\" is worth {score}/10 while \"{}\" is worth {best_value}/10.",
                req.action, candidates[best]
            )
        };
        let units = critique.chars().count() as u64;
        Ok(Critique {
            record: CritiqueRecord {
                score,
                critique,
                suggestion_action: Some(candidates[best].clone()),
                suggestion_reasoning: None,
            },
            units,
        })
    }
}

/// With probability `fidelity` returns the best candidate; otherwise
/// resamples from the policy with the rejected action removed.
#[derive(Debug, Clone)]
pub struct OracleRefiner {
    pub fidelity: f64,
}

impl OracleRefiner {
    pub fn new(fidelity: f64) -> Self {
        Self { fidelity }
    }
}

impl Refiner for OracleRefiner {
    fn refine(&self, req: &RefineRequest<'_>, rng: &mut dyn RngCore) -> Result<Refinement, CriticError> {
        let rejected = req.candidates.iter().position(|c| c == req.action);
        let alternatives = req.candidates.len() - usize::from(rejected.is_some());
        if alternatives == 0 {
            return Err(CriticError::NoAlternativeAction);
        }
        let u: f64 = rng.gen();
        let index = if u < self.fidelity {
            best_candidate(req.env_before, req.candidates)?.0
        } else {
            let mut weights: Vec<f64> = match req.policy_probs {
                Some(p) if p.len() == req.candidates.len() => p.to_vec(),
                _ => vec![1.0; req.candidates.len()],
            };
            if let Some(r) = rejected {
                weights[r] = 0.0;
            }
            let total: f64 = weights.iter().sum();
            if total > 0.0 && total.is_finite() {
                weights.iter_mut().for_each(|w| *w /= total);
            } else {
                weights = (0..req.candidates.len())
                    .map(|i| if Some(i) == rejected { 0.0 } else { 1.0 / alternatives as f64 })
                    .collect();
            }
            sample_index(&weights, rng)
        };
        let action = req.candidates[index].clone();
        Ok(Refinement {
            index,
            units: action.chars().count() as u64,
            action,
        })
    }
}

/// One harvested step for the offline refinement study.
#[derive(Debug, Clone)]
pub struct StudyStep<E> {
    pub env: E,
    pub action: String,
    pub score: u8,
    pub policy_probs: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DeltaBucket {
    pub count: usize,
    pub mean_delta: Option<f64>,
    /// Count of each observed delta value.
    pub distribution: BTreeMap<i32, usize>,
}

/// Per-original-score buckets for scores 0..=9.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaHistogram {
    pub buckets: BTreeMap<u8, DeltaBucket>,
}

/// Refines every step, re-scores the refined action with the same critic and
/// buckets `new − old` by the original score.
pub fn refinement_delta_study<E: Environment>(
    steps: &[StudyStep<E>],
    critic: &dyn Critic,
    refiner: &dyn Refiner,
    config: &CriticConfig,
    rng: &mut dyn RngCore,
) -> Result<DeltaHistogram, CriticError> {
    let mut deltas: BTreeMap<u8, Vec<i32>> = (0..10).map(|s| (s, Vec::new())).collect();
    let empty = Trajectory::new("study", crate::trajectory::RolloutMode::Proceed, 0);
    for step in steps {
        if step.score >= 10 {
            return Err(CriticError::ContractViolation(format!(
                "study steps must score below 10, got {}",
                step.score
            )));
        }
        let candidates = step.env.candidates();
        let record = CritiqueRecord {
            score: step.score,
            critique: String::new(),
            suggestion_action: None,
            suggestion_reasoning: None,
        };
        let refined = match refiner.refine(
            &RefineRequest {
                env_before: &step.env,
                trajectory: &empty,
                candidates: &candidates,
                action: &step.action,
                record: &record,
                policy_probs: step.policy_probs.as_deref(),
            },
            rng,
        ) {
            Ok(r) => r,
            Err(CriticError::NoAlternativeAction) => continue,
            Err(e) => return Err(e),
        };
        let observation = if config.reversible_env {
            let mut probe = step.env.clone();
            Some(probe.step(&refined.action)?.observation)
        } else {
            None
        };
        let rescored = evaluate(
            critic,
            config,
            &CritiqueRequest {
                env_before: &step.env,
                trajectory: &empty,
                action: &refined.action,
                next_observation: observation.as_deref(),
            },
        )?;
        deltas
            .get_mut(&step.score)
            .expect("score below 10")
            .push(i32::from(rescored.record.score) - i32::from(step.score));
    }
    let buckets = deltas
        .into_iter()
        .map(|(score, ds)| {
            let mut distribution = BTreeMap::new();
            for d in &ds {
                *distribution.entry(*d).or_insert(0) += 1;
            }
            let mean_delta = if ds.is_empty() {
                None
            } else {
                Some(ds.iter().map(|&d| f64::from(d)).sum::<f64>() / ds.len() as f64)
            };
            (
                score,
                DeltaBucket {
                    count: ds.len(),
                    mean_delta,
                    distribution,
                },
            )
        })
        .collect();
    Ok(DeltaHistogram { buckets })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(score: u8) -> CritiqueRecord {
        CritiqueRecord {
            score,
            critique: String::new(),
            suggestion_action: None,
            suggestion_reasoning: None,
        }
    }

    #[test]
    fn threshold_is_inclusive() {
        let c = CriticConfig::default();
        assert!(should_rewind(&record(3), &c));
        assert!(!should_rewind(&record(4), &c));
        let always = CriticConfig {
            threshold: Some(10),
            ..c.clone()
        };
        assert!((0..=10).all(|s| should_rewind(&record(s), &always)));
        let never = CriticConfig { threshold: None, ..c };
        assert!((0..=10).all(|s| !should_rewind(&record(s), &never)));
    }

    #[test]
    fn config_validation() {
        assert!(CriticConfig::default().validate().is_ok());
        let bad = CriticConfig {
            threshold: Some(11),
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = CriticConfig {
            refiner_fidelity: 1.5,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn kind_round_trip() {
        for k in [CriticKind::Oracle, CriticKind::SelfCritic, CriticKind::Homogeneous, CriticKind::External] {
            assert_eq!(k.to_string().parse::<CriticKind>().unwrap(), k);
        }
    }
}
