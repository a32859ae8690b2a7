//! Vanilla repeated sampling and the critic-guided rewind-and-refine rollout.

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::critic::{
    evaluate, should_rewind, Critic, CriticConfig, CriticError, CritiqueRequest, RefineRequest, Refiner,
};
use crate::env::{AnyEnv, EnvError, Environment, Task};
use crate::policy::{DecisionContext, FeatureMatrix, Policy, PolicyError};
use crate::seeding::{derive, rng_for, slot_seed, Stream};
use crate::trajectory::{Group, RolloutMode, StepRecord, StepTag, Trajectory, TrajectoryError};

#[derive(Debug, Error)]
pub enum RolloutError {
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Critic(#[from] CriticError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error("average policy units are zero")]
    ZeroPolicyUnits,
    #[error("invalid rollout config: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RolloutConfig {
    pub group_size: usize,
    pub proceed_fraction: f64,
    /// Step budget; `None` uses the environment default.
    pub max_steps: Option<usize>,
    pub critic: CriticConfig,
    /// After a kept probe, apply the same action a second time instead of
    /// committing the probe transition.
    pub literal_double_step: bool,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        Self {
            group_size: 8,
            proceed_fraction: 0.5,
            max_steps: None,
            critic: CriticConfig::default(),
            literal_double_step: false,
        }
    }
}

impl RolloutConfig {
    pub fn validate(&self) -> Result<(), RolloutError> {
        if self.group_size == 0 {
            return Err(RolloutError::InvalidConfig("group size must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.proceed_fraction) {
            return Err(RolloutError::InvalidConfig(format!(
                "proceed fraction {} outside [0, 1]",
                self.proceed_fraction
            )));
        }
        self.critic.validate()?;
        Ok(())
    }

    /// Number of critic-guided slots in a group (ceiling rule).
    pub fn proceed_slots(&self) -> usize {
        ((self.group_size as f64 * self.proceed_fraction).ceil() as usize).min(self.group_size)
    }
}

/// Per-step record of what the policy saw, kept beside the trajectory for
/// the optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct StepTrace {
    pub features: FeatureMatrix,
    /// Candidate index of the executed action.
    pub chosen: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Traced {
    pub trajectory: Trajectory,
    pub trace: Vec<StepTrace>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TracedGroup {
    pub group: Group,
    pub traces: Vec<Vec<StepTrace>>,
}

/// Critic and refiner used by critic-guided rollouts.
#[derive(Clone, Copy)]
pub struct Guide<'a> {
    pub critic: &'a dyn Critic,
    pub refiner: &'a dyn Refiner,
    pub config: &'a CriticConfig,
}

struct Decision {
    state_text: String,
    candidates: Vec<String>,
    features: FeatureMatrix,
    index: usize,
    action: String,
    logprob: Option<f64>,
    policy_units: u64,
    probs: Option<Vec<f64>>,
}

fn decide<E: Environment>(
    policy: &dyn Policy,
    env: &E,
    trajectory: &Trajectory,
    rng: &mut dyn RngCore,
    want_probs: bool,
) -> Result<Decision, RolloutError> {
    let state_text = env.state_text();
    let candidates = env.candidates();
    let features = FeatureMatrix::build(env, &candidates);
    let description = env.describe();
    let ctx = DecisionContext {
        trajectory,
        state_text: &state_text,
        candidates: &candidates,
        features: &features,
        description: &description,
    };
    let choice = policy.choose(&ctx, rng)?;
    let probs = if want_probs { policy.probabilities(&ctx) } else { None };
    Ok(Decision {
        index: choice.index,
        action: choice.action,
        logprob: choice.logprob,
        policy_units: choice.units,
        probs,
        state_text,
        candidates,
        features,
    })
}

fn safe_ln(p: f64) -> f64 {
    p.max(f64::MIN_POSITIVE).ln().min(0.0)
}

/// Samples from the policy until the episode ends. `env` is reset with a
/// seed derived from `seed`.
pub fn vanilla_rollout<E: Environment>(
    policy: &dyn Policy,
    env: &mut E,
    task_id: &str,
    seed: u64,
) -> Result<Traced, RolloutError> {
    env.reset(derive(&[seed, Stream::Environment as u64]))?;
    let mut prng = rng_for(seed, Stream::Policy);
    let mut trajectory = Trajectory::new(task_id, RolloutMode::Vanilla, seed);
    let mut trace = Vec::new();
    let mut success = false;
    while !env.is_done() {
        let d = decide(policy, env, &trajectory, &mut prng, false)?;
        let out = env.step(&d.action)?;
        let mut step = StepRecord::new(trajectory.steps.len(), d.state_text, d.action);
        step.observation = Some(out.observation);
        step.behavior_logprob = d.logprob;
        step.policy_units = d.policy_units;
        trajectory.append_step(step)?;
        trace.push(StepTrace {
            features: d.features,
            chosen: d.index,
        });
        success = out.success;
    }
    trajectory.finalize(success)?;
    Ok(Traced { trajectory, trace })
}

/// Critic-guided rollout. In reversible environments every action is probed
/// from a snapshot, critiqued with its observed effect and, when the score is
/// at or below the threshold, replaced by a refined action stepped from the
/// restored snapshot. In irreversible environments the action is critiqued
/// before it is taken.
pub fn proceed_rollout<E: Environment>(
    policy: &dyn Policy,
    guide: Guide<'_>,
    env: &mut E,
    task_id: &str,
    seed: u64,
    literal_double_step: bool,
) -> Result<Traced, RolloutError> {
    env.reset(derive(&[seed, Stream::Environment as u64]))?;
    let mut prng = rng_for(seed, Stream::Policy);
    let mut rrng = rng_for(seed, Stream::Refiner);
    let config = guide.config;
    let mut trajectory = Trajectory::new(task_id, RolloutMode::Proceed, seed);
    let mut trace = Vec::new();
    let mut success = false;
    while !env.is_done() {
        let d = decide(policy, env, &trajectory, &mut prng, config.threshold.is_some())?;
        let mut step = StepRecord::new(trajectory.steps.len(), d.state_text.clone(), d.action.clone());
        step.behavior_logprob = d.logprob;
        step.policy_units = d.policy_units;
        let mut chosen = d.index;

        let snapshot = env.snapshot();
        let probe = if config.reversible_env {
            Some(env.step(&d.action)?)
        } else {
            None
        };
        let critique = evaluate(
            guide.critic,
            config,
            &CritiqueRequest {
                env_before: snapshot.view(),
                trajectory: &trajectory,
                action: &d.action,
                next_observation: probe.as_ref().map(|p| p.observation.as_str()),
            },
        )?;
        step.critic_units = critique.units;
        step.critic_score = Some(critique.record.score);
        step.critique = Some(critique.record.critique.clone());

        let mut refined = None;
        if should_rewind(&critique.record, config) && config.max_refinements_per_step > 0 {
            let req = RefineRequest {
                env_before: snapshot.view(),
                trajectory: &trajectory,
                candidates: &d.candidates,
                action: &d.action,
                record: &critique.record,
                policy_probs: d.probs.as_deref(),
            };
            match guide.refiner.refine(&req, &mut rrng) {
                Ok(r) => refined = Some(r),
                Err(e @ (CriticError::NoAlternativeAction | CriticError::UnusableRefinement)) => {
                    log::debug!("{task_id} step {}: {e}, keeping original action", step.index);
                }
                Err(e) => return Err(e.into()),
            }
        }

        let outcome = match (refined, probe) {
            (Some(r), _) => {
                env.restore(&snapshot);
                let out = env.step(&r.action)?;
                step.behavior_logprob = d.probs.as_ref().map(|p| safe_ln(p[r.index]));
                step.critic_units += r.units;
                step.tag = StepTag::Demonstration;
                step.action = r.action;
                chosen = r.index;
                out
            }
            (None, Some(p)) if literal_double_step && !p.done => match env.step(&d.action) {
                Ok(again) => again,
                Err(EnvError::InadmissibleAction(a)) => {
                    log::debug!("{task_id}: repeated action {a:?} inadmissible, keeping probe");
                    p
                }
                Err(e) => return Err(e.into()),
            },
            (None, Some(p)) => p,
            (None, None) => env.step(&d.action)?,
        };
        step.observation = Some(outcome.observation);
        success = outcome.success;
        trajectory.append_step(step)?;
        trace.push(StepTrace {
            features: d.features,
            chosen,
        });
    }
    trajectory.finalize(success)?;
    Ok(Traced { trajectory, trace })
}

/// Collects one group: the first `ceil(g·fraction)` slots are critic-guided,
/// the rest vanilla. Slots run in parallel; results are ordered by slot.
pub fn collect_group(
    task: &Task,
    policy: &dyn Policy,
    guide: Guide<'_>,
    config: &RolloutConfig,
    run_seed: u64,
) -> Result<TracedGroup, RolloutError> {
    config.validate()?;
    let proceed = config.proceed_slots();
    let results: Vec<Result<Traced, RolloutError>> = (0..config.group_size)
        .into_par_iter()
        .map(|slot| {
            let seed = slot_seed(run_seed, task.id(), slot);
            let mut env = AnyEnv::new(task, config.max_steps)?;
            if slot < proceed {
                proceed_rollout(policy, guide, &mut env, task.id(), seed, config.literal_double_step)
            } else {
                vanilla_rollout(policy, &mut env, task.id(), seed)
            }
        })
        .collect();
    let mut trajectories = Vec::with_capacity(results.len());
    let mut traces = Vec::with_capacity(results.len());
    for r in results {
        let t = r?;
        trajectories.push(t.trajectory);
        traces.push(t.trace);
    }
    Ok(TracedGroup {
        group: Group::new(task.id(), trajectories)?,
        traces,
    })
}

/// One group per task, in task order.
pub fn collect_batch(
    tasks: &[Task],
    policy: &dyn Policy,
    guide: Guide<'_>,
    config: &RolloutConfig,
    run_seed: u64,
) -> Result<Vec<TracedGroup>, RolloutError> {
    tasks
        .par_iter()
        .map(|t| collect_group(t, policy, guide, config, run_seed))
        .collect()
}

/// `1 + mean critic units per step / mean policy units per step`.
pub fn cost_ratio<'a>(trajectories: impl IntoIterator<Item = &'a Trajectory>) -> Result<f64, RolloutError> {
    let (mut steps, mut policy, mut critic) = (0u64, 0u64, 0u64);
    for t in trajectories {
        for s in &t.steps {
            steps += 1;
            policy += s.policy_units;
            critic += s.critic_units;
        }
    }
    if steps == 0 {
        return Err(RolloutError::ZeroPolicyUnits);
    }
    cost_ratio_from_means(policy as f64 / steps as f64, critic as f64 / steps as f64)
}

pub fn cost_ratio_from_means(policy_mean: f64, critic_mean: f64) -> Result<f64, RolloutError> {
    if !(policy_mean > 0.0) {
        return Err(RolloutError::ZeroPolicyUnits);
    }
    Ok(1.0 + critic_mean / policy_mean)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proceed_slot_ceiling() {
        let c = |g, f| RolloutConfig {
            group_size: g,
            proceed_fraction: f,
            ..Default::default()
        };
        assert_eq!(c(8, 0.5).proceed_slots(), 4);
        assert_eq!(c(8, 0.0).proceed_slots(), 0);
        assert_eq!(c(1, 0.5).proceed_slots(), 1);
        assert_eq!(c(3, 0.5).proceed_slots(), 2);
        assert!(c(0, 0.5).validate().is_err());
        assert!(c(4, 1.5).validate().is_err());
    }

    #[test]
    fn cost_ratio_needs_policy_units() {
        assert!(matches!(cost_ratio_from_means(0.0, 3.0), Err(RolloutError::ZeroPolicyUnits)));
        assert_eq!(cost_ratio_from_means(5.0, 0.0).unwrap(), 1.0);
    }
}
