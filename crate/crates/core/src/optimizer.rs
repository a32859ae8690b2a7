//! Clipped group-relative surrogate with demonstration weighting, plus the
//! supervised baselines.
//!
//! For a retained group `G` the objective is
//!
//! ```text
//! (1/|G|) Σ_i Σ_t m_{i,t} · σ_{i,t} · min(r_{i,t} A_i, clip(r_{i,t}, 1−ε_low, 1+ε_high) A_i)
//! ```
//!
//! averaged over retained groups, minus `β · KL(π_θ ‖ π_ref)` averaged over the
//! visited states. `σ = p(1−p)` for demonstration steps (with `p` the current
//! probability of the demonstrated action) and `1` for on-policy steps; `m`
//! zeroes the demonstration steps of failed trajectories.

use rand::seq::index::sample as sample_indices;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::Task;
use crate::policy::{action_distribution, grad_logprob_with, mean_feature, PolicyError, PolicyParams, SoftmaxPolicy};
use crate::rollout::{collect_batch, cost_ratio, Guide, RolloutConfig, RolloutError, StepTrace, Traced, TracedGroup};
use crate::seeding::{derive, rng_for, slot_seed, Stream};
use crate::trajectory::{reward_stats, RolloutMode, StepTag, Trajectory, TrajectoryError};

pub const RATIO_MIN: f64 = 1e-8;
pub const RATIO_MAX: f64 = 1e8;

#[derive(Debug, Error)]
pub enum OptimError {
    #[error("probability {0} outside [0, 1]")]
    Domain(f64),
    #[error("every group was dropped; nothing to optimize")]
    EmptyBufferAfterDrop,
    #[error("no correct samples")]
    NoCorrectSamples,
    #[error("trajectory for task {0} is not correct")]
    NotCorrect(String),
    #[error("trace length {trace} does not match {steps} steps")]
    TraceMismatch { trace: usize, steps: usize },
    #[error("invalid optimizer config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Rollout(#[from] RolloutError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OptimConfig {
    pub eps_low: f64,
    pub eps_high: f64,
    pub learning_rate: f64,
    pub kl_coeff: f64,
    pub drop_degenerate_groups: bool,
    /// Gradient steps taken on each collected batch.
    pub update_epochs: usize,
}

impl Default for OptimConfig {
    fn default() -> Self {
        Self {
            eps_low: 0.2,
            eps_high: 0.28,
            learning_rate: 1e-4,
            kl_coeff: 0.01,
            drop_degenerate_groups: true,
            update_epochs: 4,
        }
    }
}

impl OptimConfig {
    pub fn validate(&self) -> Result<(), OptimError> {
        let bad = |m: &str| Err(OptimError::InvalidConfig(m.into()));
        if !(self.eps_low > 0.0 && self.eps_high > 0.0) {
            return bad("clip epsilons must be positive");
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning rate must be positive");
        }
        if !(self.kl_coeff >= 0.0) {
            return bad("KL coefficient must be non-negative");
        }
        if self.update_epochs == 0 {
            return bad("update epochs must be at least 1");
        }
        Ok(())
    }
}

/// Standardized rewards with population std. `None` when the group has zero
/// variance and `drop_degenerate` is set; all zeros when it is not.
pub fn group_advantage(rewards: &[f64], drop_degenerate: bool) -> Option<Vec<f64>> {
    let stats = reward_stats(rewards).ok()?;
    if stats.degenerate {
        return if drop_degenerate { None } else { Some(vec![0.0; rewards.len()]) };
    }
    Some(rewards.iter().map(|r| (r - stats.mean) / stats.std).collect())
}

/// `exp(logp_new − logp_old)` clamped to `[1e-8, 1e8]`.
pub fn is_ratio(logp_new: f64, logp_old: f64) -> f64 {
    ratio_with_flag(logp_new, logp_old).0
}

fn ratio_with_flag(logp_new: f64, logp_old: f64) -> (f64, bool) {
    let r = (logp_new - logp_old).exp();
    if r < RATIO_MIN {
        log::warn!("importance ratio {r:e} clamped to {RATIO_MIN:e}");
        (RATIO_MIN, true)
    } else if r > RATIO_MAX || r.is_nan() {
        log::warn!("importance ratio {r:e} clamped to {RATIO_MAX:e}");
        (RATIO_MAX, true)
    } else {
        (r, false)
    }
}

pub fn clipped_term(ratio: f64, advantage: f64, config: &OptimConfig) -> f64 {
    let clipped = ratio.clamp(1.0 - config.eps_low, 1.0 + config.eps_high);
    (ratio * advantage).min(clipped * advantage)
}

/// True when the unclipped branch is the one `min` selects (or the two agree),
/// i.e. when the term depends on the ratio.
fn ratio_branch_active(ratio: f64, advantage: f64, config: &OptimConfig) -> bool {
    let clipped = ratio.clamp(1.0 - config.eps_low, 1.0 + config.eps_high);
    ratio * advantage <= clipped * advantage
}

/// `p(1−p)`.
pub fn sigma(p: f64) -> Result<f64, OptimError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(OptimError::Domain(p));
    }
    Ok(p * (1.0 - p))
}

/// Step weight: `σ(p)` for demonstrations, `1` for on-policy steps.
pub fn step_sigma(tag: StepTag, p: f64) -> Result<f64, OptimError> {
    match tag {
        StepTag::OnPolicy => Ok(1.0),
        StepTag::Demonstration => sigma(p),
    }
}

/// 0 for demonstration steps of failed trajectories, 1 otherwise.
pub fn demonstration_mask(trajectory: &Trajectory) -> Vec<f64> {
    let failed = !trajectory.succeeded();
    trajectory
        .steps
        .iter()
        .map(|s| if failed && s.is_demonstration() { 0.0 } else { 1.0 })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Surrogate {
    pub objective: f64,
    pub gradient: Vec<f64>,
    pub retained_groups: usize,
    pub mean_advantage_abs: f64,
    pub kl: f64,
    pub clamped_ratios: usize,
}

struct GroupTerms {
    objective: f64,
    gradient: Vec<f64>,
    kl: f64,
    kl_grad: Vec<f64>,
    states: usize,
    adv_abs: f64,
    clamped: usize,
}

fn add_scaled(acc: &mut [f64], v: &[f64], s: f64) {
    for (a, x) in acc.iter_mut().zip(v) {
        *a += s * x;
    }
}

fn group_terms(
    g: &TracedGroup,
    advantages: &[f64],
    params: &PolicyParams,
    params_old: &PolicyParams,
    params_ref: &PolicyParams,
    config: &OptimConfig,
) -> Result<GroupTerms, OptimError> {
    let dim = params.dim();
    let size = g.group.trajectories.len() as f64;
    let temp = params.temperature;
    let mut out = GroupTerms {
        objective: 0.0,
        gradient: vec![0.0; dim],
        kl: 0.0,
        kl_grad: vec![0.0; dim],
        states: 0,
        adv_abs: 0.0,
        clamped: 0,
    };
    for ((traj, trace), &adv) in g.group.trajectories.iter().zip(&g.traces).zip(advantages) {
        if trace.len() != traj.steps.len() {
            return Err(OptimError::TraceMismatch {
                trace: trace.len(),
                steps: traj.steps.len(),
            });
        }
        out.adv_abs += adv.abs();
        let mask = demonstration_mask(traj);
        for ((step, st), m) in traj.steps.iter().zip(trace).zip(mask) {
            let probs = action_distribution(params, &st.features)?;
            if config.kl_coeff > 0.0 {
                let q = action_distribution(params_ref, &st.features)?;
                let (kl, grad) = kl_and_grad(&probs, &q, st, temp);
                out.kl += kl;
                add_scaled(&mut out.kl_grad, &grad, 1.0);
                out.states += 1;
            }
            if m == 0.0 {
                continue;
            }
            let old = action_distribution(params_old, &st.features)?;
            let p = probs[st.chosen];
            let (ratio, clamped) = ratio_with_flag(p.ln(), old[st.chosen].ln());
            out.clamped += usize::from(clamped);
            let term = clipped_term(ratio, adv, config);
            let s = step_sigma(step.tag, p)?;
            out.objective += m * s * term / size;

            let glog = grad_logprob_with(&probs, &st.features, st.chosen, temp);
            let dterm = if !clamped && ratio_branch_active(ratio, adv, config) {
                adv * ratio
            } else {
                0.0
            };
            let dsigma = match step.tag {
                StepTag::OnPolicy => 0.0,
                StepTag::Demonstration => (1.0 - 2.0 * p) * p,
            };
            add_scaled(&mut out.gradient, &glog, m * (dsigma * term + s * dterm) / size);
        }
    }
    Ok(out)
}

/// `KL(p‖q)` at one state and its gradient with respect to θ of `p`.
fn kl_and_grad(p: &[f64], q: &[f64], st: &StepTrace, temperature: f64) -> (f64, Vec<f64>) {
    let mean = mean_feature(p, &st.features);
    let mut kl = 0.0;
    let mut grad = vec![0.0; mean.len()];
    for (a, (&pa, &qa)) in p.iter().zip(q).enumerate() {
        if pa <= 0.0 {
            continue;
        }
        let l = pa.ln() - qa.max(f64::MIN_POSITIVE).ln();
        kl += pa * l;
        for ((g, f), m) in grad.iter_mut().zip(st.features.row(a)).zip(&mean) {
            *g += pa * l * (f - m) / temperature;
        }
    }
    (kl, grad)
}

/// Objective and analytic gradient. The clip branch is treated as a
/// piecewise-constant selection.
pub fn surrogate_and_gradient(
    buffer: &[TracedGroup],
    params: &PolicyParams,
    params_old: &PolicyParams,
    params_ref: &PolicyParams,
    config: &OptimConfig,
) -> Result<Surrogate, OptimError> {
    let retained: Vec<(&TracedGroup, Vec<f64>)> = buffer
        .iter()
        .filter_map(|g| group_advantage(&g.group.rewards(), config.drop_degenerate_groups).map(|a| (g, a)))
        .collect();
    if retained.is_empty() {
        return Err(OptimError::EmptyBufferAfterDrop);
    }
    let parts: Vec<GroupTerms> = retained
        .par_iter()
        .map(|(g, a)| group_terms(g, a, params, params_old, params_ref, config))
        .collect::<Result<_, _>>()?;
    let n = retained.len() as f64;
    let dim = params.dim();
    let mut objective = 0.0;
    let mut gradient = vec![0.0; dim];
    let (mut kl, mut kl_grad, mut states) = (0.0, vec![0.0; dim], 0usize);
    let (mut adv_abs, mut trajs, mut clamped) = (0.0, 0usize, 0usize);
    for (part, (g, _)) in parts.iter().zip(&retained) {
        objective += part.objective / n;
        add_scaled(&mut gradient, &part.gradient, 1.0 / n);
        kl += part.kl;
        add_scaled(&mut kl_grad, &part.kl_grad, 1.0);
        states += part.states;
        adv_abs += part.adv_abs;
        trajs += g.group.trajectories.len();
        clamped += part.clamped;
    }
    let mean_kl = if states > 0 { kl / states as f64 } else { 0.0 };
    if states > 0 {
        objective -= config.kl_coeff * mean_kl;
        add_scaled(&mut gradient, &kl_grad, -config.kl_coeff / states as f64);
    }
    Ok(Surrogate {
        objective,
        gradient,
        retained_groups: retained.len(),
        mean_advantage_abs: adv_abs / trajs as f64,
        kl: mean_kl,
        clamped_ratios: clamped,
    })
}

fn ascend(params: &PolicyParams, gradient: &[f64], lr: f64) -> PolicyParams {
    let mut next = params.clone();
    add_scaled(&mut next.theta, gradient, lr);
    next
}

/// `∇ = mean over trajectories of Σ_t ∇ log π(a_t | s_t)`; every trajectory
/// must be correct.
pub fn sft_gradient(samples: &[Traced], params: &PolicyParams) -> Result<Vec<f64>, OptimError> {
    if samples.is_empty() {
        return Err(OptimError::NoCorrectSamples);
    }
    let mut grad = vec![0.0; params.dim()];
    for s in samples {
        if !s.trajectory.succeeded() {
            return Err(OptimError::NotCorrect(s.trajectory.task_id.clone()));
        }
        for st in &s.trace {
            let probs = action_distribution(params, &st.features)?;
            let g = grad_logprob_with(&probs, &st.features, st.chosen, params.temperature);
            add_scaled(&mut grad, &g, 1.0 / samples.len() as f64);
        }
    }
    Ok(grad)
}

pub fn sft_update(samples: &[Traced], params: &PolicyParams, lr: f64) -> Result<PolicyParams, OptimError> {
    Ok(ascend(params, &sft_gradient(samples, params)?, lr))
}

/// Vanilla groups of size `g` per task, keeping only correct trajectories.
pub fn rft_collect(
    params: &PolicyParams,
    tasks: &[Task],
    g: usize,
    run_seed: u64,
    max_steps: Option<usize>,
) -> Result<Vec<Traced>, OptimError> {
    let policy = SoftmaxPolicy::new(params.clone());
    let jobs: Vec<(usize, usize)> = (0..tasks.len()).flat_map(|t| (0..g).map(move |s| (t, s))).collect();
    let all: Vec<Traced> = jobs
        .par_iter()
        .map(|&(t, slot)| {
            let task = &tasks[t];
            let mut env = crate::env::AnyEnv::new(task, max_steps).map_err(RolloutError::from)?;
            crate::rollout::vanilla_rollout(&policy, &mut env, task.id(), slot_seed(run_seed, task.id(), slot))
        })
        .collect::<Result<_, _>>()?;
    let correct: Vec<Traced> = all.into_iter().filter(|t| t.trajectory.succeeded()).collect();
    if correct.is_empty() {
        return Err(OptimError::NoCorrectSamples);
    }
    Ok(correct)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub iterations: usize,
    /// Groups collected per iteration.
    pub batch_size: usize,
    pub optim: OptimConfig,
    pub rollout: RolloutConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            iterations: 200,
            batch_size: 32,
            optim: OptimConfig::default(),
            rollout: RolloutConfig::default(),
            seed: 0,
        }
    }
}

/// One row of the training metrics CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationMetrics {
    pub iteration: usize,
    /// Success rate of the on-policy (vanilla) slots; all slots when there are none.
    pub success_rate: f64,
    pub mean_reward: f64,
    pub mean_advantage_abs: f64,
    pub demo_fraction: f64,
    pub masked_fraction: f64,
    pub cost_ratio: f64,
    pub objective: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub metrics: Vec<IterationMetrics>,
    pub params: PolicyParams,
}

/// Training tasks for one iteration: `count` distinct tasks, or all of them.
fn pick_tasks(tasks: &[Task], count: usize, seed: u64, iteration: usize) -> Vec<Task> {
    if count >= tasks.len() {
        return tasks.to_vec();
    }
    let mut rng = rng_for(derive(&[seed, iteration as u64]), Stream::TaskSampling);
    let mut idx = sample_indices(&mut rng, tasks.len(), count).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| tasks[i].clone()).collect()
}

fn batch_stats(batch: &[TracedGroup]) -> (f64, f64, f64, f64, f64) {
    let trajs: Vec<&Trajectory> = batch.iter().flat_map(|g| g.group.trajectories.iter()).collect();
    let n = trajs.len().max(1) as f64;
    let mean_reward = trajs.iter().map(|t| t.reward).sum::<f64>() / n;
    let vanilla: Vec<&&Trajectory> = trajs.iter().filter(|t| t.mode == RolloutMode::Vanilla).collect();
    let success_rate = if vanilla.is_empty() {
        mean_reward
    } else {
        vanilla.iter().filter(|t| t.succeeded()).count() as f64 / vanilla.len() as f64
    };
    let steps: usize = trajs.iter().map(|t| t.steps.len()).sum();
    let demos: usize = trajs.iter().map(|t| t.demonstration_count()).sum();
    let masked: f64 = trajs
        .iter()
        .map(|t| demonstration_mask(t).iter().filter(|&&m| m == 0.0).count() as f64)
        .sum();
    let steps_f = steps.max(1) as f64;
    let ratio = cost_ratio(trajs.iter().copied()).unwrap_or(f64::NAN);
    (success_rate, mean_reward, demos as f64 / steps_f, masked / steps_f, ratio)
}

/// Alternating collect/update loop. `proceed_fraction = 0` gives the plain
/// group-relative baseline.
pub fn train(
    tasks: &[Task],
    init: &PolicyParams,
    guide: Guide<'_>,
    config: &TrainConfig,
) -> Result<TrainOutcome, OptimError> {
    config.optim.validate()?;
    config.rollout.validate()?;
    let reference = init.snapshot();
    let mut params = init.clone();
    let mut metrics = Vec::with_capacity(config.iterations);
    for it in 0..config.iterations {
        let batch_tasks = pick_tasks(tasks, config.batch_size, config.seed, it);
        let old = params.snapshot();
        let policy = SoftmaxPolicy::new(old.clone());
        let batch = collect_batch(&batch_tasks, &policy, guide, &config.rollout, derive(&[config.seed, it as u64, 1]))?;
        let (success_rate, mean_reward, demo_fraction, masked_fraction, ratio) = batch_stats(&batch);
        let mut row = IterationMetrics {
            iteration: it,
            success_rate,
            mean_reward,
            mean_advantage_abs: 0.0,
            demo_fraction,
            masked_fraction,
            cost_ratio: ratio,
            objective: 0.0,
            grad_norm: 0.0,
        };
        for epoch in 0..config.optim.update_epochs {
            match surrogate_and_gradient(&batch, &params, &old, &reference, &config.optim) {
                Ok(s) => {
                    if epoch == 0 {
                        row.objective = s.objective;
                        row.mean_advantage_abs = s.mean_advantage_abs;
                        row.grad_norm = s.gradient.iter().map(|g| g * g).sum::<f64>().sqrt();
                    }
                    params = ascend(&params, &s.gradient, config.optim.learning_rate);
                }
                Err(OptimError::EmptyBufferAfterDrop) => {
                    log::debug!("iteration {it}: every group degenerate, skipping update");
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        metrics.push(row);
    }
    Ok(TrainOutcome { metrics, params })
}

/// Where supervised fine-tuning data comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SftSource {
    /// Correct vanilla samples of the initial policy.
    Vanilla,
    /// Correct critic-guided samples of the initial policy.
    Proceed,
    /// Rejection sampling: correct vanilla samples of the current policy,
    /// re-collected every iteration.
    Rejection,
}

/// Supervised baselines. `Vanilla` and `Proceed` collect one dataset of
/// `batch_size × group_size` samples up front and then take `iterations`
/// full-batch steps on it.
pub fn train_sft(
    tasks: &[Task],
    init: &PolicyParams,
    source: SftSource,
    guide: Guide<'_>,
    config: &TrainConfig,
) -> Result<TrainOutcome, OptimError> {
    config.optim.validate()?;
    let lr = config.optim.learning_rate;
    let mut params = init.clone();
    let mut metrics = Vec::with_capacity(config.iterations);
    let dataset = match source {
        SftSource::Rejection => Vec::new(),
        SftSource::Vanilla | SftSource::Proceed => {
            let rollout = RolloutConfig {
                proceed_fraction: if source == SftSource::Proceed { 1.0 } else { 0.0 },
                ..config.rollout.clone()
            };
            let batch_tasks = pick_tasks(tasks, config.batch_size, config.seed, 0);
            let policy = SoftmaxPolicy::new(init.clone());
            let batch = collect_batch(&batch_tasks, &policy, guide, &rollout, derive(&[config.seed, 0, 2]))?;
            correct_samples(batch)
        }
    };
    if source != SftSource::Rejection && dataset.is_empty() {
        return Err(OptimError::NoCorrectSamples);
    }
    for it in 0..config.iterations {
        let fresh;
        let data = if source == SftSource::Rejection {
            let batch_tasks = pick_tasks(tasks, config.batch_size, config.seed, it);
            fresh = match rft_collect(
                &params,
                &batch_tasks,
                config.rollout.group_size,
                derive(&[config.seed, it as u64, 3]),
                config.rollout.max_steps,
            ) {
                Ok(d) => d,
                Err(OptimError::NoCorrectSamples) => Vec::new(),
                Err(e) => return Err(e),
            };
            &fresh
        } else {
            &dataset
        };
        let mut row = IterationMetrics {
            iteration: it,
            success_rate: f64::NAN,
            mean_reward: f64::NAN,
            mean_advantage_abs: 0.0,
            demo_fraction: 0.0,
            masked_fraction: 0.0,
            cost_ratio: f64::NAN,
            objective: 0.0,
            grad_norm: 0.0,
        };
        if !data.is_empty() {
            let trajs: Vec<&Trajectory> = data.iter().map(|t| &t.trajectory).collect();
            let steps: usize = trajs.iter().map(|t| t.steps.len()).sum();
            row.demo_fraction = trajs.iter().map(|t| t.demonstration_count()).sum::<usize>() as f64 / steps as f64;
            row.cost_ratio = cost_ratio(trajs.iter().copied()).unwrap_or(f64::NAN);
            row.objective = sft_log_likelihood(data, &params)?;
            let grad = sft_gradient(data, &params)?;
            row.grad_norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            params = ascend(&params, &grad, lr);
        }
        metrics.push(row);
    }
    Ok(TrainOutcome { metrics, params })
}

fn correct_samples(batch: Vec<TracedGroup>) -> Vec<Traced> {
    batch
        .into_iter()
        .flat_map(|g| {
            g.group
                .trajectories
                .into_iter()
                .zip(g.traces)
                .map(|(trajectory, trace)| Traced { trajectory, trace })
        })
        .filter(|t| t.trajectory.succeeded())
        .collect()
}

/// Mean over trajectories of `Σ_t log π(a_t | s_t)`.
pub fn sft_log_likelihood(samples: &[Traced], params: &PolicyParams) -> Result<f64, OptimError> {
    let mut total = 0.0;
    for s in samples {
        for st in &s.trace {
            let probs = action_distribution(params, &st.features)?;
            total += probs[st.chosen].ln();
        }
    }
    Ok(total / samples.len().max(1) as f64)
}
