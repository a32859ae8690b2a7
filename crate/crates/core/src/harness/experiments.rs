//! Experiment drivers. Each returns plain rows; `write_csv` persists them.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use super::config::{ExperimentConfig, Method};
use super::stats::{newcombe_difference, wilson, Z95};
use super::HarnessError;
use crate::critic::{
    evaluate, refinement_delta_study, Critic, CriticConfig, CriticKind, CritiqueRequest, OracleCritic, OracleRefiner,
    Refiner, StudyStep,
};
use crate::env::{generate_tasks, AnyEnv, EnvKind, EnvView, Environment, Task};
use crate::llm::{HttpBackend, LlmCritic, LlmRefiner};
use crate::optimizer::{train, train_sft, IterationMetrics, SftSource, TrainOutcome};
use crate::policy::{action_distribution, sample, FeatureMatrix, PolicyParams, SoftmaxPolicy};
use crate::rollout::{cost_ratio, proceed_rollout, vanilla_rollout, Guide, RolloutConfig, Traced};
use crate::seeding::{derive, rng_for, slot_seed, Stream};
use crate::trajectory::Trajectory;

pub const PASSK_ESTIMATOR: &str = "empirical_first_k";

/// Seed-space labels keeping the task pools of different purposes apart.
const HELD_OUT: u64 = 0x4845_4c44;
const EVAL: u64 = 0x4556_414c;

/// Critic and refiner selected by the configuration.
pub struct Agents {
    pub critic: Box<dyn Critic>,
    pub refiner: Box<dyn Refiner>,
    pub config: CriticConfig,
}

impl Agents {
    pub fn from_config(cfg: &ExperimentConfig) -> Result<Self, HarnessError> {
        let config = cfg.critic.to_config()?;
        if config.kind == CriticKind::Oracle {
            return Ok(Self::oracle(config));
        }
        let llm = cfg
            .llm
            .clone()
            .ok_or_else(|| HarnessError::Config(format!("critic kind {} needs an [llm] section", config.kind)))?;
        let retries = llm.max_retries;
        let backend = Arc::new(HttpBackend::new(llm).map_err(|e| HarnessError::Backend(e.to_string()))?);
        Ok(Self {
            critic: Box::new(LlmCritic::new(backend.clone(), retries)),
            refiner: Box::new(LlmRefiner::new(backend, retries)),
            config,
        })
    }

    pub fn oracle(config: CriticConfig) -> Self {
        Self {
            critic: Box::new(OracleCritic),
            refiner: Box::new(OracleRefiner::new(config.refiner_fidelity)),
            config,
        }
    }

    pub fn guide(&self) -> Guide<'_> {
        Guide {
            critic: self.critic.as_ref(),
            refiner: self.refiner.as_ref(),
            config: &self.config,
        }
    }

    pub fn guide_with<'a>(&'a self, config: &'a CriticConfig) -> Guide<'a> {
        Guide {
            critic: self.critic.as_ref(),
            refiner: self.refiner.as_ref(),
            config,
        }
    }
}

pub fn task_pool(cfg: &ExperimentConfig) -> Result<Vec<Task>, HarnessError> {
    Ok(generate_tasks(cfg.env.kind, cfg.env.tasks, &cfg.env.difficulty(), cfg.seed)?)
}

pub fn held_out_pool(cfg: &ExperimentConfig) -> Result<Vec<Task>, HarnessError> {
    Ok(generate_tasks(
        cfg.env.kind,
        cfg.env.held_out_tasks.max(1),
        &cfg.env.difficulty(),
        derive(&[cfg.seed, HELD_OUT]),
    )?)
}

/// Runs `episodes` vanilla or critic-guided samples per task, in parallel,
/// returned in (task, slot) order.
pub fn sample_many(
    tasks: &[Task],
    params: &PolicyParams,
    guide: Option<Guide<'_>>,
    episodes: usize,
    run_seed: u64,
    max_steps: Option<usize>,
) -> Result<Vec<Traced>, HarnessError> {
    let policy = SoftmaxPolicy::new(params.clone());
    let jobs: Vec<(usize, usize)> = (0..tasks.len()).flat_map(|t| (0..episodes).map(move |s| (t, s))).collect();
    jobs.par_iter()
        .map(|&(t, slot)| {
            let task = &tasks[t];
            let seed = slot_seed(run_seed, task.id(), slot);
            let mut env = AnyEnv::new(task, max_steps)?;
            Ok(match guide {
                Some(g) => proceed_rollout(&policy, g, &mut env, task.id(), seed, false)?,
                None => vanilla_rollout(&policy, &mut env, task.id(), seed)?,
            })
        })
        .collect()
}

/// Successes and episode count of vanilla sampling on `tasks`.
pub fn evaluate_policy(
    params: &PolicyParams,
    tasks: &[Task],
    episodes: usize,
    run_seed: u64,
    max_steps: Option<usize>,
) -> Result<(usize, usize), HarnessError> {
    let runs = sample_many(tasks, params, None, episodes, run_seed, max_steps)?;
    Ok((runs.iter().filter(|r| r.trajectory.succeeded()).count(), runs.len()))
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), HarnessError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| HarnessError::Io(e.to_string()))?;
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::Io(e.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

pub fn csv_string<T: Serialize>(rows: &[T]) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv is utf-8"))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalRow {
    pub policy_snapshot_id: String,
    pub episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub config_hash: String,
    pub seed: u64,
}

impl EvalRow {
    pub fn new(cfg: &ExperimentConfig, params: &PolicyParams, successes: usize, episodes: usize) -> Self {
        let ci = wilson(successes, episodes, Z95);
        Self {
            policy_snapshot_id: params.snapshot_id(),
            episodes,
            successes,
            success_rate: successes as f64 / episodes.max(1) as f64,
            ci_low: ci.low,
            ci_high: ci.high,
            config_hash: cfg.hash(),
            seed: cfg.seed,
        }
    }
}

// ---------------------------------------------------------------- noise study

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseRow {
    pub policy: String,
    pub nu: f64,
    pub episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub config_hash: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DropRow {
    pub policy: String,
    pub nu_low: f64,
    pub nu_high: f64,
    pub drop: f64,
    pub drop_ci_low: f64,
    pub drop_ci_high: f64,
    pub config_hash: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseReport {
    pub rows: Vec<NoiseRow>,
    pub drops: Vec<DropRow>,
}

/// Success of a strong and a weakened policy at a low and a high noise level,
/// one episode per task.
pub fn noise_study(cfg: &ExperimentConfig) -> Result<NoiseReport, HarnessError> {
    let hash = cfg.hash();
    let base = generate_tasks(EnvKind::Search, cfg.noise.episodes, &cfg.env.difficulty(), cfg.seed)?;
    let strong = cfg.policy_params()?;
    let weak = strong.weaken(cfg.policy.weak_delta_t)?;
    let mut rows = Vec::new();
    let mut drops = Vec::new();
    for (name, params) in [("strong", &strong), ("weak", &weak)] {
        let mut cell = Vec::new();
        for nu in [cfg.noise.nu_low, cfg.noise.nu_high] {
            let tasks: Vec<Task> = base.iter().cloned().map(|t| t.with_noise(nu)).collect();
            let (s, n) = evaluate_policy(params, &tasks, 1, derive(&[cfg.seed, EVAL]), cfg.env.max_steps)?;
            let ci = wilson(s, n, Z95);
            rows.push(NoiseRow {
                policy: name.into(),
                nu,
                episodes: n,
                successes: s,
                success_rate: s as f64 / n as f64,
                ci_low: ci.low,
                ci_high: ci.high,
                config_hash: hash.clone(),
                seed: cfg.seed,
            });
            cell.push((s, n));
        }
        let (lo, hi) = (cell[0], cell[1]);
        let ci = newcombe_difference(lo.0, lo.1, hi.0, hi.1, Z95);
        drops.push(DropRow {
            policy: name.into(),
            nu_low: cfg.noise.nu_low,
            nu_high: cfg.noise.nu_high,
            drop: lo.0 as f64 / lo.1 as f64 - hi.0 as f64 / hi.1 as f64,
            drop_ci_low: ci.low,
            drop_ci_high: ci.high,
            config_hash: hash.clone(),
            seed: cfg.seed,
        });
    }
    Ok(NoiseReport { rows, drops })
}

// ---------------------------------------------------------------- pass@k

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PasskRow {
    pub mode: String,
    pub k: usize,
    pub pass_at_k: f64,
    /// Vanilla-sample equivalents of `k` samples, using the measured cost ratio.
    pub cost_aligned_samples: f64,
    pub estimator: String,
    pub config_hash: String,
    pub seed: u64,
}

/// Fraction of tasks with at least one success among their first `k`
/// samples, for every `k` up to the samples available. `runs` is in
/// (task, slot) order with `per_task` slots each.
pub fn pass_at_k_curve(runs: &[Trajectory], per_task: usize) -> Vec<f64> {
    let tasks = runs.len() / per_task.max(1);
    let mut first_success = vec![usize::MAX; tasks];
    for (i, r) in runs.iter().enumerate() {
        let (t, slot) = (i / per_task, i % per_task);
        if r.succeeded() && slot < first_success[t] {
            first_success[t] = slot;
        }
    }
    (1..=per_task)
        .map(|k| first_success.iter().filter(|&&f| f < k).count() as f64 / tasks.max(1) as f64)
        .collect()
}

pub fn passk(cfg: &ExperimentConfig) -> Result<Vec<PasskRow>, HarnessError> {
    let hash = cfg.hash();
    let tasks = task_pool(cfg)?;
    let params = cfg.policy_params()?;
    let agents = Agents::from_config(cfg)?;
    let vanilla = sample_many(&tasks, &params, None, cfg.passk.vanilla_k, derive(&[cfg.seed, 1]), cfg.env.max_steps)?;
    let proceed = sample_many(
        &tasks,
        &params,
        Some(agents.guide()),
        cfg.passk.proceed_k,
        derive(&[cfg.seed, 2]),
        cfg.env.max_steps,
    )?;
    let v: Vec<Trajectory> = vanilla.into_iter().map(|t| t.trajectory).collect();
    let p: Vec<Trajectory> = proceed.into_iter().map(|t| t.trajectory).collect();
    let ratio = cost_ratio(p.iter())?;
    let mut rows = Vec::new();
    for (mode, runs, per, scale) in [
        ("vanilla", &v, cfg.passk.vanilla_k, 1.0),
        ("proceed", &p, cfg.passk.proceed_k, ratio),
    ] {
        for (i, pk) in pass_at_k_curve(runs, per).into_iter().enumerate() {
            rows.push(PasskRow {
                mode: mode.into(),
                k: i + 1,
                pass_at_k: pk,
                cost_aligned_samples: (i + 1) as f64 * scale,
                estimator: PASSK_ESTIMATOR.into(),
                config_hash: hash.clone(),
                seed: cfg.seed,
            });
        }
    }
    Ok(rows)
}

// ---------------------------------------------------------------- threshold ablation

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdRow {
    /// Threshold, or "none" when rewinding is disabled.
    pub threshold: String,
    pub episodes: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    /// Vanilla steps whose critic score equals this threshold.
    pub score_count: Option<usize>,
    pub demo_fraction: f64,
    pub config_hash: String,
    pub seed: u64,
}

/// Critic score histogram (index = score) over the steps of vanilla runs.
pub fn score_histogram(
    tasks: &[Task],
    params: &PolicyParams,
    agents: &Agents,
    run_seed: u64,
    max_steps: Option<usize>,
) -> Result<[usize; 11], HarnessError> {
    let runs = sample_many(tasks, params, None, 1, run_seed, max_steps)?;
    let per_task: Vec<Result<Vec<u8>, HarnessError>> = runs
        .par_iter()
        .zip(tasks.par_iter())
        .map(|(r, task)| {
            // replay the episode to score every action in its own state
            let mut env = AnyEnv::new(task, max_steps)?;
            env.reset(derive(&[r.trajectory.seed, Stream::Environment as u64]))?;
            let mut scores = Vec::new();
            for s in &r.trajectory.steps {
                let before = env.clone();
                let out = env.step(&s.action)?;
                let obs = agents.config.reversible_env.then_some(out.observation.as_str());
                let c = evaluate(
                    agents.critic.as_ref(),
                    &agents.config,
                    &CritiqueRequest {
                        env_before: &before,
                        trajectory: &r.trajectory,
                        action: &s.action,
                        next_observation: obs,
                    },
                )?;
                scores.push(c.record.score);
            }
            Ok(scores)
        })
        .collect();
    let mut hist = [0usize; 11];
    for scores in per_task {
        for s in scores? {
            hist[s as usize] += 1;
        }
    }
    Ok(hist)
}

pub fn threshold_ablation(cfg: &ExperimentConfig) -> Result<Vec<ThresholdRow>, HarnessError> {
    let hash = cfg.hash();
    let tasks = task_pool(cfg)?;
    let params = cfg.policy_params()?;
    let agents = Agents::from_config(cfg)?;
    let hist = score_histogram(&tasks, &params, &agents, derive(&[cfg.seed, 3]), cfg.env.max_steps)?;
    let mut settings: Vec<Option<u8>> = Vec::new();
    if cfg.threshold.include_none {
        settings.push(None);
    }
    settings.extend(cfg.threshold.thresholds.iter().map(|&t| Some(t)));
    let mut rows = Vec::new();
    for th in settings {
        let config = CriticConfig {
            threshold: th,
            ..agents.config.clone()
        };
        let runs = sample_many(
            &tasks,
            &params,
            Some(agents.guide_with(&config)),
            cfg.threshold.samples_per_task,
            derive(&[cfg.seed, 4]),
            cfg.env.max_steps,
        )?;
        let n = runs.len();
        let s = runs.iter().filter(|r| r.trajectory.succeeded()).count();
        let steps: usize = runs.iter().map(|r| r.trajectory.steps.len()).sum();
        let demos: usize = runs.iter().map(|r| r.trajectory.demonstration_count()).sum();
        let ci = wilson(s, n, Z95);
        rows.push(ThresholdRow {
            threshold: th.map_or("none".into(), |t| t.to_string()),
            episodes: n,
            successes: s,
            success_rate: s as f64 / n as f64,
            ci_low: ci.low,
            ci_high: ci.high,
            score_count: th.map(|t| hist[t as usize]),
            demo_fraction: demos as f64 / steps.max(1) as f64,
            config_hash: hash.clone(),
            seed: cfg.seed,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------- refinement study

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RefineRow {
    pub original_score: u8,
    pub count: usize,
    pub mean_delta: Option<f64>,
    /// `delta:count` pairs separated by `;`.
    pub distribution: String,
    pub config_hash: String,
    pub seed: u64,
}

/// Steps of vanilla runs whose critic score is below `below`, at most `cap`
/// per score, in (task, episode, step) order.
pub fn harvest_steps(
    tasks: &[Task],
    params: &PolicyParams,
    agents: &Agents,
    episodes: usize,
    below: u8,
    cap: usize,
    run_seed: u64,
    max_steps: Option<usize>,
) -> Result<Vec<StudyStep<AnyEnv>>, HarnessError> {
    let jobs: Vec<(usize, usize)> = (0..tasks.len()).flat_map(|t| (0..episodes).map(move |s| (t, s))).collect();
    let per_job: Vec<Result<Vec<StudyStep<AnyEnv>>, HarnessError>> = jobs
        .par_iter()
        .map(|&(t, slot)| {
            let task = &tasks[t];
            let seed = slot_seed(run_seed, task.id(), slot);
            let mut env = AnyEnv::new(task, max_steps)?;
            env.reset(derive(&[seed, Stream::Environment as u64]))?;
            let mut prng = rng_for(seed, Stream::Policy);
            let empty = Trajectory::new(task.id(), crate::trajectory::RolloutMode::Vanilla, seed);
            let mut out = Vec::new();
            while !env.is_done() {
                let candidates = env.candidates();
                let features = FeatureMatrix::build(&env, &candidates);
                let (i, _) = sample(params, &features, &mut prng)?;
                let action = candidates[i].clone();
                let before = env.clone();
                let step = env.step(&action)?;
                let obs = agents.config.reversible_env.then_some(step.observation.as_str());
                let c = evaluate(
                    agents.critic.as_ref(),
                    &agents.config,
                    &CritiqueRequest {
                        env_before: &before,
                        trajectory: &empty,
                        action: &action,
                        next_observation: obs,
                    },
                )?;
                if c.record.score < below {
                    out.push(StudyStep {
                        policy_probs: Some(action_distribution(params, &features)?),
                        env: before,
                        action,
                        score: c.record.score,
                    });
                }
            }
            Ok(out)
        })
        .collect();
    let mut taken: BTreeMap<u8, usize> = BTreeMap::new();
    let mut steps = Vec::new();
    for job in per_job {
        for s in job? {
            let n = taken.entry(s.score).or_insert(0);
            if *n < cap {
                *n += 1;
                steps.push(s);
            }
        }
    }
    Ok(steps)
}

pub fn refine_study(cfg: &ExperimentConfig) -> Result<Vec<RefineRow>, HarnessError> {
    let hash = cfg.hash();
    let tasks = task_pool(cfg)?;
    let params = cfg.policy_params()?;
    let agents = Agents::from_config(cfg)?;
    let steps = harvest_steps(
        &tasks,
        &params,
        &agents,
        cfg.refine.episodes_per_task,
        cfg.refine.harvest_below.min(10),
        cfg.refine.per_score_cap,
        derive(&[cfg.seed, 5]),
        cfg.env.max_steps,
    )?;
    let mut rng = rng_for(derive(&[cfg.seed, 6]), Stream::Refiner);
    let hist = refinement_delta_study(&steps, agents.critic.as_ref(), agents.refiner.as_ref(), &agents.config, &mut rng)?;
    Ok(hist
        .buckets
        .into_iter()
        .map(|(score, b)| RefineRow {
            original_score: score,
            count: b.count,
            mean_delta: b.mean_delta,
            distribution: b
                .distribution
                .iter()
                .map(|(d, c)| format!("{d}:{c}"))
                .collect::<Vec<_>>()
                .join(";"),
            config_hash: hash.clone(),
            seed: cfg.seed,
        })
        .collect())
}

// ---------------------------------------------------------------- training comparison

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRow {
    pub method: String,
    pub iteration: usize,
    pub success_rate: f64,
    pub mean_reward: f64,
    pub mean_advantage_abs: f64,
    pub demo_fraction: f64,
    pub masked_fraction: f64,
    pub cost_ratio: f64,
    pub objective: f64,
    pub grad_norm: f64,
    pub config_hash: String,
    pub seed: u64,
}

impl MetricsRow {
    fn new(method: Method, m: IterationMetrics, config_hash: &str, seed: u64) -> Self {
        Self {
            method: method.name().into(),
            iteration: m.iteration,
            success_rate: m.success_rate,
            mean_reward: m.mean_reward,
            mean_advantage_abs: m.mean_advantage_abs,
            demo_fraction: m.demo_fraction,
            masked_fraction: m.masked_fraction,
            cost_ratio: m.cost_ratio,
            objective: m.objective,
            grad_norm: m.grad_norm,
            config_hash: config_hash.into(),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrainRow {
    pub method: String,
    pub seed: u64,
    pub held_out_episodes: usize,
    pub held_out_successes: usize,
    pub held_out_success: f64,
    /// Method this row is paired against, if any.
    pub paired_with: Option<String>,
    pub paired_difference: Option<f64>,
    pub config_hash: String,
}

#[derive(Debug, Clone)]
pub struct TrainReport {
    pub rows: Vec<TrainRow>,
    pub metrics: Vec<MetricsRow>,
    pub finals: Vec<(Method, u64, PolicyParams)>,
}

pub fn run_method(
    method: Method,
    tasks: &[Task],
    init: &PolicyParams,
    agents: &Agents,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<TrainOutcome, HarnessError> {
    let mut tc = cfg.train_config(seed);
    let guide = agents.guide();
    Ok(match method {
        Method::Dapo => {
            tc.rollout.proceed_fraction = 0.0;
            train(tasks, init, guide, &tc)?
        }
        Method::ProceedRl => train(tasks, init, guide, &tc)?,
        Method::Rft => train_sft(tasks, init, SftSource::Rejection, guide, &tc)?,
        Method::Sft => train_sft(tasks, init, SftSource::Vanilla, guide, &tc)?,
        Method::ProceedSft => train_sft(tasks, init, SftSource::Proceed, guide, &tc)?,
    })
}

fn paired_baseline(m: Method) -> Option<Method> {
    match m {
        Method::ProceedRl => Some(Method::Dapo),
        Method::ProceedSft => Some(Method::Sft),
        _ => None,
    }
}

/// Trains every configured method from the same initial policy for every
/// seed and scores each result on held-out tasks.
pub fn train_compare(cfg: &ExperimentConfig) -> Result<TrainReport, HarnessError> {
    let hash = cfg.hash();
    let tasks = task_pool(cfg)?;
    let held_out = held_out_pool(cfg)?;
    let init = cfg.policy_params()?;
    let agents = Agents::from_config(cfg)?;
    let mut rows = Vec::new();
    let mut metrics = Vec::new();
    let mut finals = Vec::new();
    let mut scores: BTreeMap<(u64, &'static str), f64> = BTreeMap::new();
    for &seed in &cfg.train.seeds {
        for &method in &cfg.train.methods {
            let out = run_method(method, &tasks, &init, &agents, cfg, seed)?;
            let (s, n) = evaluate_policy(
                &out.params,
                &held_out,
                cfg.train.eval_episodes,
                derive(&[seed, EVAL]),
                cfg.env.max_steps,
            )?;
            let rate = s as f64 / n as f64;
            scores.insert((seed, method.name()), rate);
            metrics.extend(out.metrics.into_iter().map(|m| MetricsRow::new(method, m, &hash, seed)));
            rows.push(TrainRow {
                method: method.name().into(),
                seed,
                held_out_episodes: n,
                held_out_successes: s,
                held_out_success: rate,
                paired_with: None,
                paired_difference: None,
                config_hash: hash.clone(),
            });
            finals.push((method, seed, out.params));
        }
    }
    for row in &mut rows {
        let method: Method = row.method.parse().expect("method names round-trip");
        if let Some(base) = paired_baseline(method) {
            if let Some(b) = scores.get(&(row.seed, base.name())) {
                row.paired_with = Some(base.name().into());
                row.paired_difference = Some(row.held_out_success - b);
            }
        }
    }
    Ok(TrainReport { rows, metrics, finals })
}

// ---------------------------------------------------------------- cost report

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CostRow {
    pub source: String,
    pub mean_policy_units: f64,
    pub mean_critic_units: f64,
    pub cost_ratio: f64,
}

pub fn cost_report<'a>(source: &str, trajectories: impl IntoIterator<Item = &'a Trajectory>) -> Result<CostRow, HarnessError> {
    let (mut steps, mut policy, mut critic) = (0u64, 0u64, 0u64);
    for t in trajectories {
        for s in &t.steps {
            steps += 1;
            policy += s.policy_units;
            critic += s.critic_units;
        }
    }
    let n = steps.max(1) as f64;
    let (mp, mc) = (policy as f64 / n, critic as f64 / n);
    Ok(CostRow {
        source: source.into(),
        mean_policy_units: mp,
        mean_critic_units: mc,
        cost_ratio: crate::rollout::cost_ratio_from_means(mp, mc)?,
    })
}

/// Builds a rollout config with every slot critic-guided.
pub fn proceed_only(cfg: &ExperimentConfig) -> RolloutConfig {
    RolloutConfig {
        proceed_fraction: 1.0,
        ..cfg.rollout_config()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trajectory::RolloutMode;

    fn traj(success: bool) -> Trajectory {
        let mut t = Trajectory::new("t", RolloutMode::Vanilla, 0);
        t.finalize(success).unwrap();
        t
    }

    #[test]
    fn pass_at_k_first_k() {
        // task 0 solved at slot 2, task 1 never
        let runs = vec![traj(false), traj(false), traj(true), traj(false), traj(false), traj(false)];
        assert_eq!(pass_at_k_curve(&runs, 3), vec![0.0, 0.0, 0.5]);
    }
}
