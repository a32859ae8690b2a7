//! Random fixtures shared by the integration tests.
#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use proceed::optimizer::OptimConfig;
use proceed::policy::{action_distribution, FeatureMatrix, PolicyParams};
use proceed::rollout::{StepTrace, TracedGroup};
use proceed::trajectory::{Group, RolloutBuffer, RolloutMode, StepRecord, StepTag, Trajectory};

pub const DIM: usize = 4;

fn random_text(rng: &mut ChaCha8Rng, max: usize) -> String {
    const ALPHABET: &[char] = &['a', 'b', 'z', ' ', '"', '\\', '\n', '{', '}', 'é', '→', '0', '9', '\t'];
    let n = rng.gen_range(0..=max);
    (0..n).map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())]).collect()
}

pub fn random_step(rng: &mut ChaCha8Rng, index: usize, mode: RolloutMode) -> StepRecord {
    let mut s = StepRecord::new(index, random_text(rng, 30), random_text(rng, 12));
    s.observation = rng.gen_bool(0.9).then(|| random_text(rng, 40));
    if mode == RolloutMode::Proceed {
        s.critic_score = Some(rng.gen_range(0..=10));
        s.critique = Some(random_text(rng, 20));
        if rng.gen_bool(0.3) {
            s.tag = StepTag::Demonstration;
        }
        s.critic_units = rng.gen_range(0..500);
    }
    s.behavior_logprob = rng.gen_bool(0.8).then(|| -rng.gen_range(0.0..20.0f64));
    s.policy_units = rng.gen_range(1..500);
    s
}

pub fn random_trajectory(rng: &mut ChaCha8Rng, task_id: &str, mode: RolloutMode, max_steps: usize) -> Trajectory {
    let mut t = Trajectory::new(task_id, mode, rng.gen());
    for i in 0..rng.gen_range(0..=max_steps) {
        t.append_step(random_step(rng, i, mode)).unwrap();
    }
    t.finalize(rng.gen_bool(0.5)).unwrap();
    t
}

pub fn random_rollout_buffer(rng: &mut ChaCha8Rng) -> RolloutBuffer {
    let groups = (0..rng.gen_range(0..4))
        .map(|g| {
            let id = format!("task-{g}-{}", random_text(rng, 5));
            let trajs = (0..rng.gen_range(1..5))
                .map(|_| {
                    let mode = if rng.gen_bool(0.5) { RolloutMode::Proceed } else { RolloutMode::Vanilla };
                    random_trajectory(rng, &id, mode, 6)
                })
                .collect();
            Group::new(id, trajs).unwrap()
        })
        .collect();
    RolloutBuffer {
        groups,
        policy_snapshot_id: random_text(rng, 8),
    }
}

fn random_features(rng: &mut ChaCha8Rng) -> FeatureMatrix {
    let n = rng.gen_range(2..6);
    FeatureMatrix::new(DIM, (0..n * DIM).map(|_| rng.gen_range(-1.0..1.0)).collect())
}

/// A group with matching traces; rewards are forced to differ when
/// `mixed` is set.
pub fn random_traced_group(rng: &mut ChaCha8Rng, name: &str, size: usize, mixed: bool) -> TracedGroup {
    let mut trajectories = Vec::new();
    let mut traces = Vec::new();
    for i in 0..size {
        let mode = if i < size / 2 { RolloutMode::Proceed } else { RolloutMode::Vanilla };
        let mut t = Trajectory::new(name, mode, i as u64);
        let mut trace = Vec::new();
        for k in 0..rng.gen_range(1..5) {
            let features = random_features(rng);
            let chosen = rng.gen_range(0..features.len());
            let mut s = StepRecord::new(k, "s", format!("a{chosen}"));
            if mode == RolloutMode::Proceed {
                s.critic_score = Some(rng.gen_range(0..=10));
                if rng.gen_bool(0.4) {
                    s.tag = StepTag::Demonstration;
                }
            }
            t.append_step(s).unwrap();
            trace.push(StepTrace { features, chosen });
        }
        let success = if mixed { i % 2 == 0 } else { rng.gen_bool(0.5) };
        t.finalize(success).unwrap();
        trajectories.push(t);
        traces.push(trace);
    }
    TracedGroup {
        group: Group::new(name, trajectories).unwrap(),
        traces,
    }
}

pub fn random_params(rng: &mut ChaCha8Rng, scale: f64) -> PolicyParams {
    let theta = (0..DIM).map(|_| rng.gen_range(-scale..scale)).collect();
    PolicyParams::new(theta, rng.gen_range(0.6..1.4), "test").unwrap()
}

pub fn perturbed(params: &PolicyParams, rng: &mut ChaCha8Rng, scale: f64) -> PolicyParams {
    let mut p = params.clone();
    for t in &mut p.theta {
        *t += rng.gen_range(-scale..scale);
    }
    p
}

/// Smallest distance of any executed-action ratio from a clip boundary.
pub fn clip_margin(buffer: &[TracedGroup], params: &PolicyParams, old: &PolicyParams, config: &OptimConfig) -> f64 {
    let mut margin = f64::INFINITY;
    for g in buffer {
        for trace in &g.traces {
            for st in trace {
                let p = action_distribution(params, &st.features).unwrap()[st.chosen];
                let q = action_distribution(old, &st.features).unwrap()[st.chosen];
                let r = p / q;
                margin = margin
                    .min((r - (1.0 - config.eps_low)).abs())
                    .min((r - (1.0 + config.eps_high)).abs());
            }
        }
    }
    margin
}

/// Relative error of the analytic surrogate gradient against central finite
/// differences with step `h`.
pub fn gradient_relative_error(
    buffer: &[TracedGroup],
    params: &PolicyParams,
    old: &PolicyParams,
    reference: &PolicyParams,
    config: &OptimConfig,
    h: f64,
) -> f64 {
    use proceed::optimizer::surrogate_and_gradient;
    let analytic = surrogate_and_gradient(buffer, params, old, reference, config).unwrap().gradient;
    let mut num = 0.0;
    let mut den = 0.0;
    for j in 0..params.dim() {
        let mut up = params.clone();
        up.theta[j] += h;
        let mut down = params.clone();
        down.theta[j] -= h;
        let fu = surrogate_and_gradient(buffer, &up, old, reference, config).unwrap().objective;
        let fd = surrogate_and_gradient(buffer, &down, old, reference, config).unwrap().objective;
        let numeric = (fu - fd) / (2.0 * h);
        num += (numeric - analytic[j]).powi(2);
        den += analytic[j].powi(2);
    }
    num.sqrt() / den.sqrt().max(1e-12)
}

/// One random buffer for the gradient check: mixed-reward groups, an old
/// policy near the current one and every ratio well away from the clip
/// boundaries so the selected branch cannot change within ±h.
pub fn gradient_case(rng: &mut ChaCha8Rng, config: &OptimConfig) -> (Vec<TracedGroup>, PolicyParams, PolicyParams, PolicyParams) {
    loop {
        let buffer: Vec<TracedGroup> = (0..3)
            .map(|g| random_traced_group(rng, &format!("g{g}"), 4, true))
            .collect();
        let params = random_params(rng, 1.5);
        let old = perturbed(&params, rng, 0.4);
        let reference = perturbed(&params, rng, 1.0);
        if clip_margin(&buffer, &params, &old, config) > 1e-3 {
            return (buffer, params, old, reference);
        }
    }
}
