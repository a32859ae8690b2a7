//! Rewind semantics checked against a replay oracle: a fresh environment
//! that is reset with the episode seed and fed only the committed actions.

use proceed::critic::{CriticConfig, OracleCritic, OracleRefiner};
use proceed::env::{generate_tasks, AnyEnv, Difficulty, EnvKind, EnvView, Environment, Task};
use proceed::policy::{PolicyParams, SoftmaxPolicy};
use proceed::rollout::{proceed_rollout, vanilla_rollout, Guide};
use proceed::seeding::{derive, slot_seed, Stream};
use proceed::trajectory::{StepTag, Trajectory};

fn tasks(kind: EnvKind, n: usize) -> Vec<Task> {
    generate_tasks(kind, n, &Difficulty::default(), 5).unwrap()
}

fn uniform(dim: usize, id: &str) -> SoftmaxPolicy {
    SoftmaxPolicy::new(PolicyParams::new(vec![0.0; dim], 1.0, id).unwrap())
}

/// Replays the committed actions and returns (steps checked, demo steps checked).
fn replay(task: &Task, t: &Trajectory) -> (usize, usize) {
    let mut env = AnyEnv::new(task, None).unwrap();
    env.reset(derive(&[t.seed, Stream::Environment as u64])).unwrap();
    let mut demos = 0;
    for s in &t.steps {
        let out = env.step(&s.action).unwrap();
        assert_eq!(Some(&out.observation), s.observation.as_ref(), "{} step {}", t.task_id, s.index);
        demos += usize::from(s.tag == StepTag::Demonstration);
    }
    assert_eq!(env.is_done(), t.done);
    (t.steps.len(), demos)
}

#[test]
fn disabled_rewinding_degenerates_to_vanilla() {
    let config = CriticConfig {
        threshold: None,
        ..CriticConfig::default()
    };
    let refiner = OracleRefiner::new(0.8);
    let guide = Guide {
        critic: &OracleCritic,
        refiner: &refiner,
        config: &config,
    };
    for kind in [EnvKind::Search, EnvKind::Corridor] {
        let policy = uniform(6, if kind == EnvKind::Search { "search-v1" } else { "corridor-v1" });
        for task in tasks(kind, 10) {
            for slot in 0..3 {
                let seed = slot_seed(9, task.id(), slot);
                let mut a = AnyEnv::new(&task, None).unwrap();
                let mut b = a.clone();
                let v = vanilla_rollout(&policy, &mut a, task.id(), seed).unwrap();
                let p = proceed_rollout(&policy, guide, &mut b, task.id(), seed, false).unwrap();
                assert_eq!(
                    serde_json::to_vec(&v.trajectory).unwrap(),
                    serde_json::to_vec(&p.trajectory.interaction_view()).unwrap()
                );
                assert_eq!(v.trace, p.trace);
            }
        }
    }
}

#[test]
fn post_demonstration_observations_match_replay() {
    let config = CriticConfig {
        threshold: Some(5),
        ..CriticConfig::default()
    };
    let refiner = OracleRefiner::new(0.8);
    let guide = Guide {
        critic: &OracleCritic,
        refiner: &refiner,
        config: &config,
    };
    let (mut steps, mut demos) = (0, 0);
    for kind in [EnvKind::Search, EnvKind::Corridor] {
        let policy = uniform(6, "x");
        for task in tasks(kind, 80) {
            let mut env = AnyEnv::new(&task, None).unwrap();
            let t = proceed_rollout(&policy, guide, &mut env, task.id(), slot_seed(3, task.id(), 0), false)
                .unwrap()
                .trajectory;
            let (s, d) = replay(&task, &t);
            steps += s;
            demos += d;
        }
    }
    assert!(steps >= 1000, "only {steps} steps");
    assert!(demos > 50, "only {demos} demonstrations");
}

#[test]
fn nested_snapshots_restore_in_any_order() {
    for task in tasks(EnvKind::Search, 5).into_iter().chain(tasks(EnvKind::Corridor, 5)) {
        let mut env = AnyEnv::new(&task, None).unwrap();
        env.reset(1).unwrap();
        let s0 = env.snapshot();
        let c = env.candidates();
        env.step(&c[0]).unwrap();
        let s1 = env.snapshot();
        let text1 = env.state_text();
        let c1 = env.candidates();
        env.step(c1.last().unwrap()).unwrap();
        let text2 = env.state_text();
        let s2 = env.snapshot();

        env.restore(&s1);
        assert_eq!(env.state_text(), text1);
        env.restore(&s0);
        assert_eq!(env.steps_taken(), 0);
        env.restore(&s2);
        assert_eq!(env.state_text(), text2);
        env.restore(&s1);
        let again = env.step(c1.last().unwrap()).unwrap();
        env.restore(&s1);
        let once_more = env.step(c1.last().unwrap()).unwrap();
        assert_eq!(again, once_more);
    }
}

#[test]
fn rejected_probe_leaves_no_trace() {
    // snapshot, step(a1), restore, step(a2) must equal a direct step(a2)
    for task in tasks(EnvKind::Search, 10) {
        let mut env = AnyEnv::new(&task, None).unwrap();
        env.reset(4).unwrap();
        let c = env.candidates();
        if c.len() < 2 {
            continue;
        }
        let mut direct = env.clone();
        let want = direct.step(&c[1]).unwrap();
        let snap = env.snapshot();
        env.step(&c[0]).unwrap();
        env.restore(&snap);
        assert_eq!(env.step(&c[1]).unwrap(), want);
        assert_eq!(env.rng_stream_position(), direct.rng_stream_position());
    }
}
