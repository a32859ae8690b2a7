//! One vanilla and one critic-guided rollout on the same search task, printed
//! step by step.

use std::error::Error;

use proceed::env::{generate_tasks, AnyEnv, EnvKind};
use proceed::harness::config::ExperimentConfig;
use proceed::harness::experiments::Agents;
use proceed::policy::SoftmaxPolicy;
use proceed::rollout::{proceed_rollout, vanilla_rollout};
use proceed::trajectory::Trajectory;

fn show(label: &str, t: &Trajectory) {
    println!("== {label}: reward {} after {} steps", t.reward, t.steps.len());
    for s in &t.steps {
        let score = s.critic_score.map_or("-".to_string(), |x| x.to_string());
        println!("  [{:?} score={score}] {}", s.tag, s.action);
    }
}

fn main() -> Result<(), Box<dyn Error>> {
    let mut cfg = ExperimentConfig::default();
    cfg.env.kind = EnvKind::Search;
    cfg.env.noise = 0.5;
    let task = generate_tasks(EnvKind::Search, 1, &cfg.env.difficulty(), 3)?.remove(0);
    let policy = SoftmaxPolicy::new(cfg.policy_params()?);
    let agents = Agents::from_config(&cfg)?;

    let mut env = AnyEnv::new(&task, None)?;
    show("vanilla", &vanilla_rollout(&policy, &mut env, task.id(), 11)?.trajectory);
    let mut env = AnyEnv::new(&task, None)?;
    show("proceed", &proceed_rollout(&policy, agents.guide(), &mut env, task.id(), 11, false)?.trajectory);
    Ok(())
}
