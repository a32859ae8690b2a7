//! Collects a mixed group on the corridor environment and reports how many
//! actions the critic replaced.

use std::error::Error;

use proceed::env::{generate_tasks, EnvKind};
use proceed::harness::config::ExperimentConfig;
use proceed::harness::experiments::Agents;
use proceed::policy::SoftmaxPolicy;
use proceed::rollout::collect_group;
use proceed::trajectory::group_reward_stats;

fn main() -> Result<(), Box<dyn Error>> {
    let mut cfg = ExperimentConfig::default();
    cfg.env.kind = EnvKind::Corridor;
    let tasks = generate_tasks(EnvKind::Corridor, 4, &cfg.env.difficulty(), 5)?;
    let policy = SoftmaxPolicy::new(cfg.policy_params()?);
    let agents = Agents::from_config(&cfg)?;
    let rollout = cfg.rollout_config();

    for task in &tasks {
        let g = collect_group(task, &policy, agents.guide(), &rollout, 9)?;
        let stats = group_reward_stats(&g.group)?;
        println!("{}: mean reward {:.2}, degenerate={}", task.id(), stats.mean, stats.degenerate);
        for t in &g.group.trajectories {
            println!(
                "  {:?} reward={} steps={} demonstrations={}",
                t.mode,
                t.reward,
                t.steps.len(),
                t.demonstration_count()
            );
        }
    }
    Ok(())
}
