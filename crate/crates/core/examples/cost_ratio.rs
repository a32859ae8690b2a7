//! Per-step cost ratio of critic-guided rollouts, from collected trajectories
//! and from reported means.

use std::error::Error;

use proceed::harness::config::ExperimentConfig;
use proceed::harness::experiments::{cost_report, proceed_only, Agents};
use proceed::policy::SoftmaxPolicy;
use proceed::rollout::{collect_batch, cost_ratio_from_means};

fn main() -> Result<(), Box<dyn Error>> {
    let mut cfg = ExperimentConfig::default();
    cfg.env.tasks = 20;
    let tasks = proceed::harness::experiments::task_pool(&cfg)?;
    let policy = SoftmaxPolicy::new(cfg.policy_params()?);
    let agents = Agents::from_config(&cfg)?;
    let groups = collect_batch(&tasks, &policy, agents.guide(), &proceed_only(&cfg), 1)?;
    let row = cost_report("oracle", groups.iter().flat_map(|g| g.group.trajectories.iter()))?;
    println!(
        "collected: policy {:.1} units/step, critic {:.1} units/step, ratio {:.2}",
        row.mean_policy_units, row.mean_critic_units, row.cost_ratio
    );
    println!("from means 857.36 / 1320.59: {:.2}", cost_ratio_from_means(857.36, 1320.59)?);
    Ok(())
}
