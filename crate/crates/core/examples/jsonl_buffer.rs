//! Collects a rollout buffer, writes it as JSONL and reads it back.

use std::error::Error;
use std::fs::File;
use std::io::{BufReader, BufWriter};

use proceed::harness::config::ExperimentConfig;
use proceed::harness::experiments::{task_pool, Agents};
use proceed::policy::SoftmaxPolicy;
use proceed::rollout::collect_batch;
use proceed::trajectory::{read_jsonl, write_jsonl, RolloutBuffer};

fn main() -> Result<(), Box<dyn Error>> {
    let mut cfg = ExperimentConfig::default();
    cfg.env.tasks = 5;
    let params = cfg.policy_params()?;
    let policy = SoftmaxPolicy::new(params.clone());
    let agents = Agents::from_config(&cfg)?;
    let groups = collect_batch(&task_pool(&cfg)?, &policy, agents.guide(), &cfg.rollout_config(), 2)?;
    let buffer = RolloutBuffer {
        groups: groups.into_iter().map(|g| g.group).collect(),
        policy_snapshot_id: params.snapshot_id(),
    };

    let path = std::env::temp_dir().join("proceed-example.jsonl");
    write_jsonl(&buffer, BufWriter::new(File::create(&path)?))?;
    let back = read_jsonl(BufReader::new(File::open(&path)?))?;
    println!(
        "wrote {} trajectories to {}; read back identical: {}",
        buffer.trajectories().count(),
        path.display(),
        back == buffer
    );
    Ok(())
}
