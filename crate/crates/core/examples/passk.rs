//! Pass@k of repeated vanilla sampling against critic-guided sampling on noisy
//! search tasks.

use std::error::Error;

use proceed::harness::config::ExperimentConfig;
use proceed::harness::experiments::passk;

fn main() -> Result<(), Box<dyn Error>> {
    let mut cfg = ExperimentConfig::default();
    cfg.env.noise = 0.5;
    cfg.env.tasks = 100;
    cfg.policy.temperature = 2.0;
    for r in passk(&cfg)? {
        if r.k.is_power_of_two() {
            println!("{:8} k={:2} pass@k {:.3} (cost-aligned samples {:.1})", r.mode, r.k, r.pass_at_k, r.cost_aligned_samples);
        }
    }
    Ok(())
}
