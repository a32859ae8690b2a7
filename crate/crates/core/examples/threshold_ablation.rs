//! Success rate as a function of the rewind threshold.

use std::error::Error;

use proceed::harness::config::ExperimentConfig;
use proceed::harness::experiments::threshold_ablation;

fn main() -> Result<(), Box<dyn Error>> {
    let mut cfg = ExperimentConfig::default();
    cfg.env.noise = 0.5;
    cfg.env.tasks = 100;
    cfg.policy.temperature = 2.0;
    for r in threshold_ablation(&cfg)? {
        println!(
            "threshold {:>4}: success {:.3} [{:.3}, {:.3}], demonstration fraction {:.3}",
            r.threshold, r.success_rate, r.ci_low, r.ci_high, r.demo_fraction
        );
    }
    Ok(())
}
