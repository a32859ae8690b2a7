//! Success of a strong and a weakened policy at two observation-noise levels.
//! Pass an episode count to override the default.

use std::error::Error;

use proceed::harness::config::ExperimentConfig;
use proceed::harness::experiments::noise_study;

fn main() -> Result<(), Box<dyn Error>> {
    let mut cfg = ExperimentConfig::default();
    if let Some(n) = std::env::args().nth(1) {
        cfg.noise.episodes = n.parse()?;
    }
    let report = noise_study(&cfg)?;
    for r in &report.rows {
        println!("{:6} nu={:.1} success {:.3} [{:.3}, {:.3}]", r.policy, r.nu, r.success_rate, r.ci_low, r.ci_high);
    }
    for d in &report.drops {
        println!("{:6} drop {:.3} [{:.3}, {:.3}]", d.policy, d.drop, d.drop_ci_low, d.drop_ci_high);
    }
    Ok(())
}
