//! Score change produced by refinement, bucketed by the original score.

use std::error::Error;

use proceed::env::EnvKind;
use proceed::harness::config::ExperimentConfig;
use proceed::harness::experiments::refine_study;

fn main() -> Result<(), Box<dyn Error>> {
    let mut cfg = ExperimentConfig::default();
    cfg.env.kind = EnvKind::Corridor;
    cfg.refine.harvest_below = 10;
    for r in refine_study(&cfg)? {
        let mean = r.mean_delta.map_or("n/a".to_string(), |m| format!("{m:+.2}"));
        println!("score {:2}: {:5} steps, mean delta {mean:>6}  {}", r.original_score, r.count, r.distribution);
    }
    Ok(())
}
