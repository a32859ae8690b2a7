//! Short training comparison on the corridor environment. The full run uses
//! 200 iterations and three seeds; this one is sized to finish quickly.

use std::error::Error;

use proceed::env::EnvKind;
use proceed::harness::config::{ExperimentConfig, Method};
use proceed::harness::experiments::train_compare;

fn main() -> Result<(), Box<dyn Error>> {
    let mut cfg = ExperimentConfig::default();
    cfg.env.kind = EnvKind::Corridor;
    cfg.train.iterations = 30;
    cfg.train.seeds = vec![0];
    cfg.train.methods = vec![Method::Dapo, Method::ProceedRl];
    let report = train_compare(&cfg)?;
    for m in report.metrics.iter().filter(|m| m.iteration % 10 == 0) {
        println!("{:10} iter {:3} train success {:.3} demo fraction {:.3}", m.method, m.iteration, m.success_rate, m.demo_fraction);
    }
    for r in &report.rows {
        println!("{:10} seed {} held-out success {:.3}", r.method, r.seed, r.held_out_success);
    }
    Ok(())
}
