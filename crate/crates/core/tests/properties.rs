mod common;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use proceed::critic::{should_rewind, CriticConfig, CritiqueRecord};
use proceed::harness::experiments::pass_at_k_curve;
use proceed::harness::stats::{wilson, Z95};
use proceed::llm::{parse_action_tag, parse_critic_response};
use proceed::optimizer::{clipped_term, group_advantage, sigma, OptimConfig};
use proceed::policy::{action_distribution, FeatureMatrix, PolicyParams};
use proceed::rollout::cost_ratio_from_means;
use proceed::trajectory::{parse_jsonl, serialize_jsonl, RolloutMode, Trajectory};

fn record(score: u8) -> CritiqueRecord {
    CritiqueRecord {
        score,
        critique: String::new(),
        suggestion_action: None,
        suggestion_reasoning: None,
    }
}

proptest! {
    #[test]
    fn advantages_are_standardized(rewards in prop::collection::vec(prop::bool::ANY, 2..16)) {
        let r: Vec<f64> = rewards.iter().map(|&b| f64::from(u8::from(b))).collect();
        match group_advantage(&r, true) {
            None => prop_assert!(r.iter().all(|&x| x == r[0])),
            Some(a) => {
                let n = a.len() as f64;
                let mean = a.iter().sum::<f64>() / n;
                let var = a.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
                prop_assert!(mean.abs() < 1e-12);
                prop_assert!((var - 1.0).abs() < 1e-12);
                // order preserving
                for i in 0..a.len() {
                    for j in 0..a.len() {
                        if r[i] > r[j] {
                            prop_assert!(a[i] > a[j]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn sigma_is_bounded_and_symmetric(p in 0.0f64..=1.0) {
        let s = sigma(p).unwrap();
        prop_assert!((0.0..=0.25).contains(&s));
        prop_assert!((s - sigma(1.0 - p).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn sigma_rejects_outside_unit_interval(p in prop_oneof![-10.0f64..-1e-9, 1.0f64 + 1e-9..10.0]) {
        prop_assert!(sigma(p).is_err());
    }

    #[test]
    fn clipped_term_never_exceeds_unclipped(ratio in 1e-3f64..5.0, adv in -3.0f64..3.0) {
        let c = OptimConfig::default();
        let t = clipped_term(ratio, adv, &c);
        prop_assert!(t <= ratio * adv + 1e-12);
        let clipped = ratio.clamp(1.0 - c.eps_low, 1.0 + c.eps_high) * adv;
        prop_assert!((t - (ratio * adv).min(clipped)).abs() < 1e-12);
    }

    #[test]
    fn rewind_threshold_is_inclusive(score in 0u8..=10, threshold in 0u8..=10) {
        let config = CriticConfig { threshold: Some(threshold), ..CriticConfig::default() };
        prop_assert_eq!(should_rewind(&record(score), &config), score <= threshold);
        let off = CriticConfig { threshold: None, ..CriticConfig::default() };
        prop_assert!(!should_rewind(&record(score), &off));
    }

    #[test]
    fn action_distribution_is_a_distribution(
        theta in prop::collection::vec(-5.0f64..5.0, 3),
        rows in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 3), 1..8),
        temperature in 0.1f64..3.0,
    ) {
        let params = PolicyParams::new(theta, temperature, "p").unwrap();
        let p = action_distribution(&params, &FeatureMatrix::from_rows(&rows)).unwrap();
        prop_assert_eq!(p.len(), rows.len());
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn critic_parser_is_total(s in ".*") {
        if let Ok(r) = parse_critic_response(&s) {
            prop_assert!(r.score <= 10);
        }
        let _ = parse_action_tag(&s);
    }

    #[test]
    fn pass_at_k_is_monotone(outcomes in prop::collection::vec(prop::bool::ANY, 1..64), per in 1usize..8) {
        let runs: Vec<Trajectory> = outcomes
            .iter()
            .take(outcomes.len() / per * per)
            .map(|&ok| {
                let mut t = Trajectory::new("t", RolloutMode::Vanilla, 0);
                t.finalize(ok).unwrap();
                t
            })
            .collect();
        prop_assume!(!runs.is_empty());
        let curve = pass_at_k_curve(&runs, per);
        prop_assert!(curve.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(curve.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn cost_ratio_is_at_least_one(policy in 1e-3f64..1e4, critic in 0.0f64..1e4) {
        let r = cost_ratio_from_means(policy, critic).unwrap();
        prop_assert!(r >= 1.0);
        prop_assert!((r - (1.0 + critic / policy)).abs() < 1e-12);
    }

    #[test]
    fn wilson_interval_contains_the_estimate(n in 1usize..2000, frac in 0.0f64..=1.0) {
        let s = ((n as f64) * frac).floor() as usize;
        let w = wilson(s, n, Z95);
        let p = s as f64 / n as f64;
        prop_assert!(w.low <= p + 1e-12 && p <= w.high + 1e-12);
        prop_assert!(0.0 <= w.low && w.high <= 1.0);
    }

    #[test]
    fn jsonl_round_trip(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let buffer = common::random_rollout_buffer(&mut rng);
        let bytes = serialize_jsonl(&buffer).unwrap();
        let back = parse_jsonl(&bytes).unwrap();
        prop_assert_eq!(&back.groups, &buffer.groups);
        if !buffer.groups.is_empty() {
            prop_assert_eq!(&back.policy_snapshot_id, &buffer.policy_snapshot_id);
        }
        prop_assert_eq!(serialize_jsonl(&back).unwrap(), bytes);
    }
}
