mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use proceed::optimizer::{surrogate_and_gradient, OptimConfig, OptimError};

#[test]
fn analytic_gradient_matches_central_differences() {
    let config = OptimConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in 0..20 {
        let (buffer, params, old, reference) = common::gradient_case(&mut rng, &config);
        let err = common::gradient_relative_error(&buffer, &params, &old, &reference, &config, 1e-5);
        assert!(err <= 1e-4, "case {case}: relative error {err:e}");
    }
}

#[test]
fn gradient_without_kl_term() {
    let config = OptimConfig {
        kl_coeff: 0.0,
        ..OptimConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..5 {
        let (buffer, params, old, reference) = common::gradient_case(&mut rng, &config);
        let err = common::gradient_relative_error(&buffer, &params, &old, &reference, &config, 1e-5);
        assert!(err <= 1e-4, "relative error {err:e}");
    }
}

#[test]
fn degenerate_groups_leave_objective_unchanged() {
    let config = OptimConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let (buffer, params, old, reference) = common::gradient_case(&mut rng, &config);
    let base = surrogate_and_gradient(&buffer, &params, &old, &reference, &config).unwrap();

    let mut padded = buffer.clone();
    let mut flat = common::random_traced_group(&mut rng, "flat", 4, false);
    for t in &mut flat.group.trajectories {
        t.reward = 1.0;
    }
    padded.push(flat.clone());
    let with = surrogate_and_gradient(&padded, &params, &old, &reference, &config).unwrap();
    assert_eq!(base.objective, with.objective);
    assert_eq!(base.gradient, with.gradient);

    assert!(matches!(
        surrogate_and_gradient(&[flat], &params, &old, &reference, &config),
        Err(OptimError::EmptyBufferAfterDrop)
    ));
}

#[test]
fn at_the_old_policy_on_policy_ratio_is_one() {
    // with params == old every ratio is 1 and no step is clipped
    let config = OptimConfig {
        kl_coeff: 0.0,
        ..OptimConfig::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let (buffer, params, _, reference) = common::gradient_case(&mut rng, &config);
    let s = surrogate_and_gradient(&buffer, &params, &params, &reference, &config).unwrap();
    assert_eq!(s.clamped_ratios, 0);
    assert!(s.objective.is_finite());
}
