mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use proceed::env::EnvKind;
use proceed::harness::config::ExperimentConfig;
use proceed::harness::experiments::{csv_string, noise_study, passk, refine_study, threshold_ablation};
use proceed::trajectory::{parse_jsonl, read_jsonl, serialize_jsonl, write_jsonl, TrajectoryError};

fn small(kind: EnvKind) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.env.kind = kind;
    c.env.tasks = 20;
    c.noise.episodes = 40;
    c.passk.vanilla_k = 4;
    c.passk.proceed_k = 2;
    c.threshold.thresholds = vec![0, 3, 10];
    c
}

#[test]
fn jsonl_round_trip_on_random_buffers() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..1000 {
        let buffer = common::random_rollout_buffer(&mut rng);
        let mut bytes = Vec::new();
        write_jsonl(&buffer, &mut bytes).unwrap();
        let back = read_jsonl(bytes.as_slice()).unwrap();
        assert_eq!(back.groups, buffer.groups);
        assert_eq!(serialize_jsonl(&back).unwrap(), bytes);
    }
}

#[test]
fn jsonl_rejects_damaged_input() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let mut buffer = common::random_rollout_buffer(&mut rng);
    while buffer.groups.is_empty() {
        buffer = common::random_rollout_buffer(&mut rng);
    }
    let bytes = serialize_jsonl(&buffer).unwrap();
    let first_line = bytes.iter().position(|&b| b == b'\n').unwrap();
    let cut = &bytes[..first_line / 2];
    assert!(matches!(parse_jsonl(cut), Err(TrajectoryError::MalformedRecord { line: 1, .. })));
}

#[test]
fn same_seed_reruns_give_identical_csv() {
    let search = small(EnvKind::Search);
    let corridor = small(EnvKind::Corridor);
    let runs = || {
        vec![
            csv_string(&noise_study(&search).unwrap().rows).unwrap(),
            csv_string(&noise_study(&search).unwrap().drops).unwrap(),
            csv_string(&passk(&search).unwrap()).unwrap(),
            csv_string(&threshold_ablation(&search).unwrap()).unwrap(),
            csv_string(&refine_study(&corridor).unwrap()).unwrap(),
        ]
    };
    assert_eq!(runs(), runs());
    let mut other = search.clone();
    other.seed = 1;
    assert_ne!(
        csv_string(&passk(&search).unwrap()).unwrap(),
        csv_string(&passk(&other).unwrap()).unwrap()
    );
}
