use std::process::Command;

fn proceed(dir: &std::path::Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_proceed"))
        .args(args)
        .arg("--out-dir")
        .arg(dir)
        .env_remove("PROCEED_API_KEY")
        .output()
        .unwrap()
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = proceed(dir.path(), &["noise-study", "--config", "/nonexistent/config.toml"]);
    assert_eq!(out.status.code(), Some(2));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[env]\nnoise = 3.0\n").unwrap();
    let out = proceed(dir.path(), &["noise-study", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let unknown = dir.path().join("unknown.toml");
    std::fs::write(&unknown, "[env]\nbogus = 1\n").unwrap();
    let out = proceed(dir.path(), &["noise-study", "--config", unknown.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    // a model-backed critic without an [llm] section
    let out = proceed(dir.path(), &["passk", "--critic", "external", "--tasks", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unreachable_backend_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("llm.toml");
    std::fs::write(
        &cfg,
        "[critic]\nkind = \"external\"\n[llm]\nendpoint_url = \"http://127.0.0.1:9/v1/chat/completions\"\nmax_retries = 0\nbackoff_base_ms = 1\ntimeout_secs = 2\n",
    )
    .unwrap();
    let out = proceed(dir.path(), &["rollout", "--config", cfg.to_str().unwrap(), "--tasks", "1", "--group-size", "1", "--mode", "proceed"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn gen_tasks_rollout_and_cost_report() {
    let dir = tempfile::tempdir().unwrap();
    let tasks = dir.path().join("tasks.json");
    let out = proceed(dir.path(), &["gen-tasks", "--env", "corridor", "--tasks", "3", "--out", tasks.to_str().unwrap()]);
    assert!(out.status.success());
    let rollouts = dir.path().join("r.jsonl");
    let out = proceed(
        dir.path(),
        &["rollout", "--env", "corridor", "--task-file", tasks.to_str().unwrap(), "--group-size", "4", "--out", rollouts.to_str().unwrap()],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(std::fs::read_to_string(&rollouts).unwrap().lines().count(), 12);
    let out = proceed(dir.path(), &["cost-report", "--input", rollouts.to_str().unwrap()]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(dir.path().join("cost.csv")).unwrap();
    assert!(csv.starts_with("source,mean_policy_units,mean_critic_units,cost_ratio\n"));

    let out = proceed(dir.path(), &["cost-report", "--policy-mean", "857.36", "--critic-mean", "1320.59"]);
    assert!(String::from_utf8_lossy(&out.stdout).contains("cost ratio 2.54"));
}
