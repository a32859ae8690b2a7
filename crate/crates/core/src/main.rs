use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use proceed::critic::CriticKind;
use proceed::env::{read_tasks, write_tasks, EnvKind, Task};
use proceed::harness::config::{ExperimentConfig, Method};
use proceed::harness::experiments::{self as exp, write_csv, Agents};
use proceed::harness::HarnessError;
use proceed::llm::{HttpBackend, LlmPolicy};
use proceed::policy::{Policy, SoftmaxPolicy};
use proceed::rollout::collect_batch;
use proceed::seeding::derive;
use proceed::trajectory::{write_jsonl, RolloutBuffer};

#[derive(Parser)]
#[command(name = "proceed", version, about = "Critic-guided rollouts and policy optimization on text environments")]
struct Cli {
    /// Experiment config (TOML). Built-in defaults when absent.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct EnvArgs {
    #[arg(long)]
    env: Option<EnvKind>,
    /// Noise level ν of the search environment.
    #[arg(long)]
    nu: Option<f64>,
    /// Hop range for search tasks, e.g. `2-4`.
    #[arg(long, value_parser = parse_range)]
    hops: Option<(usize, usize)>,
    /// Optimal plan length range for corridor tasks, e.g. `12-12`.
    #[arg(long, value_parser = parse_range)]
    plan_length: Option<(usize, usize)>,
    #[arg(long)]
    max_steps: Option<usize>,
    /// Number of generated tasks.
    #[arg(long)]
    tasks: Option<usize>,
    /// Read tasks from this file instead of generating them.
    #[arg(long)]
    task_file: Option<PathBuf>,
}

#[derive(Args, Clone, Default)]
struct CriticArgs {
    #[arg(long)]
    critic: Option<CriticKind>,
    /// Rewind threshold; negative disables rewinding.
    #[arg(long, allow_negative_numbers = true)]
    threshold: Option<i32>,
    #[arg(long)]
    refiner_fidelity: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Vanilla,
    Proceed,
    Mixed,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a task file.
    GenTasks {
        #[command(flatten)]
        env: EnvArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Collect rollout groups and write them as JSONL.
    Rollout {
        #[command(flatten)]
        env: EnvArgs,
        #[command(flatten)]
        critic: CriticArgs,
        #[arg(long, value_enum, default_value = "mixed")]
        mode: Mode,
        #[arg(long)]
        group_size: Option<usize>,
        #[arg(long)]
        proceed_fraction: Option<f64>,
        #[arg(long)]
        literal_double_step: bool,
        /// Sample actions from the configured chat model instead of the softmax policy.
        #[arg(long)]
        llm_policy: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the configured methods and score them on held-out tasks.
    Train {
        #[command(flatten)]
        env: EnvArgs,
        #[command(flatten)]
        critic: CriticArgs,
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<Method>>,
        #[arg(long)]
        iterations: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
    },
    /// Held-out success of a policy checkpoint (or the configured policy).
    Eval {
        #[command(flatten)]
        env: EnvArgs,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        episodes: Option<usize>,
    },
    /// Vanilla vs critic-guided pass@k.
    Passk {
        #[command(flatten)]
        env: EnvArgs,
        #[command(flatten)]
        critic: CriticArgs,
    },
    /// Success rate across rewind thresholds.
    AblateThreshold {
        #[command(flatten)]
        env: EnvArgs,
        #[command(flatten)]
        critic: CriticArgs,
    },
    /// Success of a strong and a weak policy at two noise levels.
    NoiseStudy {
        #[command(flatten)]
        env: EnvArgs,
    },
    /// Score change of refined actions, bucketed by original score.
    RefineStudy {
        #[command(flatten)]
        env: EnvArgs,
        #[command(flatten)]
        critic: CriticArgs,
        #[arg(long)]
        harvest_below: Option<u8>,
    },
    /// Critic-to-policy cost ratio from a rollout file or from mean unit counts.
    CostReport {
        #[arg(long, conflicts_with_all = ["policy_mean", "critic_mean"])]
        input: Option<PathBuf>,
        #[arg(long, requires = "critic_mean")]
        policy_mean: Option<f64>,
        #[arg(long, requires = "policy_mean")]
        critic_mean: Option<f64>,
    },
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once('-').unwrap_or((s, s));
    let a: usize = a.trim().parse().map_err(|_| format!("bad range {s:?}"))?;
    let b: usize = b.trim().parse().map_err(|_| format!("bad range {s:?}"))?;
    if a > b {
        return Err(format!("empty range {s:?}"));
    }
    Ok((a, b))
}

impl EnvArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(k) = self.env {
            cfg.env.kind = k;
        }
        if let Some(nu) = self.nu {
            cfg.env.noise = nu;
        }
        if let Some(h) = self.hops {
            cfg.env.hops = h;
        }
        if let Some(p) = self.plan_length {
            cfg.env.plan_length = p;
        }
        if self.max_steps.is_some() {
            cfg.env.max_steps = self.max_steps;
        }
        if let Some(n) = self.tasks {
            cfg.env.tasks = n;
        }
    }

    fn load_tasks(&self, cfg: &ExperimentConfig) -> Result<Vec<Task>, HarnessError> {
        match &self.task_file {
            Some(p) => {
                let text = std::fs::read_to_string(p)?;
                let tasks = read_tasks(&text)?;
                Ok(tasks.into_iter().map(|t| t.with_noise(cfg.env.noise)).collect())
            }
            None => exp::task_pool(cfg),
        }
    }
}

impl CriticArgs {
    fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(k) = self.critic {
            cfg.critic.kind = k;
        }
        if let Some(t) = self.threshold {
            cfg.critic.threshold = t;
        }
        if let Some(f) = self.refiner_fidelity {
            cfg.critic.refiner_fidelity = f;
        }
    }
}

fn out_path(cfg: &ExperimentConfig, name: &str) -> PathBuf {
    cfg.out_dir.join(name)
}

fn report<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), HarnessError> {
    write_csv(path, rows)?;
    println!("wrote {} ({} rows)", path.display(), rows.len());
    Ok(())
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(d) = cli.out_dir {
        cfg.out_dir = d;
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    match &cli.command {
        Command::GenTasks { env, .. }
        | Command::Eval { env, .. }
        | Command::NoiseStudy { env } => env.apply(&mut cfg),
        Command::Rollout { env, critic, .. }
        | Command::Train { env, critic, .. }
        | Command::Passk { env, critic }
        | Command::AblateThreshold { env, critic }
        | Command::RefineStudy { env, critic, .. } => {
            env.apply(&mut cfg);
            critic.apply(&mut cfg);
        }
        Command::CostReport { .. } => {}
    }
    if cfg.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build_global()
            .map_err(|e| HarnessError::Config(e.to_string()))?;
    }

    match cli.command {
        Command::GenTasks { env, out } => {
            cfg.validate()?;
            let tasks = exp::task_pool(&cfg)?;
            let path = out.unwrap_or_else(|| out_path(&cfg, "tasks.json"));
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(&path, write_tasks(&tasks))?;
            println!("wrote {} ({} {} tasks)", path.display(), tasks.len(), env.env.unwrap_or(cfg.env.kind));
        }
        Command::Rollout {
            env,
            mode,
            group_size,
            proceed_fraction,
            literal_double_step,
            llm_policy,
            out,
            ..
        } => {
            if let Some(g) = group_size {
                cfg.rollout.group_size = g;
            }
            cfg.rollout.proceed_fraction = match mode {
                Mode::Vanilla => 0.0,
                Mode::Proceed => 1.0,
                Mode::Mixed => proceed_fraction.unwrap_or(cfg.rollout.proceed_fraction),
            };
            cfg.rollout.literal_double_step |= literal_double_step;
            cfg.validate()?;
            let tasks = env.load_tasks(&cfg)?;
            let agents = Agents::from_config(&cfg)?;
            let policy: Box<dyn Policy> = if llm_policy {
                let llm = cfg
                    .llm
                    .clone()
                    .ok_or_else(|| HarnessError::Config("--llm-policy needs an [llm] section".into()))?;
                let retries = llm.max_retries;
                let name = llm.model_name.clone();
                let backend = HttpBackend::new(llm).map_err(|e| HarnessError::Backend(e.to_string()))?;
                Box::new(LlmPolicy::new(Arc::new(backend), retries, name))
            } else {
                Box::new(SoftmaxPolicy::new(cfg.policy_params()?))
            };
            let groups = collect_batch(&tasks, policy.as_ref(), agents.guide(), &cfg.rollout_config(), cfg.seed)?;
            let buffer = RolloutBuffer {
                groups: groups.into_iter().map(|g| g.group).collect(),
                policy_snapshot_id: policy.id(),
            };
            let path = out.unwrap_or_else(|| out_path(&cfg, "rollouts.jsonl"));
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir)?;
            }
            let file = std::io::BufWriter::new(std::fs::File::create(&path)?);
            write_jsonl(&buffer, file)?;
            let row = exp::cost_report(&path.display().to_string(), buffer.trajectories())?;
            println!(
                "wrote {} ({} groups, cost ratio {:.3})",
                path.display(),
                buffer.groups.len(),
                row.cost_ratio
            );
        }
        Command::Train {
            methods,
            iterations,
            batch_size,
            ..
        } => {
            if let Some(m) = methods {
                cfg.train.methods = m;
            }
            if let Some(i) = iterations {
                cfg.train.iterations = i;
            }
            if let Some(b) = batch_size {
                cfg.train.batch_size = b;
            }
            cfg.validate()?;
            let r = exp::train_compare(&cfg)?;
            report(&out_path(&cfg, "train.csv"), &r.rows)?;
            report(&out_path(&cfg, "train_metrics.csv"), &r.metrics)?;
            let dir = out_path(&cfg, "checkpoints");
            std::fs::create_dir_all(&dir)?;
            for (method, seed, params) in &r.finals {
                params.save(&dir.join(format!("{}-seed{seed}.json", method.name())))?;
            }
            std::fs::write(out_path(&cfg, "config.toml"), cfg.to_toml())?;
        }
        Command::Eval {
            env,
            checkpoint,
            episodes,
        } => {
            if checkpoint.is_some() {
                cfg.policy.checkpoint = checkpoint;
            }
            cfg.validate()?;
            let params = cfg.policy_params()?;
            let tasks = match env.task_file {
                Some(_) => env.load_tasks(&cfg)?,
                None => exp::held_out_pool(&cfg)?,
            };
            let episodes = episodes.unwrap_or(cfg.train.eval_episodes);
            let (s, n) = exp::evaluate_policy(&params, &tasks, episodes, derive(&[cfg.seed, 1]), cfg.env.max_steps)?;
            let row = exp::EvalRow::new(&cfg, &params, s, n);
            println!("success {s}/{n} = {:.4}", row.success_rate);
            report(&out_path(&cfg, "eval.csv"), &[row])?;
        }
        Command::Passk { .. } => {
            cfg.validate()?;
            report(&out_path(&cfg, "passk.csv"), &exp::passk(&cfg)?)?;
        }
        Command::AblateThreshold { .. } => {
            cfg.validate()?;
            report(&out_path(&cfg, "threshold.csv"), &exp::threshold_ablation(&cfg)?)?;
        }
        Command::NoiseStudy { .. } => {
            cfg.validate()?;
            let r = exp::noise_study(&cfg)?;
            report(&out_path(&cfg, "noise.csv"), &r.rows)?;
            report(&out_path(&cfg, "noise_drop.csv"), &r.drops)?;
        }
        Command::RefineStudy { harvest_below, .. } => {
            if let Some(h) = harvest_below {
                cfg.refine.harvest_below = h;
            }
            cfg.validate()?;
            report(&out_path(&cfg, "refine.csv"), &exp::refine_study(&cfg)?)?;
        }
        Command::CostReport {
            input,
            policy_mean,
            critic_mean,
        } => {
            let row = match (input, policy_mean, critic_mean) {
                (Some(p), _, _) => {
                    let file = std::io::BufReader::new(std::fs::File::open(&p)?);
                    let buffer = proceed::trajectory::read_jsonl(file)?;
                    exp::cost_report(&p.display().to_string(), buffer.trajectories())?
                }
                (None, Some(p), Some(c)) => exp::CostRow {
                    source: "means".into(),
                    mean_policy_units: p,
                    mean_critic_units: c,
                    cost_ratio: proceed::rollout::cost_ratio_from_means(p, c)?,
                },
                _ => return Err(HarnessError::Config("give --input or both --policy-mean and --critic-mean".into())),
            };
            println!("cost ratio {:.2}", row.cost_ratio);
            report(&out_path(&cfg, "cost.csv"), &[row])?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
