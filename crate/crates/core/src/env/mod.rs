//! Environment contract and the two synthetic worlds.
//!
//! Both worlds are fully reversible: a [`Snapshot`] is a clone of the whole
//! environment, including the position of its random stream, so restoring a
//! snapshot and replaying an action sequence reproduces the same observations
//! byte for byte.

mod corridor;
mod search;

pub use corridor::{CorridorEnv, CorridorTask, Hallway, Subgoal};
pub use search::{Fact, SearchEnv, SearchTask, SNIPPETS_PER_QUERY};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::policy::FeatureMap;

pub const SEARCH_MAX_STEPS: usize = 10;
pub const CORRIDOR_MAX_STEPS: usize = 50;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnvError {
    #[error("invalid task: {0}")]
    InvalidTask(String),
    #[error("inadmissible action {0:?}")]
    InadmissibleAction(String),
    #[error("step after episode end")]
    StepAfterDone,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvKind {
    Search,
    Corridor,
}

impl std::fmt::Display for EnvKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EnvKind::Search => "search",
            EnvKind::Corridor => "corridor",
        })
    }
}

impl std::str::FromStr for EnvKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "search" => Ok(EnvKind::Search),
            "corridor" => Ok(EnvKind::Corridor),
            other => Err(format!("unknown environment kind {other:?}")),
        }
    }
}

/// Text an LLM backend needs to reason about the task.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvDescription {
    pub kind: EnvKind,
    pub task_description: String,
    pub environment_config: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub observation: String,
    pub done: bool,
    pub success: bool,
}

/// Read-only view of an environment state. Critics, refiners and policies
/// only ever see this.
pub trait EnvView: FeatureMap {
    fn candidates(&self) -> Vec<String>;
    fn state_text(&self) -> String;
    /// Exact 0–10 value of taking `action` from the current state.
    fn oracle_step_value(&self, action: &str) -> Result<u8, EnvError>;
    fn describe(&self) -> EnvDescription;
    fn steps_taken(&self) -> usize;
    fn max_steps(&self) -> usize;
    fn is_done(&self) -> bool;
    fn last_observation(&self) -> &str;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot<E>(E);

pub trait Environment: EnvView + Clone + Send {
    fn reset(&mut self, seed: u64) -> Result<String, EnvError>;
    fn step(&mut self, action: &str) -> Result<StepOutcome, EnvError>;
    /// Position of the environment's random stream.
    fn rng_stream_position(&self) -> u64;
    /// Independent re-check of the success predicate on the current state.
    fn verify_success(&self) -> bool;

    fn snapshot(&self) -> Snapshot<Self> {
        Snapshot(self.clone())
    }

    fn restore(&mut self, snapshot: &Snapshot<Self>) {
        *self = snapshot.0.clone();
    }
}

impl<E> Snapshot<E> {
    pub fn view(&self) -> &E {
        &self.0
    }
}

/// Case-folded, whitespace-collapsed form used for answer matching.
pub fn normalize(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Task {
    Search(SearchTask),
    Corridor(CorridorTask),
}

impl Task {
    pub fn id(&self) -> &str {
        match self {
            Task::Search(t) => &t.id,
            Task::Corridor(t) => &t.id,
        }
    }

    pub fn kind(&self) -> EnvKind {
        match self {
            Task::Search(_) => EnvKind::Search,
            Task::Corridor(_) => EnvKind::Corridor,
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        match self {
            Task::Search(t) => t.validate(),
            Task::Corridor(t) => t.validate(),
        }
    }

    pub fn default_max_steps(&self) -> usize {
        match self {
            Task::Search(_) => SEARCH_MAX_STEPS,
            Task::Corridor(_) => CORRIDOR_MAX_STEPS,
        }
    }

    pub fn with_noise(mut self, nu: f64) -> Self {
        if let Task::Search(t) = &mut self {
            t.noise_level = nu;
        }
        self
    }
}

/// Knobs for [`generate_tasks`]. `hops` applies to search tasks,
/// `plan_length` to corridor tasks; both are inclusive ranges.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Difficulty {
    pub hops: (usize, usize),
    pub plan_length: (usize, usize),
    pub noise_level: f64,
}

impl Default for Difficulty {
    fn default() -> Self {
        Self {
            hops: (2, 4),
            plan_length: (12, 12),
            noise_level: 0.5,
        }
    }
}

pub fn generate_tasks(kind: EnvKind, count: usize, difficulty: &Difficulty, seed: u64) -> Result<Vec<Task>, EnvError> {
    if count == 0 {
        return Err(EnvError::InvalidTask("task count must be positive".into()));
    }
    (0..count)
        .map(|i| {
            let task_seed = crate::seeding::derive(&[seed, kind as u64, i as u64]);
            match kind {
                EnvKind::Search => {
                    search::generate(format!("search-{seed}-{i}"), difficulty, task_seed).map(Task::Search)
                }
                EnvKind::Corridor => {
                    corridor::generate(format!("corridor-{seed}-{i}"), difficulty, task_seed).map(Task::Corridor)
                }
            }
        })
        .collect()
}

pub fn write_tasks(tasks: &[Task]) -> String {
    serde_json::to_string_pretty(tasks).expect("tasks serialize") + "\n"
}

pub fn read_tasks(text: &str) -> Result<Vec<Task>, EnvError> {
    let tasks: Vec<Task> = serde_json::from_str(text).map_err(|e| EnvError::InvalidTask(e.to_string()))?;
    for t in &tasks {
        t.validate()?;
    }
    Ok(tasks)
}

/// Either world behind one type, for code that picks the environment at run time.
#[derive(Debug, Clone)]
pub enum AnyEnv {
    Search(SearchEnv),
    Corridor(CorridorEnv),
}

impl AnyEnv {
    pub fn new(task: &Task, max_steps: Option<usize>) -> Result<Self, EnvError> {
        let m = max_steps.unwrap_or_else(|| task.default_max_steps());
        Ok(match task {
            Task::Search(t) => AnyEnv::Search(SearchEnv::new(t.clone(), m)?),
            Task::Corridor(t) => AnyEnv::Corridor(CorridorEnv::new(t.clone(), m)?),
        })
    }
}

macro_rules! dispatch {
    ($self:ident, $e:ident => $body:expr) => {
        match $self {
            AnyEnv::Search($e) => $body,
            AnyEnv::Corridor($e) => $body,
        }
    };
}

impl FeatureMap for AnyEnv {
    fn feature_map_id(&self) -> &'static str {
        dispatch!(self, e => e.feature_map_id())
    }
    fn feature_dim(&self) -> usize {
        dispatch!(self, e => e.feature_dim())
    }
    fn features(&self, action: &str) -> Vec<f64> {
        dispatch!(self, e => e.features(action))
    }
}

impl EnvView for AnyEnv {
    fn candidates(&self) -> Vec<String> {
        dispatch!(self, e => e.candidates())
    }
    fn state_text(&self) -> String {
        dispatch!(self, e => e.state_text())
    }
    fn oracle_step_value(&self, action: &str) -> Result<u8, EnvError> {
        dispatch!(self, e => e.oracle_step_value(action))
    }
    fn describe(&self) -> EnvDescription {
        dispatch!(self, e => e.describe())
    }
    fn steps_taken(&self) -> usize {
        dispatch!(self, e => e.steps_taken())
    }
    fn max_steps(&self) -> usize {
        dispatch!(self, e => e.max_steps())
    }
    fn is_done(&self) -> bool {
        dispatch!(self, e => e.is_done())
    }
    fn last_observation(&self) -> &str {
        dispatch!(self, e => e.last_observation())
    }
}

impl Environment for AnyEnv {
    fn reset(&mut self, seed: u64) -> Result<String, EnvError> {
        dispatch!(self, e => e.reset(seed))
    }
    fn step(&mut self, action: &str) -> Result<StepOutcome, EnvError> {
        dispatch!(self, e => e.step(action))
    }
    fn rng_stream_position(&self) -> u64 {
        dispatch!(self, e => e.rng_stream_position())
    }
    fn verify_success(&self) -> bool {
        dispatch!(self, e => e.verify_success())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_folds_case_and_space() {
        assert_eq!(normalize("  Kalo   VENN\t"), "kalo venn");
    }

    #[test]
    fn task_file_round_trip() {
        let d = Difficulty::default();
        let mut tasks = generate_tasks(EnvKind::Search, 2, &d, 1).unwrap();
        tasks.extend(generate_tasks(EnvKind::Corridor, 2, &d, 1).unwrap());
        let text = write_tasks(&tasks);
        assert_eq!(read_tasks(&text).unwrap(), tasks);
    }

    #[test]
    fn zero_count_rejected() {
        assert!(generate_tasks(EnvKind::Search, 0, &Difficulty::default(), 0).is_err());
    }
}
