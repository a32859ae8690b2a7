//! Trajectory data model, group bookkeeping and JSONL persistence.
//!
//! A [`Trajectory`] is the committed interaction history of one episode. Each
//! [`StepRecord`] carries the action that was actually executed, the
//! observation it produced, whether it came from the policy or from the
//! refiner, and the critic annotation attached at collection time.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrajectoryError {
    #[error("cannot append a step to a finished trajectory")]
    AppendAfterDone,
    #[error("step index gap: expected {expected}, got {got}")]
    IndexGap { expected: usize, got: usize },
    #[error("trajectory already finalized")]
    DoubleFinalize,
    #[error("group has no trajectories")]
    EmptyGroup,
    #[error("malformed record on line {line}: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Where an executed action came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StepTag {
    OnPolicy,
    Demonstration,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RolloutMode {
    Vanilla,
    Proceed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub index: usize,
    pub state_text: String,
    pub action: String,
    pub observation: Option<String>,
    pub tag: StepTag,
    pub critic_score: Option<u8>,
    pub critique: Option<String>,
    /// Log-probability of `action` under the collection-time policy.
    /// `None` when the backend does not report one.
    pub behavior_logprob: Option<f64>,
    pub policy_units: u64,
    pub critic_units: u64,
}

impl StepRecord {
    pub fn new(index: usize, state_text: impl Into<String>, action: impl Into<String>) -> Self {
        Self {
            index,
            state_text: state_text.into(),
            action: action.into(),
            observation: None,
            tag: StepTag::OnPolicy,
            critic_score: None,
            critique: None,
            behavior_logprob: None,
            policy_units: 0,
            critic_units: 0,
        }
    }

    pub fn is_demonstration(&self) -> bool {
        self.tag == StepTag::Demonstration
    }

    fn check(&self) -> Result<(), String> {
        if let Some(s) = self.critic_score {
            if s > 10 {
                return Err(format!("step {}: critic score {s} outside 0..=10", self.index));
            }
        }
        if self.is_demonstration() && self.critic_score.is_none() {
            return Err(format!("step {}: demonstration without critic score", self.index));
        }
        if let Some(lp) = self.behavior_logprob {
            if !(lp <= 0.0) {
                return Err(format!("step {}: behavior logprob {lp} > 0", self.index));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub task_id: String,
    pub steps: Vec<StepRecord>,
    pub reward: f64,
    pub done: bool,
    pub mode: RolloutMode,
    pub seed: u64,
}

impl Trajectory {
    pub fn new(task_id: impl Into<String>, mode: RolloutMode, seed: u64) -> Self {
        Self {
            task_id: task_id.into(),
            steps: Vec::new(),
            reward: 0.0,
            done: false,
            mode,
            seed,
        }
    }

    pub fn append_step(&mut self, step: StepRecord) -> Result<(), TrajectoryError> {
        if self.done {
            return Err(TrajectoryError::AppendAfterDone);
        }
        if step.index != self.steps.len() {
            return Err(TrajectoryError::IndexGap {
                expected: self.steps.len(),
                got: step.index,
            });
        }
        if self.mode == RolloutMode::Vanilla && step.is_demonstration() {
            return Err(TrajectoryError::InvariantViolation(
                "vanilla trajectory cannot hold demonstration steps".into(),
            ));
        }
        step.check().map_err(TrajectoryError::InvariantViolation)?;
        self.steps.push(step);
        Ok(())
    }

    /// Marks the episode finished and assigns the terminal outcome reward.
    pub fn finalize(&mut self, success: bool) -> Result<(), TrajectoryError> {
        if self.done {
            return Err(TrajectoryError::DoubleFinalize);
        }
        self.done = true;
        self.reward = if success { 1.0 } else { 0.0 };
        Ok(())
    }

    pub fn succeeded(&self) -> bool {
        self.reward > 0.0
    }

    pub fn demonstration_count(&self) -> usize {
        self.steps.iter().filter(|s| s.is_demonstration()).count()
    }

    pub fn validate(&self) -> Result<(), TrajectoryError> {
        let fail = |m: String| Err(TrajectoryError::InvariantViolation(m));
        for (i, s) in self.steps.iter().enumerate() {
            if s.index != i {
                return fail(format!("step indices not contiguous at position {i}"));
            }
            s.check().map_err(TrajectoryError::InvariantViolation)?;
        }
        if self.reward != 0.0 && self.reward != 1.0 {
            return fail(format!("reward {} not in {{0,1}}", self.reward));
        }
        if self.reward > 0.0 && !self.done {
            return fail("positive reward on unfinished trajectory".into());
        }
        if self.mode == RolloutMode::Vanilla && self.demonstration_count() > 0 {
            return fail("vanilla trajectory holds demonstration steps".into());
        }
        Ok(())
    }

    /// Copy with critic annotations removed, used to compare interaction
    /// content across rollout modes.
    pub fn interaction_view(&self) -> Trajectory {
        let mut t = self.clone();
        t.mode = RolloutMode::Vanilla;
        for s in &mut t.steps {
            s.critic_score = None;
            s.critique = None;
            s.critic_units = 0;
        }
        t
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Group {
    pub task_id: String,
    pub trajectories: Vec<Trajectory>,
}

impl Group {
    pub fn new(task_id: impl Into<String>, trajectories: Vec<Trajectory>) -> Result<Self, TrajectoryError> {
        let task_id = task_id.into();
        if let Some(t) = trajectories.iter().find(|t| t.task_id != task_id) {
            return Err(TrajectoryError::InvariantViolation(format!(
                "trajectory for task {} in group for task {task_id}",
                t.task_id
            )));
        }
        Ok(Self { task_id, trajectories })
    }

    pub fn rewards(&self) -> Vec<f64> {
        self.trajectories.iter().map(|t| t.reward).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardStats {
    pub mean: f64,
    pub std: f64,
    pub degenerate: bool,
}

/// Mean and population standard deviation of the group's terminal rewards.
pub fn group_reward_stats(group: &Group) -> Result<RewardStats, TrajectoryError> {
    reward_stats(&group.rewards())
}

pub(crate) fn reward_stats(rewards: &[f64]) -> Result<RewardStats, TrajectoryError> {
    if rewards.is_empty() {
        return Err(TrajectoryError::EmptyGroup);
    }
    let n = rewards.len() as f64;
    let mean = rewards.iter().sum::<f64>() / n;
    let var = rewards.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    Ok(RewardStats {
        mean,
        std,
        degenerate: std == 0.0,
    })
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RolloutBuffer {
    pub groups: Vec<Group>,
    pub policy_snapshot_id: String,
}

impl RolloutBuffer {
    pub fn trajectories(&self) -> impl Iterator<Item = &Trajectory> {
        self.groups.iter().flat_map(|g| g.trajectories.iter())
    }
}

// One line of the JSONL file. `group` and `policy_snapshot_id` let a reader
// rebuild group boundaries and the collection snapshot.
#[derive(Serialize, Deserialize)]
struct JsonlRecord {
    task_id: String,
    mode: RolloutMode,
    seed: u64,
    reward: f64,
    steps: Vec<StepRecord>,
    group: usize,
    policy_snapshot_id: String,
}

pub fn write_jsonl<W: Write>(buffer: &RolloutBuffer, mut out: W) -> Result<(), TrajectoryError> {
    for (gi, group) in buffer.groups.iter().enumerate() {
        for t in &group.trajectories {
            if !t.done {
                return Err(TrajectoryError::InvariantViolation(
                    "only finalized trajectories can be persisted".into(),
                ));
            }
            t.validate()?;
            let rec = JsonlRecord {
                task_id: t.task_id.clone(),
                mode: t.mode,
                seed: t.seed,
                reward: t.reward,
                steps: t.steps.clone(),
                group: gi,
                policy_snapshot_id: buffer.policy_snapshot_id.clone(),
            };
            let line = serde_json::to_string(&rec)
                .map_err(|e| TrajectoryError::InvariantViolation(e.to_string()))?;
            out.write_all(line.as_bytes())?;
            out.write_all(b"\n")?;
        }
    }
    Ok(())
}

pub fn serialize_jsonl(buffer: &RolloutBuffer) -> Result<Vec<u8>, TrajectoryError> {
    let mut out = Vec::new();
    write_jsonl(buffer, &mut out)?;
    Ok(out)
}

pub fn read_jsonl<R: BufRead>(input: R) -> Result<RolloutBuffer, TrajectoryError> {
    let mut buffer = RolloutBuffer::default();
    let mut last_group: Option<usize> = None;
    for (i, line) in input.lines().enumerate() {
        let lineno = i + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonlRecord =
            serde_json::from_str(&line).map_err(|e| TrajectoryError::MalformedRecord {
                line: lineno,
                reason: e.to_string(),
            })?;
        let traj = Trajectory {
            task_id: rec.task_id,
            steps: rec.steps,
            reward: rec.reward,
            done: true,
            mode: rec.mode,
            seed: rec.seed,
        };
        traj.validate()?;
        if last_group.is_none() {
            buffer.policy_snapshot_id = rec.policy_snapshot_id.clone();
        } else if buffer.policy_snapshot_id != rec.policy_snapshot_id {
            return Err(TrajectoryError::InvariantViolation(format!(
                "line {lineno}: mixed policy snapshots in one buffer"
            )));
        }
        match last_group {
            Some(g) if g == rec.group => {
                let group = buffer.groups.last_mut().expect("group exists");
                if group.task_id != traj.task_id {
                    return Err(TrajectoryError::InvariantViolation(format!(
                        "line {lineno}: task {} inside group for task {}",
                        traj.task_id, group.task_id
                    )));
                }
                group.trajectories.push(traj);
            }
            Some(g) if rec.group != g + 1 => {
                return Err(TrajectoryError::MalformedRecord {
                    line: lineno,
                    reason: format!("group index {} does not follow {g}", rec.group),
                });
            }
            None if rec.group != 0 => {
                return Err(TrajectoryError::MalformedRecord {
                    line: lineno,
                    reason: format!("first group index is {}", rec.group),
                });
            }
            _ => {
                buffer.groups.push(Group {
                    task_id: traj.task_id.clone(),
                    trajectories: vec![traj],
                });
            }
        }
        last_group = Some(rec.group);
    }
    Ok(buffer)
}

pub fn parse_jsonl(bytes: &[u8]) -> Result<RolloutBuffer, TrajectoryError> {
    read_jsonl(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step(i: usize) -> StepRecord {
        let mut s = StepRecord::new(i, format!("state {i}"), "look");
        s.behavior_logprob = Some(-0.5);
        s
    }

    #[test]
    fn append_and_contiguity() {
        let mut t = Trajectory::new("t", RolloutMode::Vanilla, 1);
        t.append_step(step(0)).unwrap();
        assert_eq!(t.steps.len(), 1);
        t.append_step(step(1)).unwrap();
        t.append_step(step(2)).unwrap();
        t.append_step(step(3)).unwrap();
        assert_eq!(t.steps.len(), 4);
        assert!(matches!(
            t.append_step(step(7)),
            Err(TrajectoryError::IndexGap { expected: 4, got: 7 })
        ));
    }

    #[test]
    fn append_after_done_rejected() {
        let mut t = Trajectory::new("t", RolloutMode::Vanilla, 1);
        t.finalize(false).unwrap();
        assert!(matches!(t.append_step(step(0)), Err(TrajectoryError::AppendAfterDone)));
    }

    #[test]
    fn finalize_rewards() {
        let mut t = Trajectory::new("t", RolloutMode::Proceed, 1);
        t.finalize(true).unwrap();
        assert_eq!(t.reward, 1.0);
        assert!(matches!(t.finalize(true), Err(TrajectoryError::DoubleFinalize)));
        let mut f = Trajectory::new("t", RolloutMode::Proceed, 1);
        f.finalize(false).unwrap();
        assert_eq!(f.reward, 0.0);
    }

    #[test]
    fn vanilla_rejects_demonstrations() {
        let mut t = Trajectory::new("t", RolloutMode::Vanilla, 1);
        let mut s = step(0);
        s.tag = StepTag::Demonstration;
        s.critic_score = Some(1);
        assert!(t.append_step(s).is_err());
    }

    fn group_with(rewards: &[f64]) -> Group {
        let ts = rewards
            .iter()
            .map(|&r| {
                let mut t = Trajectory::new("t", RolloutMode::Vanilla, 0);
                t.finalize(r > 0.0).unwrap();
                t
            })
            .collect();
        Group::new("t", ts).unwrap()
    }

    #[test]
    fn reward_stats_examples() {
        let s = group_reward_stats(&group_with(&[1.0, 1.0, 0.0, 0.0])).unwrap();
        assert_eq!((s.mean, s.std, s.degenerate), (0.5, 0.5, false));
        let s = group_reward_stats(&group_with(&[0.0; 4])).unwrap();
        assert_eq!((s.mean, s.std, s.degenerate), (0.0, 0.0, true));
        let s = group_reward_stats(&group_with(&[1.0])).unwrap();
        assert_eq!((s.mean, s.std, s.degenerate), (1.0, 0.0, true));
        assert!(matches!(
            group_reward_stats(&group_with(&[])),
            Err(TrajectoryError::EmptyGroup)
        ));
    }

    #[test]
    fn empty_buffer_round_trip() {
        let b = RolloutBuffer::default();
        let bytes = serialize_jsonl(&b).unwrap();
        assert!(bytes.is_empty());
        assert_eq!(parse_jsonl(&bytes).unwrap(), b);
    }

    #[test]
    fn truncated_line_is_malformed() {
        let mut g = group_with(&[1.0, 0.0]);
        g.trajectories[0].steps.push(step(0));
        let b = RolloutBuffer {
            groups: vec![g],
            policy_snapshot_id: "snap-0".into(),
        };
        let bytes = serialize_jsonl(&b).unwrap();
        assert_eq!(bytes.iter().filter(|&&c| c == b'\n').count(), 2);
        let cut = &bytes[..bytes.len() / 2];
        match parse_jsonl(cut) {
            Err(TrajectoryError::MalformedRecord { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected malformed record, got {other:?}"),
        }
    }

    #[test]
    fn interaction_view_strips_critic_metadata() {
        let mut t = Trajectory::new("t", RolloutMode::Proceed, 3);
        let mut s = step(0);
        s.critic_score = Some(7);
        s.critique = Some("fine".into());
        s.critic_units = 4;
        t.append_step(s).unwrap();
        let v = t.interaction_view();
        assert_eq!(v.mode, RolloutMode::Vanilla);
        assert_eq!(v.steps[0].critic_score, None);
        assert_eq!(v.steps[0].critic_units, 0);
    }
}
