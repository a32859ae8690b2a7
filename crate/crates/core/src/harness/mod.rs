//! Experiment configuration, drivers and statistics.

pub mod config;
pub mod experiments;
pub mod stats;

use crate::critic::CriticError;
use crate::env::EnvError;
use crate::optimizer::OptimError;
use crate::policy::PolicyError;
use crate::rollout::RolloutError;
use crate::trajectory::TrajectoryError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),
    #[error("backend: {0}")]
    Backend(String),
    #[error("io: {0}")]
    Io(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error(transparent)]
    Critic(#[from] CriticError),
    #[error(transparent)]
    Rollout(#[from] RolloutError),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        HarnessError::Io(e.to_string())
    }
}

fn backend_failure(e: &HarnessError) -> bool {
    let critic = |c: &CriticError| matches!(c, CriticError::Backend(_));
    let policy = |p: &PolicyError| matches!(p, PolicyError::Backend(_));
    let rollout = |r: &RolloutError| match r {
        RolloutError::Critic(c) => critic(c),
        RolloutError::Policy(p) => policy(p),
        _ => false,
    };
    match e {
        HarnessError::Backend(_) => true,
        HarnessError::Critic(c) => critic(c),
        HarnessError::Policy(p) => policy(p),
        HarnessError::Rollout(r) => rollout(r),
        HarnessError::Optim(OptimError::Rollout(r)) => rollout(r),
        HarnessError::Optim(OptimError::Policy(p)) => policy(p),
        _ => false,
    }
}

impl HarnessError {
    /// Process exit status: 2 for configuration errors, 3 for model backend
    /// failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            e if backend_failure(e) => 3,
            _ => 1,
        }
    }
}
