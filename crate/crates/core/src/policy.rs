//! Linear-softmax policy over enumerable candidate actions.
//!
//! `p(a | s) ∝ exp(θ·f(s, a) / T)` where `f` is supplied by the environment
//! through [`FeatureMap`]. Log-probability gradients are analytic, which is
//! what makes the clipped surrogate trainable without an autograd stack.

use std::path::Path;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::env::EnvDescription;
use crate::trajectory::Trajectory;

#[derive(Debug, Error)]
pub enum PolicyError {
    #[error("no candidate actions")]
    EmptyCandidates,
    #[error("action {0:?} is not a candidate")]
    ActionNotCandidate(String),
    #[error("feature dimension {got} does not match parameter dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("temperature must be positive and finite, got {0}")]
    InvalidTemperature(f64),
    #[error("backend failure: {0}")]
    Backend(String),
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

/// Deterministic map from (state, candidate action) to a bounded real vector.
/// Environments implement this for their own state.
pub trait FeatureMap {
    fn feature_map_id(&self) -> &'static str;
    fn feature_dim(&self) -> usize;
    fn features(&self, action: &str) -> Vec<f64>;
}

/// Row-major `candidates × dim` feature matrix for one decision.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    dim: usize,
    rows: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(dim: usize, rows: Vec<f64>) -> Self {
        assert!(dim > 0 && rows.len() % dim == 0, "ragged feature matrix");
        Self { dim, rows }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let dim = rows.first().map_or(1, Vec::len);
        let flat = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(dim.max(1), flat)
    }

    pub fn build<M: FeatureMap + ?Sized>(map: &M, candidates: &[String]) -> Self {
        let dim = map.feature_dim();
        let mut rows = Vec::with_capacity(dim * candidates.len());
        for c in candidates {
            rows.extend(map.features(c));
        }
        Self::new(dim, rows)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.rows.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.rows[i * self.dim..(i + 1) * self.dim]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolicyParams {
    pub theta: Vec<f64>,
    pub temperature: f64,
    pub feature_map_id: String,
}

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Checkpoint {
    theta: Vec<f64>,
    temperature: f64,
    feature_map_id: String,
    version: u32,
}

impl PolicyParams {
    pub fn new(theta: Vec<f64>, temperature: f64, feature_map_id: impl Into<String>) -> Result<Self, PolicyError> {
        if !(temperature > 0.0 && temperature.is_finite()) {
            return Err(PolicyError::InvalidTemperature(temperature));
        }
        Ok(Self {
            theta,
            temperature,
            feature_map_id: feature_map_id.into(),
        })
    }

    pub fn zeros(dim: usize, feature_map_id: impl Into<String>) -> Self {
        Self::new(vec![0.0; dim], 1.0, feature_map_id).expect("unit temperature")
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    /// Frozen copy used as θ_old for importance ratios.
    pub fn snapshot(&self) -> PolicyParams {
        self.clone()
    }

    /// Same parameters at a higher temperature.
    pub fn weaken(&self, delta_t: f64) -> Result<PolicyParams, PolicyError> {
        if !(delta_t >= 0.0) {
            return Err(PolicyError::InvalidTemperature(self.temperature + delta_t));
        }
        Self::new(self.theta.clone(), self.temperature + delta_t, self.feature_map_id.clone())
    }

    /// Short content hash identifying this parameter snapshot.
    pub fn snapshot_id(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut h = Sha256::new();
        for t in &self.theta {
            h.update(t.to_bits().to_le_bytes());
        }
        h.update(self.temperature.to_bits().to_le_bytes());
        h.update(self.feature_map_id.as_bytes());
        hex::encode(&h.finalize()[..8])
    }

    pub fn save(&self, path: &Path) -> Result<(), PolicyError> {
        let ck = Checkpoint {
            theta: self.theta.clone(),
            temperature: self.temperature,
            feature_map_id: self.feature_map_id.clone(),
            version: CHECKPOINT_VERSION,
        };
        let text = serde_json::to_string_pretty(&ck).map_err(|e| PolicyError::Checkpoint(e.to_string()))?;
        std::fs::write(path, text + "\n").map_err(|e| PolicyError::Checkpoint(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, PolicyError> {
        let text = std::fs::read_to_string(path).map_err(|e| PolicyError::Checkpoint(e.to_string()))?;
        let ck: Checkpoint = serde_json::from_str(&text).map_err(|e| PolicyError::Checkpoint(e.to_string()))?;
        if ck.version != CHECKPOINT_VERSION {
            return Err(PolicyError::Checkpoint(format!("unsupported version {}", ck.version)));
        }
        Self::new(ck.theta, ck.temperature, ck.feature_map_id)
    }

    fn check(&self, features: &FeatureMatrix) -> Result<(), PolicyError> {
        if features.is_empty() {
            return Err(PolicyError::EmptyCandidates);
        }
        if features.dim() != self.dim() {
            return Err(PolicyError::DimensionMismatch {
                expected: self.dim(),
                got: features.dim(),
            });
        }
        Ok(())
    }

    pub fn logits(&self, features: &FeatureMatrix) -> Vec<f64> {
        (0..features.len())
            .map(|i| dot(&self.theta, features.row(i)) / self.temperature)
            .collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let z: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / z).collect()
}

fn log_softmax_at(logits: &[f64], index: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    logits[index] - lse
}

pub fn action_distribution(params: &PolicyParams, features: &FeatureMatrix) -> Result<Vec<f64>, PolicyError> {
    params.check(features)?;
    Ok(softmax(&params.logits(features)))
}

pub fn log_probability(params: &PolicyParams, features: &FeatureMatrix, index: usize) -> Result<f64, PolicyError> {
    params.check(features)?;
    if index >= features.len() {
        return Err(PolicyError::ActionNotCandidate(format!("#{index}")));
    }
    Ok(log_softmax_at(&params.logits(features), index))
}

/// Inverse-CDF draw; returns the candidate index and its log-probability.
pub fn sample(params: &PolicyParams, features: &FeatureMatrix, rng: &mut dyn RngCore) -> Result<(usize, f64), PolicyError> {
    let probs = action_distribution(params, features)?;
    let index = sample_index(&probs, rng);
    Ok((index, log_softmax_at(&params.logits(features), index)))
}

pub(crate) fn sample_index(probs: &[f64], rng: &mut dyn RngCore) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // u landed in the rounding slack above the cumulative sum
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(probs.len() - 1)
}

/// ∇_θ log p(a) = (f(s,a) − Σ_a' p(a') f(s,a')) / T.
pub fn grad_logprob(params: &PolicyParams, features: &FeatureMatrix, index: usize) -> Result<Vec<f64>, PolicyError> {
    let probs = action_distribution(params, features)?;
    if index >= features.len() {
        return Err(PolicyError::ActionNotCandidate(format!("#{index}")));
    }
    Ok(grad_logprob_with(&probs, features, index, params.temperature))
}

pub(crate) fn mean_feature(probs: &[f64], features: &FeatureMatrix) -> Vec<f64> {
    let mut mean = vec![0.0; features.dim()];
    for (i, p) in probs.iter().enumerate() {
        for (m, f) in mean.iter_mut().zip(features.row(i)) {
            *m += p * f;
        }
    }
    mean
}

pub(crate) fn grad_logprob_with(probs: &[f64], features: &FeatureMatrix, index: usize, temperature: f64) -> Vec<f64> {
    let mean = mean_feature(probs, features);
    features
        .row(index)
        .iter()
        .zip(&mean)
        .map(|(f, m)| (f - m) / temperature)
        .collect()
}

pub fn entropy(probs: &[f64]) -> f64 {
    -probs.iter().filter(|&&p| p > 0.0).map(|p| p * p.ln()).sum::<f64>()
}

/// Everything a policy may look at when choosing an action.
pub struct DecisionContext<'a> {
    pub trajectory: &'a Trajectory,
    pub state_text: &'a str,
    pub candidates: &'a [String],
    pub features: &'a FeatureMatrix,
    pub description: &'a EnvDescription,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Choice {
    pub index: usize,
    pub action: String,
    pub logprob: Option<f64>,
    /// Generation cost of producing this action.
    pub units: u64,
}

pub trait Policy: Send + Sync {
    fn choose(&self, ctx: &DecisionContext<'_>, rng: &mut dyn RngCore) -> Result<Choice, PolicyError>;

    /// Full distribution over `ctx.candidates`, when the policy can report one.
    fn probabilities(&self, ctx: &DecisionContext<'_>) -> Option<Vec<f64>>;

    fn id(&self) -> String;
}

#[derive(Debug, Clone)]
pub struct SoftmaxPolicy {
    pub params: PolicyParams,
}

impl SoftmaxPolicy {
    pub fn new(params: PolicyParams) -> Self {
        Self { params }
    }
}

impl Policy for SoftmaxPolicy {
    fn choose(&self, ctx: &DecisionContext<'_>, rng: &mut dyn RngCore) -> Result<Choice, PolicyError> {
        if ctx.candidates.is_empty() {
            return Err(PolicyError::EmptyCandidates);
        }
        let (index, logprob) = sample(&self.params, ctx.features, rng)?;
        let action = ctx.candidates[index].clone();
        Ok(Choice {
            index,
            units: action.chars().count() as u64,
            action,
            logprob: Some(logprob),
        })
    }

    fn probabilities(&self, ctx: &DecisionContext<'_>) -> Option<Vec<f64>> {
        action_distribution(&self.params, ctx.features).ok()
    }

    fn id(&self) -> String {
        format!("softmax:{}", self.params.snapshot_id())
    }
}
