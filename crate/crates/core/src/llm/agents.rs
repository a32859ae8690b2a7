//! Policy, critic and refiner backed by a chat model.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::RngCore;

use super::parse::{parse_action_tag, parse_critic_response};
use super::prompts::{render, TemplateId};
use super::{ChatBackend, ChatMessage, LlmError};
use crate::critic::{Critic, CriticError, Critique, CritiqueRecord, CritiqueRequest, RefineRequest, Refinement, Refiner};
use crate::env::{normalize, EnvKind};
use crate::policy::{Choice, DecisionContext, Policy, PolicyError};
use crate::trajectory::Trajectory;

const POLICY_SYSTEM: &str = "You are an agent acting in a text environment. Think step by step inside \
<think> </think> tags, then give exactly one admissible action inside <action> </action> tags.";

fn state_prompt(task: &str, state_text: &str, candidates: &[String]) -> String {
    format!(
        "{task}\n\n{state_text}\n\nAdmissible actions:\n{}",
        candidates.iter().map(|c| format!("- {c}")).collect::<Vec<_>>().join("\n")
    )
}

fn history(trajectory: &Trajectory) -> String {
    if trajectory.steps.is_empty() {
        return "(none)".into();
    }
    trajectory
        .steps
        .iter()
        .map(|s| {
            format!(
                "Step {}\nAction: {}\nObservation: {}",
                s.index + 1,
                s.action,
                s.observation.as_deref().unwrap_or("")
            )
        })
        .collect::<Vec<_>>()
        .join("\n\n")
}

/// Index of the candidate the model named: exact match after normalization,
/// otherwise the unique best word overlap.
pub(crate) fn match_candidate(answer: &str, candidates: &[String]) -> Option<usize> {
    let want = normalize(answer);
    if let Some(i) = candidates.iter().position(|c| normalize(c) == want) {
        return Some(i);
    }
    let words = |s: &str| -> Vec<String> {
        normalize(s)
            .split(|c: char| !c.is_alphanumeric())
            .filter(|w| !w.is_empty())
            .map(str::to_string)
            .collect()
    };
    let aw = words(answer);
    let scored: Vec<(usize, usize)> = candidates
        .iter()
        .enumerate()
        .map(|(i, c)| (i, words(c).iter().filter(|w| aw.contains(w)).count()))
        .collect();
    let best = scored.iter().map(|s| s.1).max()?;
    if best == 0 {
        return None;
    }
    let mut top = scored.iter().filter(|s| s.1 == best);
    let first = top.next()?.0;
    top.next().is_none().then_some(first)
}

fn backend_err(e: LlmError) -> String {
    e.to_string()
}

pub struct LlmPolicy {
    backend: Arc<dyn ChatBackend>,
    max_retries: u32,
    name: String,
}

impl LlmPolicy {
    pub fn new(backend: Arc<dyn ChatBackend>, max_retries: u32, name: impl Into<String>) -> Self {
        Self {
            backend,
            max_retries,
            name: name.into(),
        }
    }
}

impl Policy for LlmPolicy {
    fn choose(&self, ctx: &DecisionContext<'_>, _rng: &mut dyn RngCore) -> Result<Choice, PolicyError> {
        if ctx.candidates.is_empty() {
            return Err(PolicyError::EmptyCandidates);
        }
        let mut messages = vec![
            ChatMessage::system(POLICY_SYSTEM),
            ChatMessage::user(state_prompt(
                &ctx.description.task_description,
                ctx.state_text,
                ctx.candidates,
            )),
        ];
        let mut units = 0;
        for attempt in 0..=self.max_retries {
            let c = self
                .backend
                .complete(&messages)
                .map_err(|e| PolicyError::Backend(backend_err(e)))?;
            units += c.usage.completion_units;
            if let Some(i) = parse_action_tag(&c.text).and_then(|a| match_candidate(a, ctx.candidates)) {
                return Ok(Choice {
                    index: i,
                    action: ctx.candidates[i].clone(),
                    logprob: None,
                    units,
                });
            }
            log::debug!("policy reply {attempt} named no admissible action");
            messages.push(ChatMessage::assistant(c.text));
            messages.push(ChatMessage::user(
                "Your reply did not name an admissible action. Answer again with one admissible action inside <action> </action> tags.",
            ));
        }
        log::warn!("policy never named an admissible action; taking the first candidate");
        Ok(Choice {
            index: 0,
            action: ctx.candidates[0].clone(),
            logprob: None,
            units,
        })
    }

    fn probabilities(&self, _ctx: &DecisionContext<'_>) -> Option<Vec<f64>> {
        None
    }

    fn id(&self) -> String {
        format!("llm:{}", self.name)
    }
}

/// Critic that prompts a chat model with the environment's critic template.
/// Unparseable replies are re-prompted; after the retry budget the step is
/// scored 10 so the rollout proceeds as vanilla.
pub struct LlmCritic {
    backend: Arc<dyn ChatBackend>,
    max_retries: u32,
}

impl LlmCritic {
    pub fn new(backend: Arc<dyn ChatBackend>, max_retries: u32) -> Self {
        Self { backend, max_retries }
    }

    fn bindings(req: &CritiqueRequest<'_>) -> (TemplateId, BTreeMap<String, String>) {
        let d = req.env_before.describe();
        let mut b = BTreeMap::new();
        match d.kind {
            EnvKind::Search => {
                let mut call = req.action.to_string();
                if let Some(obs) = req.next_observation {
                    call.push_str("\nRetrieved documents:\n");
                    call.push_str(obs);
                }
                b.insert("problem".into(), d.task_description);
                b.insert("tool_results".into(), call);
                b.insert("history".into(), history(req.trajectory));
                (TemplateId::SearchCritic, b)
            }
            EnvKind::Corridor => {
                let latest = req.next_observation.unwrap_or(req.env_before.last_observation());
                b.insert("task_description".into(), d.task_description);
                b.insert("environment_config".into(), d.environment_config);
                b.insert("action_history".into(), history(req.trajectory));
                b.insert("admissible_actions".into(), req.env_before.candidates().join(", "));
                b.insert("latest_observation".into(), latest.to_string());
                b.insert("agent_action".into(), req.action.to_string());
                (TemplateId::CorridorCritic, b)
            }
        }
    }
}

impl Critic for LlmCritic {
    fn critique(&self, req: &CritiqueRequest<'_>) -> Result<Critique, CriticError> {
        let (template, bindings) = Self::bindings(req);
        let prompt = render(template, &bindings).map_err(|e| CriticError::Backend(e.to_string()))?;
        let mut messages = vec![ChatMessage::user(prompt)];
        let mut units = 0;
        let mut last_error = String::new();
        for _ in 0..=self.max_retries {
            let c = self
                .backend
                .complete(&messages)
                .map_err(|e| CriticError::Backend(backend_err(e)))?;
            units += c.usage.completion_units;
            match parse_critic_response(&c.text) {
                Ok(record) => return Ok(Critique { record, units }),
                Err(e) => {
                    last_error = e.to_string();
                    messages.push(ChatMessage::assistant(c.text));
                    messages.push(ChatMessage::user(format!(
                        "Your reply could not be read ({e}). Output the JSON object inside a single ```json code block."
                    )));
                }
            }
        }
        log::warn!("critic output unparseable after retries ({last_error}); scoring the step 10");
        Ok(Critique {
            record: CritiqueRecord {
                score: 10,
                critique: format!("unparseable critic output: {last_error}"),
                suggestion_action: None,
                suggestion_reasoning: None,
            },
            units,
        })
    }
}

/// Refiner that replays the step to a chat model with the critic's feedback.
pub struct LlmRefiner {
    backend: Arc<dyn ChatBackend>,
    max_retries: u32,
}

impl LlmRefiner {
    pub fn new(backend: Arc<dyn ChatBackend>, max_retries: u32) -> Self {
        Self { backend, max_retries }
    }

    fn prompt(req: &RefineRequest<'_>, kind: EnvKind) -> Result<String, LlmError> {
        let r = req.record;
        let mut b = BTreeMap::new();
        match (&r.suggestion_action, kind) {
            (Some(s), EnvKind::Search) => {
                b.insert("critique_score".into(), r.score.to_string());
                b.insert("critique_content".into(), r.critique.clone());
                b.insert("critique_suggestion".into(), s.clone());
                render(TemplateId::RefineSearch, &b)
            }
            _ => {
                b.insert("latest_step".into(), req.action.to_string());
                b.insert("score".into(), r.score.to_string());
                b.insert("critic_content".into(), r.critique.clone());
                b.insert("admissible_actions".into(), req.candidates.join(", "));
                render(TemplateId::RefineGeneric, &b)
            }
        }
    }
}

impl Refiner for LlmRefiner {
    fn refine(&self, req: &RefineRequest<'_>, _rng: &mut dyn RngCore) -> Result<Refinement, CriticError> {
        if req.candidates.iter().filter(|c| c.as_str() != req.action).count() == 0 {
            return Err(CriticError::NoAlternativeAction);
        }
        let d = req.env_before.describe();
        let prompt = Self::prompt(req, d.kind).map_err(|e| CriticError::Backend(e.to_string()))?;
        let mut messages = vec![
            ChatMessage::system(POLICY_SYSTEM),
            ChatMessage::user(state_prompt(
                &d.task_description,
                &req.env_before.state_text(),
                req.candidates,
            )),
            ChatMessage::assistant(format!("<action>{}</action>", req.action)),
            ChatMessage::user(prompt),
        ];
        let mut units = 0;
        for _ in 0..=self.max_retries {
            let c = self
                .backend
                .complete(&messages)
                .map_err(|e| CriticError::Backend(backend_err(e)))?;
            units += c.usage.completion_units;
            if let Some(i) = parse_action_tag(&c.text).and_then(|a| match_candidate(a, req.candidates)) {
                return Ok(Refinement {
                    index: i,
                    action: req.candidates[i].clone(),
                    units,
                });
            }
            messages.push(ChatMessage::assistant(c.text));
            messages.push(ChatMessage::user(
                "Choose one admissible action and present it within <action> </action> tags.",
            ));
        }
        if let Some(i) = req
            .record
            .suggestion_action
            .as_deref()
            .and_then(|s| match_candidate(s, req.candidates))
        {
            log::warn!("refiner reply unusable; taking the critic's suggestion");
            return Ok(Refinement {
                index: i,
                action: req.candidates[i].clone(),
                units,
            });
        }
        Err(CriticError::UnusableRefinement)
    }
}
