//! Critic, refinement and judge prompt templates.
//!
//! Bodies use format-string conventions: `{name}` is a placeholder, `{{` and
//! `}}` are literal braces.

use std::collections::BTreeMap;

use super::{ChatMessage, LlmError};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TemplateId {
    SearchCritic,
    CorridorCritic,
    RefineSearch,
    RefineGeneric,
    /// Stored for users wiring real QA datasets; the synthetic verifiers are exact.
    Judge,
}

impl TemplateId {
    pub const ALL: [TemplateId; 5] = [
        TemplateId::SearchCritic,
        TemplateId::CorridorCritic,
        TemplateId::RefineSearch,
        TemplateId::RefineGeneric,
        TemplateId::Judge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TemplateId::SearchCritic => "search_critic",
            TemplateId::CorridorCritic => "corridor_critic",
            TemplateId::RefineSearch => "refine_search",
            TemplateId::RefineGeneric => "refine_generic",
            TemplateId::Judge => "judge",
        }
    }

    pub fn from_name(name: &str) -> Result<Self, LlmError> {
        Self::ALL
            .into_iter()
            .find(|t| t.name() == name)
            .ok_or_else(|| LlmError::UnknownTemplate(name.to_string()))
    }

    pub fn body(self) -> &'static str {
        match self {
            TemplateId::SearchCritic => SEARCH_CRITIC,
            TemplateId::CorridorCritic => CORRIDOR_CRITIC,
            TemplateId::RefineSearch => REFINE_SEARCH,
            TemplateId::RefineGeneric => REFINE_GENERIC,
            TemplateId::Judge => JUDGE,
        }
    }

    /// Placeholder names in order of first appearance.
    pub fn placeholders(self) -> Vec<String> {
        let mut out = Vec::new();
        for piece in tokenize(self.body()) {
            if let Piece::Hole(name) = piece {
                if !out.iter().any(|n| n == name) {
                    out.push(name.to_string());
                }
            }
        }
        out
    }
}

const SEARCH_CRITIC: &str = r#"You are an expert in solving difficult problems through reasoning and retrieval.

Currently, an agent is attempting to answer a question through multi-round calls to search tools. The question, the agent's current action and retrieved documents, and history turns are provided.

Your task is to evaluate and score one round of the agent's calls, determining whether the search queries in the current round is correct for answering the question.

The score ranges from 0 to 10, where 0 means completely incorrect and 10 means completely correct.

Your score and analysis will serve as feedback to help the agent decide whether to revise the search terms or proceed to the next round of retrieval and reasoning.
If feeling necessary, you can also output your revised search terms and a supporting thinking process for these search queries.

Output format: The final output is list data in JSON format as

``` json

{{"score": score, "critique": "your analysis", "suggestion_search_keywords": "[your revised queries,...]", "suggestion_search_reasoning": "step-by-step reasoning that supports the improved query as if you are the agent for it to learn from, without mentioning the current tool call and you are a critic."}}

```

Question: {problem}

Search Query: {tool_results}

History Turns: {history}"#;

const CORRIDOR_CRITIC: &str = r#"You are an expert evaluator observing an agent trying to complete a task in a household environment.

You will be provided with the agent's task description, the environment's configuration, a history of its previous actions and observations, current admissible actions, and the agent's most recent action.

- Agent's Task: {task_description}

- Environment Configuration: {environment_config}

- History Turns (observations and the corresponding actions the agent took): {action_history}

- Admissible Actions: {admissible_actions}

- Agent's Latest Observation: {latest_observation}

- Agent's Latest Action: {agent_action}

Your goal is to evaluate and score the quality of the agent's latest action, determining if it is a good action for accomplishing the task. The score ranges from 0 to 10, where 0 means completely incorrect and 10 means completely correct.
Also give a consice yet complete analysis of the agent's last action. Was it logical? Did it move closer to the goal? Did it make a mistake?
If feeling neccessary (like the action is misleading), you can suggest a better candidate action FROM admissible actions together with your step-by-step reasoning. Your suggested action and reasoning may be used by the agent to improve its performance, so ensure the action is from the admissible actions and the reasoning is from an expert agent's first-person view.


Output Format: Output your critic result in JSON format as

```json

{{"score": {{score}}, "critique": "{{your analysis}}", "suggestion_action": "{{The better admissible action you suggest}}", "suggestion_thought": "{{Your detailed step-by-step reasoning for the better action.}} "}}

```

Ensure to enclose the entire JSON output within a single markdown code block."#;

const REFINE_GENERIC: &str = r#"An expert critic has commented on your latest step {latest_step}, judging the quality of your latest step and whether it helps finishing your task.

- Critic's Overall Ratings (0-10): {score}.

- Critic's Analysis on your previous step: {critic_content}

Your admissible actions of the current situation are: {admissible_actions}.

Carefully read and understand the critic's feedback, and it's your turn to refine the step and retake an feasible action based on the feedback.

You should first reason step-by-step about the previous situation. This reasoning process MUST be enclosed within <think> </think> tags, and do not include any information about the critic, as if it's your first time making the action.

Once you've finished your reasoning, you should choose an admissible action for current step and present it within <action> </action> tags."#;

const REFINE_SEARCH: &str = r#"A critic has read and analysed your previous step:


- Critic's Overall Ratings (0-10): {critique_score}

- Critic's Analysis on your previous step: {critique_content}

- Critic's Suggestion search keywords: {critique_suggestion}


Based on the critic's feedback, redo your previous tool call to improve its correctness and quality, in order to better solve the problem.

Note: When you redo and refine the tool call, you should act as if you are making the action the first time, do not add any information about the critic."#;

const JUDGE: &str = r#"You are an impartial judge evaluating the correctness of an AI assistant's answer.

[Question]

{question}

[Correct Answer]

{reference_answer}

[Assistant's Answer]

{assistant_answer}

Task: Determine if the assistant's answer is correct by comparing it to the correct answer.

Instructions:

1. Extract the final answer from the assistant's response

2. Compare it with the correct answer

3. Provide your reasoning

4. Answer with "yes" if correct, "no" if incorrect"#;

enum Piece<'a> {
    Text(&'a str),
    Hole(&'a str),
}

fn tokenize(body: &str) -> Vec<Piece<'_>> {
    let mut out = Vec::new();
    let mut rest = body;
    while !rest.is_empty() {
        if let Some(r) = rest.strip_prefix("{{") {
            out.push(Piece::Text("{"));
            rest = r;
        } else if let Some(r) = rest.strip_prefix("}}") {
            out.push(Piece::Text("}"));
            rest = r;
        } else if let Some(r) = rest.strip_prefix('{') {
            let end = r.find('}').expect("template placeholders are closed");
            out.push(Piece::Hole(&r[..end]));
            rest = &r[end + 1..];
        } else {
            let end = rest.find(['{', '}']).unwrap_or(rest.len());
            let end = if end == 0 { 1 } else { end };
            out.push(Piece::Text(&rest[..end]));
            rest = &rest[end..];
        }
    }
    out
}

/// Substitutes every placeholder. Missing or unexpected bindings are errors.
pub fn render(template: TemplateId, bindings: &BTreeMap<String, String>) -> Result<String, LlmError> {
    let expected = template.placeholders();
    if let Some(extra) = bindings.keys().find(|k| !expected.contains(k)) {
        return Err(LlmError::UnexpectedBinding(extra.clone()));
    }
    let mut out = String::with_capacity(template.body().len());
    for piece in tokenize(template.body()) {
        match piece {
            Piece::Text(t) => out.push_str(t),
            Piece::Hole(name) => out.push_str(
                bindings
                    .get(name)
                    .ok_or_else(|| LlmError::MissingBinding(name.to_string()))?,
            ),
        }
    }
    Ok(out)
}

/// Renders a template by name into a single user message.
pub fn render_prompt(template_id: &str, bindings: &BTreeMap<String, String>) -> Result<Vec<ChatMessage>, LlmError> {
    let t = TemplateId::from_name(template_id)?;
    Ok(vec![ChatMessage::user(render(t, bindings)?)])
}
