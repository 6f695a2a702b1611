//! The Thought / Action / Observation loop.

use serde::{Deserialize, Serialize};

use super::parse::{parse_step, truncate_at_observation, ParsedStep};
use super::provider::{ChatParams, ChatProvider, ChatRequest};
use super::tool::ToolRegistry;
use super::AgentError;
use crate::util::sha256_hex;

pub const DEFAULT_MAX_STEPS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StepKind {
    Thought,
    Action,
    Observation,
    FinalAnswer,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentStep {
    pub kind: StepKind,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tool_input: Option<String>,
    /// Record ids an observation drew on.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub refs: Vec<String>,
}

impl AgentStep {
    fn plain(kind: StepKind, text: impl Into<String>) -> Self {
        Self {
            kind,
            text: text.into(),
            tool_name: None,
            tool_input: None,
            refs: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TranscriptStatus {
    Completed,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentTranscript {
    pub prompt_hash: String,
    pub provider_id: String,
    pub steps: Vec<AgentStep>,
    /// Empty when the loop failed.
    pub final_answer: String,
    pub status: TranscriptStatus,
    /// Number of model calls made, repair re-asks included.
    pub step_count: usize,
}

impl AgentTranscript {
    /// Every ref returned by a tool during the loop, in first-seen order.
    pub fn observed_refs(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for s in &self.steps {
            for r in &s.refs {
                if !out.contains(r) {
                    out.push(r.clone());
                }
            }
        }
        out
    }

    /// Text the model itself wrote (thoughts, actions, final answer).
    pub fn model_text(&self) -> String {
        self.steps
            .iter()
            .filter(|s| s.kind != StepKind::Observation)
            .map(|s| s.text.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReactConfig {
    pub max_steps: usize,
    pub params: ChatParams,
}

impl Default for ReactConfig {
    fn default() -> Self {
        Self {
            max_steps: DEFAULT_MAX_STEPS,
            params: ChatParams::default(),
        }
    }
}

const REPAIR_NOTE: &str = "Invalid Format: reply with either \"Action:\" followed by \"Action Input:\", or \"Final Answer:\".";

/// Run the loop. `prompt` is the rendered template with an empty
/// scratchpad; each turn re-sends it with the scratchpad appended.
pub fn run_react(
    provider: &dyn ChatProvider,
    prompt: &str,
    tools: &ToolRegistry,
    config: &ReactConfig,
) -> Result<AgentTranscript, AgentError> {
    if tools.is_empty() {
        return Err(AgentError::NoTools);
    }
    if config.max_steps == 0 {
        return Err(AgentError::InvalidConfig(
            "max_steps must be at least 1".into(),
        ));
    }
    let names = tools.names();
    let mut transcript = AgentTranscript {
        prompt_hash: sha256_hex(prompt),
        provider_id: provider.provider_id().to_string(),
        steps: Vec::new(),
        final_answer: String::new(),
        status: TranscriptStatus::Failed,
        step_count: 0,
    };
    let mut scratchpad = String::new();
    let mut repairing: Option<String> = None;

    while transcript.step_count < config.max_steps {
        let mut full = String::with_capacity(prompt.len() + scratchpad.len());
        full.push_str(prompt);
        full.push_str(&scratchpad);
        let request = ChatRequest {
            prompt: full,
            params: config.params.clone(),
        };
        let raw = provider.complete(&request)?;
        transcript.step_count += 1;
        let text = truncate_at_observation(&raw).trim_end().to_string();

        let parsed = match parse_step(&text, &names) {
            Ok(ParsedStep::ThoughtOnly(_)) => Err(AgentError::UnparseableStep(
                "thought without Action or Final Answer".into(),
            )),
            other => other,
        };
        let step = match parsed {
            Ok(step) => step,
            Err(AgentError::UnparseableStep(detail)) => {
                if repairing.is_some() {
                    return Err(AgentError::UnparseableStep(detail));
                }
                scratchpad.push_str(&format!("{text}\nObservation: {REPAIR_NOTE}\nThought:"));
                repairing = Some(detail);
                continue;
            }
            Err(e) => return Err(e),
        };
        repairing = None;

        match step {
            ParsedStep::Final { thought, answer } => {
                if let Some(t) = thought {
                    transcript
                        .steps
                        .push(AgentStep::plain(StepKind::Thought, t));
                }
                transcript
                    .steps
                    .push(AgentStep::plain(StepKind::FinalAnswer, answer.clone()));
                transcript.final_answer = answer;
                transcript.status = TranscriptStatus::Completed;
                return Ok(transcript);
            }
            ParsedStep::Action {
                thought,
                tool,
                input,
            }
            | ParsedStep::UnknownTool {
                thought,
                tool,
                input,
            } => {
                if let Some(t) = thought {
                    transcript
                        .steps
                        .push(AgentStep::plain(StepKind::Thought, t));
                }
                transcript.steps.push(AgentStep {
                    kind: StepKind::Action,
                    text: format!("{tool}: {input}"),
                    tool_name: Some(tool.clone()),
                    tool_input: Some(input.clone()),
                    refs: Vec::new(),
                });
                let (observation, refs) = match tools.get(&tool) {
                    Some(handler) => match handler.call(&input) {
                        Ok(out) => (out.text, out.refs),
                        Err(e) => (format!("Error: {e}"), Vec::new()),
                    },
                    None => (
                        format!(
                            "{tool} is not a valid tool, try one of [{}].",
                            tools.name_list()
                        ),
                        Vec::new(),
                    ),
                };
                transcript.steps.push(AgentStep {
                    kind: StepKind::Observation,
                    text: observation.clone(),
                    tool_name: Some(tool),
                    tool_input: None,
                    refs,
                });
                scratchpad.push_str(&format!("{text}\nObservation: {observation}\nThought:"));
            }
            ParsedStep::ThoughtOnly(_) => unreachable!("mapped to unparseable"),
        }
    }
    Err(AgentError::StepLimitExceeded {
        max_steps: config.max_steps,
        transcript: Box::new(transcript),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agent::provider::MockChatProvider;
    use crate::agent::tool::{Tool, ToolOutput};

    fn registry() -> ToolRegistry {
        ToolRegistry::new()
            .with(Tool::new("kg_retriever", "Retrieves KG entities", |q| {
                Ok(ToolOutput::with_refs(
                    format!("G1: goal about {q}"),
                    vec!["G1".into()],
                ))
            }))
            .unwrap()
            .with(Tool::new("broken", "Always fails", |_| {
                Err("backend down".into())
            }))
            .unwrap()
    }

    #[test]
    fn happy_path() {
        let p = MockChatProvider::sequence([
            "Thought: look up housing\nAction: kg_retriever\nAction Input: housing",
            "Final Answer: G1 is relevant",
        ]);
        let t = run_react(
            &p,
            "Question: q\nThought:",
            &registry(),
            &ReactConfig::default(),
        )
        .unwrap();
        let kinds: Vec<StepKind> = t.steps.iter().map(|s| s.kind).collect();
        assert_eq!(
            kinds,
            [
                StepKind::Thought,
                StepKind::Action,
                StepKind::Observation,
                StepKind::FinalAnswer
            ]
        );
        assert_eq!(t.final_answer, "G1 is relevant");
        assert_eq!(t.status, TranscriptStatus::Completed);
        assert_eq!(t.step_count, 2);
        assert_eq!(t.observed_refs(), ["G1"]);
        let second = &p.prompts()[1];
        assert!(second.ends_with("Observation: G1: goal about housing\nThought:"));
    }

    #[test]
    fn step_limit() {
        let p = MockChatProvider::new(
            "mock",
            vec![crate::agent::provider::MockRule::keyed(
                &[],
                &[],
                "Thought: again\nAction: kg_retriever\nAction Input: x",
            )],
        );
        match run_react(&p, "Q", &registry(), &ReactConfig::default()) {
            Err(AgentError::StepLimitExceeded {
                max_steps,
                transcript,
            }) => {
                assert_eq!(max_steps, 8);
                assert_eq!(transcript.step_count, 8);
                assert_eq!(transcript.status, TranscriptStatus::Failed);
                assert!(transcript
                    .steps
                    .iter()
                    .all(|s| s.kind != StepKind::FinalAnswer));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn tool_error_and_unknown_tool_become_observations() {
        let p = MockChatProvider::sequence([
            "Action: broken\nAction Input: a",
            "Action: wikipedia\nAction Input: b",
            "Final Answer: ok",
        ]);
        let t = run_react(&p, "Q", &registry(), &ReactConfig::default()).unwrap();
        let obs: Vec<&str> = t
            .steps
            .iter()
            .filter(|s| s.kind == StepKind::Observation)
            .map(|s| s.text.as_str())
            .collect();
        assert_eq!(obs[0], "Error: backend down");
        assert!(obs[1].starts_with("wikipedia is not a valid tool"));
        assert_eq!(t.final_answer, "ok");
    }

    #[test]
    fn one_repair_then_failure() {
        let p = MockChatProvider::sequence(["rambling", "Final Answer: fixed"]);
        let t = run_react(&p, "Q", &registry(), &ReactConfig::default()).unwrap();
        assert_eq!(t.final_answer, "fixed");
        assert!(p.prompts()[1].contains("Invalid Format"));

        let p = MockChatProvider::sequence(["rambling", "still rambling"]);
        assert!(matches!(
            run_react(&p, "Q", &registry(), &ReactConfig::default()),
            Err(AgentError::UnparseableStep(_))
        ));
    }

    #[test]
    fn provider_failure_propagates() {
        let p = MockChatProvider::sequence(Vec::<String>::new());
        assert!(matches!(
            run_react(&p, "Q", &registry(), &ReactConfig::default()),
            Err(AgentError::Provider(_))
        ));
    }

    #[test]
    fn replay_is_identical() {
        let script = [
            "Thought: a\nAction: kg_retriever\nAction Input: water",
            "Final Answer: done",
        ];
        let run = || {
            let p = MockChatProvider::sequence(script);
            serde_json::to_string(
                &run_react(&p, "Q", &registry(), &ReactConfig::default()).unwrap(),
            )
            .unwrap()
        };
        assert_eq!(run(), run());
    }
}
