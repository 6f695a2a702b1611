//! Plain-text ReAct step parser.

use super::AgentError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParsedStep {
    Action {
        thought: Option<String>,
        tool: String,
        input: String,
    },
    /// The model named a tool that is not registered. Recoverable: the loop
    /// reports it back as an observation.
    UnknownTool {
        thought: Option<String>,
        tool: String,
        input: String,
    },
    Final {
        thought: Option<String>,
        answer: String,
    },
    /// A thought with neither an action nor a final answer.
    ThoughtOnly(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Marker {
    Thought,
    Action,
    ActionInput,
    FinalAnswer,
    Observation,
}

const MARKERS: &[(&str, Marker)] = &[
    ("Thought:", Marker::Thought),
    ("Action Input:", Marker::ActionInput),
    ("Action:", Marker::Action),
    ("Final Answer:", Marker::FinalAnswer),
    ("Observation:", Marker::Observation),
];

fn line_marker(line: &str) -> Option<(Marker, &str)> {
    let t = line.trim_start();
    MARKERS
        .iter()
        .find_map(|(tag, m)| t.strip_prefix(tag).map(|rest| (*m, rest)))
}

/// Drop anything from the first line-leading `Observation:` on; models
/// sometimes hallucinate tool output.
pub fn truncate_at_observation(text: &str) -> &str {
    let mut offset = 0;
    for line in text.split_inclusive('\n') {
        if matches!(line_marker(line), Some((Marker::Observation, _))) {
            return &text[..offset];
        }
        offset += line.len();
    }
    text
}

fn clean_input(s: &str) -> String {
    let t = s.trim();
    let t = t
        .strip_prefix('`')
        .and_then(|x| x.strip_suffix('`'))
        .unwrap_or(t);
    let t = t
        .strip_prefix('"')
        .and_then(|x| x.strip_suffix('"'))
        .unwrap_or(t);
    t.trim().to_string()
}

fn non_empty(s: String) -> Option<String> {
    let t = s.trim();
    (!t.is_empty()).then(|| t.to_string())
}

/// Parse one model turn. Text before the first marker is taken as the
/// thought, since prompts end with a bare `Thought:`.
pub fn parse_step<S: AsRef<str>>(
    model_text: &str,
    tool_names: &[S],
) -> Result<ParsedStep, AgentError> {
    let text = truncate_at_observation(model_text);
    if text.trim().is_empty() {
        return Err(AgentError::UnparseableStep("empty model output".into()));
    }
    let mut sections: Vec<(Option<Marker>, String)> = vec![(None, String::new())];
    for line in text.lines() {
        match line_marker(line) {
            Some((m, rest)) => sections.push((Some(m), rest.trim_start().to_string())),
            None => {
                let marked = sections.len() > 1;
                let cur = &mut sections.last_mut().expect("non-empty").1;
                if !cur.is_empty() || marked {
                    cur.push('\n');
                }
                cur.push_str(line);
            }
        }
    }
    if sections.len() == 1 {
        return Err(AgentError::UnparseableStep(format!(
            "no Thought/Action/Final Answer marker in: {}",
            preview(text)
        )));
    }
    let mut thought: Option<String> = non_empty(sections[0].1.clone());
    let mut action: Option<String> = None;
    let mut input: Option<String> = None;
    for (marker, body) in sections.into_iter().skip(1) {
        match marker.expect("marked section") {
            Marker::Thought => {
                if action.is_none() {
                    if let Some(t) = non_empty(body) {
                        thought = Some(match thought {
                            Some(prev) => format!("{prev}\n{t}"),
                            None => t,
                        });
                    }
                }
            }
            Marker::Action => {
                if action.is_none() {
                    action = Some(body.trim().to_string());
                }
            }
            Marker::ActionInput => {
                if action.is_some() && input.is_none() {
                    input = Some(clean_input(&body));
                }
            }
            Marker::FinalAnswer => {
                if action.is_none() {
                    let answer = body.trim().to_string();
                    if answer.is_empty() {
                        return Err(AgentError::UnparseableStep("empty Final Answer".into()));
                    }
                    return Ok(ParsedStep::Final { thought, answer });
                }
            }
            Marker::Observation => unreachable!("truncated above"),
        }
    }
    match (action, input) {
        (Some(tool), Some(input)) => {
            if tool.is_empty() {
                return Err(AgentError::UnparseableStep("empty Action name".into()));
            }
            let tool = tool
                .trim_matches(|c| c == '[' || c == ']' || c == '`')
                .trim()
                .to_string();
            if tool_names.iter().any(|n| n.as_ref() == tool) {
                Ok(ParsedStep::Action {
                    thought,
                    tool,
                    input,
                })
            } else {
                Ok(ParsedStep::UnknownTool {
                    thought,
                    tool,
                    input,
                })
            }
        }
        (Some(tool), None) => Err(AgentError::UnparseableStep(format!(
            "Action '{tool}' without Action Input"
        ))),
        (None, _) => match thought {
            Some(t) => Ok(ParsedStep::ThoughtOnly(t)),
            None => Err(AgentError::UnparseableStep("marker without content".into())),
        },
    }
}

fn preview(text: &str) -> String {
    let t: String = text.trim().chars().take(80).collect();
    format!("{t:?}")
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOOLS: &[&str] = &["taxonomy_retriever", "kg_retriever"];

    #[test]
    fn action_step() {
        let s = parse_step(
            "Thought: check catalog\nAction: taxonomy_retriever\nAction Input: energy",
            TOOLS,
        )
        .unwrap();
        assert_eq!(
            s,
            ParsedStep::Action {
                thought: Some("check catalog".into()),
                tool: "taxonomy_retriever".into(),
                input: "energy".into()
            }
        );
    }

    #[test]
    fn final_answer_multiline() {
        let s = parse_step("Final Answer: SR list follows\n- one\n- two", TOOLS).unwrap();
        assert_eq!(
            s,
            ParsedStep::Final {
                thought: None,
                answer: "SR list follows\n- one\n- two".into()
            }
        );
    }

    #[test]
    fn leading_text_is_thought() {
        let s = parse_step(" I know it now.\nFinal Answer: done", TOOLS).unwrap();
        assert_eq!(
            s,
            ParsedStep::Final {
                thought: Some("I know it now.".into()),
                answer: "done".into()
            }
        );
    }

    #[test]
    fn unknown_tool_is_recoverable() {
        let s = parse_step("Action: wikipedia\nAction Input: x", &["kg_retriever"]).unwrap();
        assert!(matches!(s, ParsedStep::UnknownTool { ref tool, .. } if tool == "wikipedia"));
    }

    #[test]
    fn hallucinated_observation_is_cut() {
        let s = parse_step(
            "Thought: look\nAction: kg_retriever\nAction Input: \"water\"\nObservation: made up\nFinal Answer: nope",
            TOOLS,
        )
        .unwrap();
        assert_eq!(
            s,
            ParsedStep::Action {
                thought: Some("look".into()),
                tool: "kg_retriever".into(),
                input: "water".into()
            }
        );
    }

    #[test]
    fn no_marker_is_unparseable() {
        assert!(matches!(
            parse_step("just chatting", TOOLS),
            Err(AgentError::UnparseableStep(_))
        ));
        assert!(matches!(
            parse_step("   ", TOOLS),
            Err(AgentError::UnparseableStep(_))
        ));
        assert!(matches!(
            parse_step("Action: kg_retriever", TOOLS),
            Err(AgentError::UnparseableStep(_))
        ));
    }

    #[test]
    fn thought_only() {
        assert_eq!(
            parse_step("Thought: hmm", TOOLS).unwrap(),
            ParsedStep::ThoughtOnly("hmm".into())
        );
    }
}
