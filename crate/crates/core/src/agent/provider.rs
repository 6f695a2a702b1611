use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::provider::ProviderError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatParams {
    pub temperature: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_output_tokens: Option<u32>,
}

impl Default for ChatParams {
    fn default() -> Self {
        Self {
            temperature: 0.3,
            max_output_tokens: None,
        }
    }
}

impl ChatParams {
    pub fn new(temperature: f64, max_output_tokens: Option<u32>) -> Result<Self, String> {
        if !temperature.is_finite() || temperature < 0.0 {
            return Err(format!("temperature must be >= 0, got {temperature}"));
        }
        Ok(Self {
            temperature,
            max_output_tokens,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChatRequest {
    pub prompt: String,
    pub params: ChatParams,
}

/// A text-in, text-out language model.
pub trait ChatProvider: Send + Sync {
    fn provider_id(&self) -> &str;
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError>;
}

impl<T: ChatProvider + ?Sized> ChatProvider for std::sync::Arc<T> {
    fn provider_id(&self) -> &str {
        (**self).provider_id()
    }
    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        (**self).complete(request)
    }
}

/// One scripted response. The first rule (in file order) whose `when`
/// substrings all occur in the prompt, whose `unless` substrings are all
/// absent, and which still has uses left, answers the call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MockRule {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub when: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unless: Vec<String>,
    pub response: String,
    /// Number of uses; 0 means unlimited.
    #[serde(default = "one")]
    pub times: u32,
}

fn one() -> u32 {
    1
}

impl MockRule {
    pub fn once(response: impl Into<String>) -> Self {
        Self {
            when: Vec::new(),
            unless: Vec::new(),
            response: response.into(),
            times: 1,
        }
    }

    pub fn keyed(when: &[&str], unless: &[&str], response: impl Into<String>) -> Self {
        Self {
            when: when.iter().map(|s| s.to_string()).collect(),
            unless: unless.iter().map(|s| s.to_string()).collect(),
            response: response.into(),
            times: 0,
        }
    }

    fn matches(&self, prompt: &str) -> bool {
        self.when.iter().all(|w| prompt.contains(w.as_str()))
            && !self.unless.iter().any(|u| prompt.contains(u.as_str()))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ScriptEntry {
    Plain(String),
    Rule(MockRule),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum ScriptFile {
    List(Vec<ScriptEntry>),
    Object {
        #[serde(default)]
        provider_id: Option<String>,
        responses: Vec<ScriptEntry>,
    },
}

/// Scripted chat provider for tests and offline fixtures.
#[derive(Debug)]
pub struct MockChatProvider {
    provider_id: String,
    rules: Vec<MockRule>,
    state: Mutex<MockState>,
}

#[derive(Debug, Default)]
struct MockState {
    used: Vec<u32>,
    prompts: Vec<String>,
}

impl MockChatProvider {
    pub fn new(provider_id: impl Into<String>, rules: Vec<MockRule>) -> Self {
        let used = vec![0; rules.len()];
        Self {
            provider_id: provider_id.into(),
            rules,
            state: Mutex::new(MockState {
                used,
                prompts: Vec::new(),
            }),
        }
    }

    /// Unconditional responses served once each, in order.
    pub fn sequence<S: Into<String>>(responses: impl IntoIterator<Item = S>) -> Self {
        Self::new("mock", responses.into_iter().map(MockRule::once).collect())
    }

    /// Parse a script file: a JSON list of strings/rules, or
    /// `{"provider_id": ..., "responses": [...]}`.
    pub fn from_script(json: &str) -> Result<Self, String> {
        let file: ScriptFile = serde_json::from_str(json).map_err(|e| e.to_string())?;
        let (provider_id, entries) = match file {
            ScriptFile::List(entries) => (None, entries),
            ScriptFile::Object {
                provider_id,
                responses,
            } => (provider_id, responses),
        };
        let rules = entries
            .into_iter()
            .map(|e| match e {
                ScriptEntry::Plain(s) => MockRule::once(s),
                ScriptEntry::Rule(r) => r,
            })
            .collect();
        Ok(Self::new(
            provider_id.unwrap_or_else(|| "mock".into()),
            rules,
        ))
    }

    /// Every prompt received so far, in call order.
    pub fn prompts(&self) -> Vec<String> {
        self.state.lock().expect("mock state").prompts.clone()
    }

    pub fn reset(&self) {
        let mut st = self.state.lock().expect("mock state");
        st.used.iter_mut().for_each(|u| *u = 0);
        st.prompts.clear();
    }
}

impl ChatProvider for MockChatProvider {
    fn provider_id(&self) -> &str {
        &self.provider_id
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        let mut st = self.state.lock().expect("mock state");
        st.prompts.push(request.prompt.clone());
        for (i, rule) in self.rules.iter().enumerate() {
            if (rule.times == 0 || st.used[i] < rule.times) && rule.matches(&request.prompt) {
                st.used[i] += 1;
                return Ok(rule.response.clone());
            }
        }
        let tail: String = {
            let chars: Vec<char> = request.prompt.trim_end().chars().collect();
            chars[chars.len().saturating_sub(160)..].iter().collect()
        };
        Err(ProviderError::Unavailable(format!(
            "mock script has no response for this prompt (ending {tail:?})"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn req(p: &str) -> ChatRequest {
        ChatRequest {
            prompt: p.into(),
            params: ChatParams::default(),
        }
    }

    #[test]
    fn sequence_then_exhausted() {
        let m = MockChatProvider::sequence(["a", "b"]);
        assert_eq!(m.complete(&req("x")).unwrap(), "a");
        assert_eq!(m.complete(&req("x")).unwrap(), "b");
        assert!(m.complete(&req("x")).is_err());
        m.reset();
        assert_eq!(m.complete(&req("x")).unwrap(), "a");
    }

    #[test]
    fn keyed_rules() {
        let script = r#"{"provider_id": "m1", "responses": [
            {"when": ["alpha"], "unless": ["Observation:"], "response": "first", "times": 0},
            {"when": ["alpha", "Observation:"], "response": "second", "times": 0},
            "fallback"
        ]}"#;
        let m = MockChatProvider::from_script(script).unwrap();
        assert_eq!(m.provider_id(), "m1");
        assert_eq!(m.complete(&req("alpha")).unwrap(), "first");
        assert_eq!(m.complete(&req("alpha\nObservation: x")).unwrap(), "second");
        assert_eq!(m.complete(&req("alpha")).unwrap(), "first");
        assert_eq!(m.complete(&req("beta")).unwrap(), "fallback");
        assert_eq!(m.prompts().len(), 4);
    }

    #[test]
    fn negative_temperature_rejected() {
        assert!(ChatParams::new(-0.1, None).is_err());
        assert_eq!(ChatParams::default().temperature, 0.3);
    }
}
