use serde::{Deserialize, Serialize};

use super::provider::ChatProvider;
use super::react::{run_react, AgentTranscript, ReactConfig};
use super::template::{render_prompt, PromptVars};
use super::tool::ToolRegistry;
use super::AgentError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryEntry {
    pub chunk_id: String,
    pub summary: String,
}

/// Per-stage conversational memory: one entry per processed chunk, kept in
/// processing order.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BufferMemory {
    entries: Vec<MemoryEntry>,
}

impl BufferMemory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn append(
        &mut self,
        chunk_id: impl Into<String>,
        summary: impl Into<String>,
    ) -> Result<(), AgentError> {
        let chunk_id = chunk_id.into();
        if self.entries.iter().any(|e| e.chunk_id == chunk_id) {
            return Err(AgentError::DuplicateMemoryEntry(chunk_id));
        }
        self.entries.push(MemoryEntry {
            chunk_id,
            summary: summary.into(),
        });
        Ok(())
    }

    pub fn entries(&self) -> &[MemoryEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    /// The `{memory_entries}` block.
    pub fn render(&self) -> String {
        self.entries
            .iter()
            .map(|e| {
                format!(
                    "Memory Entry:\nChunk ID: {}\n{}",
                    e.chunk_id,
                    e.summary.trim()
                )
            })
            .collect::<Vec<_>>()
            .join("\n\n")
    }
}

/// Run one ReAct loop over the synthesis template with the rendered memory.
/// `vars` supplies everything except `memory_entries`, `tools`,
/// `tool_names` and `agent_scratchpad`.
pub fn synthesize(
    provider: &dyn ChatProvider,
    memory: &BufferMemory,
    template_id: &str,
    vars: &PromptVars,
    tools: &ToolRegistry,
    config: &ReactConfig,
) -> Result<AgentTranscript, AgentError> {
    if memory.is_empty() {
        return Err(AgentError::EmptyMemory);
    }
    let mut vars = vars.clone();
    vars.insert("memory_entries".into(), memory.render());
    let prompt = react_prompt(template_id, &vars, tools)?;
    run_react(provider, &prompt, tools, config)
}

/// Render a ReAct template, binding the tool block, tool names and an empty
/// scratchpad from the registry.
pub fn react_prompt(
    template_id: &str,
    vars: &PromptVars,
    tools: &ToolRegistry,
) -> Result<String, AgentError> {
    let mut vars = vars.clone();
    vars.insert("tools".into(), tools.describe());
    vars.insert("tool_names".into(), tools.name_list());
    vars.insert("agent_scratchpad".into(), String::new());
    render_prompt(template_id, &vars)
}
