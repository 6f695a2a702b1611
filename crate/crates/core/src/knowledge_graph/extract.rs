use serde::{Deserialize, Serialize};

use super::model::{GraphDoc, IdRemap};
use super::parse::{normalize_ids, parse_graph_text};
use super::validate::{validate, ValidationReport};
use super::GraphError;
use crate::agent::{render_prompt, vars, ChatParams, ChatProvider, ChatRequest};

/// Result of one extraction run, with everything needed for review.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Extraction {
    pub doc: GraphDoc,
    pub report: ValidationReport,
    pub remap: Vec<IdRemap>,
    pub provider_id: String,
    /// Model output per attempt (one, or two after a repair re-ask).
    pub raw_outputs: Vec<String>,
}

/// Ask the model for a graph of the standards document. One repair re-ask
/// on unparseable output, then failure.
pub fn extract_graph(
    document: &str,
    provider: &dyn ChatProvider,
    params: &ChatParams,
) -> Result<Extraction, GraphError> {
    if document.trim().is_empty() {
        return Err(GraphError::EmptyDocument);
    }
    let prompt = render_prompt("kg_extraction", &vars([("document", document.trim())]))?;
    let mut raw_outputs = Vec::new();
    let first = provider.complete(&ChatRequest {
        prompt: prompt.clone(),
        params: params.clone(),
    })?;
    raw_outputs.push(first.clone());
    let parsed = match parse_graph_text(&first) {
        Ok(doc) => doc,
        Err(error) => {
            let repair = render_prompt(
                "json_repair",
                &vars([
                    ("prompt", prompt.as_str()),
                    ("error", error.as_str()),
                    ("response", first.as_str()),
                ]),
            )?;
            let second = provider.complete(&ChatRequest {
                prompt: repair,
                params: params.clone(),
            })?;
            raw_outputs.push(second.clone());
            parse_graph_text(&second).map_err(|detail| GraphError::UnparseableModelOutput {
                detail,
                raw_outputs: raw_outputs.clone(),
            })?
        }
    };
    let (doc, remap) = normalize_ids(parsed);
    let report = validate(&doc);
    Ok(Extraction {
        doc,
        report,
        remap,
        provider_id: provider.provider_id().to_string(),
        raw_outputs,
    })
}
