//! Reading graph documents from model output or files.
//!
//! The object form `{"entities", "relationships"}` is canonical. A JSON-LD
//! style array of node objects (`@id`, `@type`, `ex:name`, relationship
//! properties holding `@id` references) is also accepted and converted.

use std::collections::HashSet;

use serde_json::{Map, Value};

use super::model::{EntityKind, GraphDoc, IdRemap, KgEntity, KgRelation, RelationKind};
use crate::util::extract_json;

/// Parse free-form model text (or a file body) into a graph document.
pub fn parse_graph_text(text: &str) -> Result<GraphDoc, String> {
    let value = extract_json(text)?;
    parse_graph_value(value)
}

pub fn parse_graph_value(value: Value) -> Result<GraphDoc, String> {
    match value {
        Value::Object(mut obj) => {
            if obj.contains_key("entities") || obj.contains_key("relationships") {
                serde_json::from_value(Value::Object(obj)).map_err(|e| e.to_string())
            } else if let Some(Value::Array(nodes)) = obj.remove("@graph") {
                from_node_array(nodes)
            } else {
                Err("object has neither entities/relationships nor @graph".into())
            }
        }
        Value::Array(nodes) => from_node_array(nodes),
        other => Err(format!(
            "expected a JSON object or array, got {}",
            kind_of(&other)
        )),
    }
}

fn kind_of(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "a boolean",
        Value::Number(_) => "a number",
        Value::String(_) => "a string",
        Value::Array(_) => "an array",
        Value::Object(_) => "an object",
    }
}

fn strip_key(k: &str) -> &str {
    let k = k.strip_prefix("ex:").unwrap_or(k);
    k.strip_prefix('@').unwrap_or(k)
}

fn opt_string(v: Option<&Value>) -> Result<Option<String>, String> {
    match v {
        None | Some(Value::Null) => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(Value::Number(n)) => Ok(Some(n.to_string())),
        Some(other) => Err(format!("expected a string, got {}", kind_of(other))),
    }
}

fn refs(v: &Value) -> Result<Vec<String>, String> {
    match v {
        Value::Null => Ok(Vec::new()),
        Value::String(s) => Ok(vec![s.clone()]),
        Value::Object(o) => match o.get("@id").or_else(|| o.get("id")) {
            Some(Value::String(s)) => Ok(vec![s.clone()]),
            _ => Err("reference object without @id".into()),
        },
        Value::Array(items) => {
            let mut out = Vec::new();
            for item in items {
                out.extend(refs(item)?);
            }
            Ok(out)
        }
        other => Err(format!("expected an id reference, got {}", kind_of(other))),
    }
}

fn from_node_array(nodes: Vec<Value>) -> Result<GraphDoc, String> {
    let mut doc = GraphDoc::default();
    for (i, node) in nodes.into_iter().enumerate() {
        let Value::Object(obj) = node else {
            return Err(format!("node {i} is not an object"));
        };
        let fields: Map<String, Value> = obj
            .into_iter()
            .map(|(k, v)| (strip_key(&k).to_string(), v))
            .collect();
        let kind_text = opt_string(fields.get("type"))
            .map_err(|e| format!("node {i} type: {e}"))?
            .ok_or_else(|| format!("node {i} has no type"))?;
        let kind: EntityKind = kind_text.parse().map_err(|e| format!("node {i}: {e}"))?;
        let get =
            |key: &str| opt_string(fields.get(key)).map_err(|e| format!("node {i} {key}: {e}"));
        let entity = KgEntity {
            id: get("id")?.unwrap_or_default(),
            kind,
            name: get("name")?.unwrap_or_default(),
            description: get("description")?,
            start_date: get("startDate")?,
            end_date: get("endDate")?,
            unit_of_measure: get("unitOfMeasure")?,
        };
        for (key, value) in &fields {
            if let Ok(rel) = key.parse::<RelationKind>() {
                for target in refs(value).map_err(|e| format!("node {i} {key}: {e}"))? {
                    doc.relationships
                        .push(KgRelation::new(entity.id.clone(), rel, target));
                }
            }
        }
        doc.entities.push(entity);
    }
    Ok(doc)
}

/// Keep unique model ids; replace empty or repeated ones with
/// `<kind initial><ordinal>`, using the smallest ordinal not already taken.
/// Relationships keep pointing at the first entity that carried an id.
pub fn normalize_ids(mut doc: GraphDoc) -> (GraphDoc, Vec<IdRemap>) {
    let mut taken: HashSet<String> = doc
        .entities
        .iter()
        .map(|e| e.id.trim().to_string())
        .collect();
    let mut seen: HashSet<String> = HashSet::new();
    let mut remap = Vec::new();
    for (position, e) in doc.entities.iter_mut().enumerate() {
        let trimmed = e.id.trim().to_string();
        if !trimmed.is_empty() && seen.insert(trimmed.clone()) {
            e.id = trimmed;
            continue;
        }
        let assigned = (1..)
            .map(|n| format!("{}{}", e.kind.initial(), n))
            .find(|c| !taken.contains(c))
            .expect("unbounded ordinals");
        taken.insert(assigned.clone());
        seen.insert(assigned.clone());
        remap.push(IdRemap {
            position,
            original: e.id.clone(),
            assigned: assigned.clone(),
        });
        e.id = assigned;
    }
    for r in doc.relationships.iter_mut() {
        r.from = r.from.trim().to_string();
        r.to = r.to.trim().to_string();
    }
    (doc, remap)
}
