use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use super::model::{GraphDoc, KgEntity, KgRelation};
use super::validate::validate;
use super::GraphError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntityRef {
    pub id: String,
}

/// `{"id": "T1", "name": "...", "description": null}`: listed fields are
/// replaced, `null` clears an optional field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntityPatch {
    pub id: String,
    #[serde(flatten)]
    pub changes: Map<String, Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", content = "payload", rename_all = "snake_case")]
pub enum GraphEdit {
    AddEntity(KgEntity),
    RemoveEntity(EntityRef),
    ModifyEntity(EntityPatch),
    AddRelation(KgRelation),
    RemoveRelation(KgRelation),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EditLogEntry {
    pub index: usize,
    pub op: String,
    pub subject: String,
    pub summary: String,
}

pub fn parse_edit_script(json: &str) -> Result<Vec<GraphEdit>, GraphError> {
    serde_json::from_str(json).map_err(|e| GraphError::EditMalformed {
        index: 0,
        detail: e.to_string(),
    })
}

fn missing(index: usize, detail: String) -> GraphError {
    GraphError::EditTargetMissing { index, detail }
}

fn optional(index: usize, key: &str, v: &Value) -> Result<Option<String>, GraphError> {
    match v {
        Value::Null => Ok(None),
        Value::String(s) => Ok(Some(s.clone())),
        other => Err(GraphError::EditMalformed {
            index,
            detail: format!("{key} must be a string or null, got {other}"),
        }),
    }
}

fn patch(
    index: usize,
    entity: &mut KgEntity,
    changes: &Map<String, Value>,
) -> Result<Vec<String>, GraphError> {
    let mut changed = Vec::new();
    for (key, value) in changes {
        match key.as_str() {
            "type" => {
                let kind = value
                    .as_str()
                    .ok_or_else(|| GraphError::EditMalformed {
                        index,
                        detail: "type must be a string".into(),
                    })?
                    .parse()
                    .map_err(|detail| GraphError::EditMalformed { index, detail })?;
                entity.kind = kind;
            }
            "name" => {
                entity.name =
                    optional(index, key, value)?.ok_or_else(|| GraphError::EditMalformed {
                        index,
                        detail: "name cannot be null".into(),
                    })?
            }
            "description" => entity.description = optional(index, key, value)?,
            "startDate" => entity.start_date = optional(index, key, value)?,
            "endDate" => entity.end_date = optional(index, key, value)?,
            "unitOfMeasure" => entity.unit_of_measure = optional(index, key, value)?,
            other => {
                return Err(GraphError::EditMalformed {
                    index,
                    detail: format!("field {other:?} cannot be modified"),
                })
            }
        }
        changed.push(key.clone());
    }
    Ok(changed)
}

/// Apply edits in order and re-validate. Atomic: on any error the input is
/// untouched and nothing is returned.
pub fn apply_edits(
    doc: &GraphDoc,
    edits: &[GraphEdit],
) -> Result<(GraphDoc, Vec<EditLogEntry>), GraphError> {
    let mut out = doc.clone();
    let mut log = Vec::with_capacity(edits.len());
    for (index, edit) in edits.iter().enumerate() {
        let (op, subject, summary) = match edit {
            GraphEdit::AddEntity(e) => {
                out.entities.push(e.clone());
                (
                    "add_entity",
                    e.id.clone(),
                    format!("added {} {:?}", e.kind, e.name),
                )
            }
            GraphEdit::RemoveEntity(EntityRef { id }) => {
                let pos = out
                    .entities
                    .iter()
                    .position(|e| &e.id == id)
                    .ok_or_else(|| missing(index, format!("no entity {id}")))?;
                out.entities.remove(pos);
                let before = out.relationships.len();
                out.relationships.retain(|r| &r.from != id && &r.to != id);
                let dropped = before - out.relationships.len();
                (
                    "remove_entity",
                    id.clone(),
                    format!("removed with {dropped} incident relationship(s)"),
                )
            }
            GraphEdit::ModifyEntity(EntityPatch { id, changes }) => {
                let entity = out
                    .entities
                    .iter_mut()
                    .find(|e| &e.id == id)
                    .ok_or_else(|| missing(index, format!("no entity {id}")))?;
                let changed = patch(index, entity, changes)?;
                (
                    "modify_entity",
                    id.clone(),
                    format!("changed {}", changed.join(", ")),
                )
            }
            GraphEdit::AddRelation(r) => {
                for end in [&r.from, &r.to] {
                    if out.entity(end).is_none() {
                        return Err(missing(
                            index,
                            format!("no entity {end} for {}", r.record_id()),
                        ));
                    }
                }
                out.relationships.push(r.clone());
                ("add_relation", r.record_id(), "added".into())
            }
            GraphEdit::RemoveRelation(r) => {
                let pos = out
                    .relationships
                    .iter()
                    .position(|x| x == r)
                    .ok_or_else(|| missing(index, format!("no relationship {}", r.record_id())))?;
                out.relationships.remove(pos);
                ("remove_relation", r.record_id(), "removed".into())
            }
        };
        log.push(EditLogEntry {
            index,
            op: op.into(),
            subject,
            summary,
        });
    }
    let report = validate(&out);
    if !report.valid {
        return Err(GraphError::EditProducesInvalidGraph(report));
    }
    Ok((out, log))
}
