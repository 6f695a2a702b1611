use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntityKind {
    Goal,
    Target,
    Indicator,
}

impl EntityKind {
    pub const ALL: [EntityKind; 3] = [EntityKind::Goal, EntityKind::Target, EntityKind::Indicator];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Goal => "Goal",
            Self::Target => "Target",
            Self::Indicator => "Indicator",
        }
    }

    pub fn initial(self) -> char {
        match self {
            Self::Goal => 'G',
            Self::Target => 'T',
            Self::Indicator => 'I',
        }
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EntityKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let t = t.strip_prefix("ex:").unwrap_or(t);
        Self::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(t))
            .ok_or_else(|| format!("unknown entity type {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RelationKind {
    HasTarget,
    IsMeasuredBy,
    RelatesTo,
}

impl RelationKind {
    pub const ALL: [RelationKind; 3] = [
        RelationKind::HasTarget,
        RelationKind::IsMeasuredBy,
        RelationKind::RelatesTo,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::HasTarget => "hasTarget",
            Self::IsMeasuredBy => "isMeasuredBy",
            Self::RelatesTo => "relatesTo",
        }
    }

    /// Required (from, to) kinds; `None` means any kind.
    pub fn signature(self) -> Option<(EntityKind, EntityKind)> {
        match self {
            Self::HasTarget => Some((EntityKind::Goal, EntityKind::Target)),
            Self::IsMeasuredBy => Some((EntityKind::Target, EntityKind::Indicator)),
            Self::RelatesTo => None,
        }
    }
}

impl fmt::Display for RelationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RelationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let t = t.strip_prefix("ex:").unwrap_or(t);
        Self::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(t))
            .ok_or_else(|| format!("unknown relationship type {s:?}"))
    }
}

macro_rules! string_serde {
    ($t:ty) => {
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.serialize_str(self.as_str())
            }
        }

        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let s = String::deserialize(d)?;
                s.parse().map_err(serde::de::Error::custom)
            }
        }
    };
}

string_serde!(EntityKind);
string_serde!(RelationKind);

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct KgEntity {
    #[serde(default)]
    pub id: String,
    #[serde(rename = "type")]
    pub kind: EntityKind,
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_date: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub end_date: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unit_of_measure: Option<String>,
}

impl KgEntity {
    pub fn new(id: impl Into<String>, kind: EntityKind, name: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            kind,
            name: name.into(),
            description: None,
            start_date: None,
            end_date: None,
            unit_of_measure: None,
        }
    }

    pub fn with_description(mut self, d: impl Into<String>) -> Self {
        self.description = Some(d.into());
        self
    }

    pub fn with_unit(mut self, u: impl Into<String>) -> Self {
        self.unit_of_measure = Some(u.into());
        self
    }

    /// Text embedded for retrieval: `Kind name: description`, or
    /// `Kind name` without a description.
    pub fn rendered(&self) -> String {
        match self
            .description
            .as_deref()
            .map(str::trim)
            .filter(|d| !d.is_empty())
        {
            Some(d) => format!("{} {}: {}", self.kind, self.name, d),
            None => format!("{} {}", self.kind, self.name),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct KgRelation {
    pub from: String,
    pub to: String,
    #[serde(rename = "type")]
    pub kind: RelationKind,
}

impl KgRelation {
    pub fn new(from: impl Into<String>, kind: RelationKind, to: impl Into<String>) -> Self {
        Self {
            from: from.into(),
            to: to.into(),
            kind,
        }
    }

    pub fn record_id(&self) -> String {
        format!("rel:{}:{}:{}", self.from, self.kind, self.to)
    }
}

/// The exchange form of a graph: `{"entities": [...], "relationships": [...]}`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphDoc {
    #[serde(default)]
    pub entities: Vec<KgEntity>,
    #[serde(default)]
    pub relationships: Vec<KgRelation>,
}

impl GraphDoc {
    pub fn entity(&self, id: &str) -> Option<&KgEntity> {
        self.entities.iter().find(|e| e.id == id)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("graph doc serializes")
    }
}

/// A model-supplied id that had to be replaced.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdRemap {
    /// Position of the entity in the model's output.
    pub position: usize,
    pub original: String,
    pub assigned: String,
}
