//! Input documents: the product SRS, the sustainability taxonomy, and the
//! chunks derived from them.
//!
//! The SRS text form is a light markdown dialect:
//!
//! ```text
//! # smart-home
//!
//! ## Product Perspective
//! The DigitalHome system lets a home user manage devices...
//!
//! ## Functional Requirements
//! FR 1: The system shall ...
//! FR: The system shall ...        (id auto-assigned)
//!
//! ## Non-Functional Requirements
//! NFR 1: The system shall ...
//! ```
//!
//! `## Functional Requirements`, `## Non-Functional Requirements` and
//! `## Requirements` are list sections; every other `##` header is a scope
//! section. Requirement lines are recognized anywhere.

use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::semantic_index::{cosine, embed_many, EmbeddingProvider, IndexError};
use crate::util::{normalize_ws, sha256_hex};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CorpusError {
    #[error("malformed document: {0}")]
    MalformedDocument(String),
    #[error("duplicate requirement id {0}")]
    DuplicateId(String),
    #[error("invalid requirement: {0}")]
    InvalidRequirement(String),
    #[error("taxonomy row {row}: unknown dimension {value:?}")]
    UnknownDimension { row: usize, value: String },
    #[error("taxonomy row {row}: empty {column} cell")]
    EmptyCell { row: usize, column: &'static str },
    #[error("coherence check needs at least two scope sections")]
    FewerThanTwoSections,
    #[error("threshold {0} outside [0, 1]")]
    InvalidThreshold(f64),
    #[error(transparent)]
    Index(#[from] IndexError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum RequirementKind {
    FR,
    NFR,
    SR,
}

impl RequirementKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::FR => "FR",
            Self::NFR => "NFR",
            Self::SR => "SR",
        }
    }
}

impl fmt::Display for RequirementKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dimension {
    Environmental,
    Social,
    Technical,
    Economic,
}

impl Dimension {
    pub const ALL: [Dimension; 4] = [
        Dimension::Environmental,
        Dimension::Social,
        Dimension::Technical,
        Dimension::Economic,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Environmental => "Environmental",
            Self::Social => "Social",
            Self::Technical => "Technical",
            Self::Economic => "Economic",
        }
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Dimension {
    type Err = String;

    /// Case-insensitive, surrounding whitespace ignored.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        Dimension::ALL
            .into_iter()
            .find(|d| d.as_str().eq_ignore_ascii_case(t))
            .ok_or_else(|| t.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Requirement {
    pub id: String,
    pub kind: RequirementKind,
    pub text: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dimension: Option<Dimension>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
}

impl Requirement {
    pub fn functional(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self::plain(id, RequirementKind::FR, text)
    }

    pub fn nonfunctional(id: impl Into<String>, text: impl Into<String>) -> Self {
        Self::plain(id, RequirementKind::NFR, text)
    }

    fn plain(id: impl Into<String>, kind: RequirementKind, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            kind,
            text: text.into(),
            dimension: None,
            category: None,
        }
    }

    pub fn sustainability(
        id: impl Into<String>,
        text: impl Into<String>,
        dimension: Dimension,
        category: impl Into<String>,
    ) -> Self {
        Self {
            id: id.into(),
            kind: RequirementKind::SR,
            text: text.into(),
            dimension: Some(dimension),
            category: Some(category.into()),
        }
    }

    pub fn validate(&self) -> Result<(), CorpusError> {
        if !id_pattern().is_match(&self.id) {
            return Err(CorpusError::InvalidRequirement(format!(
                "bad id {:?}",
                self.id
            )));
        }
        if self.text.trim().is_empty() {
            return Err(CorpusError::InvalidRequirement(format!(
                "{} has empty text",
                self.id
            )));
        }
        let is_sr = self.kind == RequirementKind::SR;
        let has_category = self
            .category
            .as_deref()
            .is_some_and(|c| !c.trim().is_empty());
        if is_sr != self.dimension.is_some() || is_sr != has_category {
            return Err(CorpusError::InvalidRequirement(format!(
                "{}: dimension and category must be present exactly for SRs",
                self.id
            )));
        }
        Ok(())
    }

    /// `"FR31: text"` rendering used in prompts and reports.
    pub fn labeled(&self) -> String {
        format!("{}: {}", self.id, self.text)
    }
}

fn id_pattern() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"^[A-Za-z][A-Za-z0-9_.\-]*$").expect("id regex"))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopeSection {
    pub name: String,
    pub body: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProjectSpec {
    pub project_id: String,
    pub scope_sections: Vec<ScopeSection>,
    pub functional_reqs: Vec<Requirement>,
    pub nonfunctional_reqs: Vec<Requirement>,
}

impl ProjectSpec {
    pub fn validate(&self) -> Result<(), CorpusError> {
        if self.project_id.trim().is_empty() {
            return Err(CorpusError::MalformedDocument("empty project id".into()));
        }
        if self.scope_sections.is_empty() {
            return Err(CorpusError::MalformedDocument("no scope sections".into()));
        }
        for s in &self.scope_sections {
            if s.name.trim().is_empty() {
                return Err(CorpusError::MalformedDocument(
                    "scope section without a name".into(),
                ));
            }
            if normalize_ws(&s.body).is_empty() {
                return Err(CorpusError::MalformedDocument(format!(
                    "scope section {:?} has an empty body",
                    s.name
                )));
            }
        }
        if self.functional_reqs.is_empty() {
            return Err(CorpusError::MalformedDocument(
                "no functional requirements".into(),
            ));
        }
        let mut seen = HashSet::new();
        for (list, kind) in [
            (&self.functional_reqs, RequirementKind::FR),
            (&self.nonfunctional_reqs, RequirementKind::NFR),
        ] {
            for r in list {
                if r.kind != kind {
                    return Err(CorpusError::InvalidRequirement(format!(
                        "{} listed as {kind} but has kind {}",
                        r.id, r.kind
                    )));
                }
                r.validate()?;
                if !seen.insert(r.id.as_str()) {
                    return Err(CorpusError::DuplicateId(r.id.clone()));
                }
            }
        }
        Ok(())
    }

    pub fn requirements(&self) -> impl Iterator<Item = &Requirement> {
        self.functional_reqs.iter().chain(&self.nonfunctional_reqs)
    }

    /// Render back to the text form accepted by [`parse_srs`].
    pub fn to_text(&self) -> String {
        let mut out = format!("# {}\n", self.project_id);
        for s in &self.scope_sections {
            out.push_str(&format!("\n## {}\n{}\n", s.name, s.body));
        }
        out.push_str("\n## Functional Requirements\n");
        for r in &self.functional_reqs {
            out.push_str(&format!("FR {}: {}\n", r.id, r.text));
        }
        if !self.nonfunctional_reqs.is_empty() {
            out.push_str("\n## Non-Functional Requirements\n");
            for r in &self.nonfunctional_reqs {
                out.push_str(&format!("NFR {}: {}\n", r.id, r.text));
            }
        }
        out
    }
}

fn requirement_line() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| {
        Regex::new(r"^\s*(NFR|FR)(?:\s+([A-Za-z0-9_.\-]+)|(\d[A-Za-z0-9_.\-]*))?\s*:\s*(.*\S)\s*$")
            .expect("requirement regex")
    })
}

fn is_list_section(name: &str) -> bool {
    let key: String = name
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .collect::<String>()
        .to_ascii_lowercase();
    matches!(
        key.as_str(),
        "functionalrequirements"
            | "nonfunctionalrequirements"
            | "requirements"
            | "systemrequirements"
    )
}

struct PendingReq {
    kind: RequirementKind,
    id: Option<String>,
    text: String,
}

/// Parse the text form of an SRS. A missing `# title` yields project id
/// `untitled`.
pub fn parse_srs(document: &str) -> Result<ProjectSpec, CorpusError> {
    let mut project_id: Option<String> = None;
    let mut sections: Vec<(String, Vec<String>)> = Vec::new();
    let mut in_list = false;
    let mut reqs: Vec<PendingReq> = Vec::new();
    let mut list_tail_open = false;

    for (lineno, raw) in document.lines().enumerate() {
        let line = raw.trim_end();
        if let Some(name) = line.strip_prefix("## ") {
            let name = name.trim().to_string();
            if name.is_empty() {
                return Err(CorpusError::MalformedDocument(format!(
                    "line {}: empty section header",
                    lineno + 1
                )));
            }
            in_list = is_list_section(&name);
            list_tail_open = false;
            if !in_list {
                sections.push((name, Vec::new()));
            }
            continue;
        }
        if let Some(title) = line.strip_prefix("# ") {
            if project_id.is_none() && sections.is_empty() && reqs.is_empty() {
                project_id = Some(title.trim().to_string());
                continue;
            }
        }
        if let Some(caps) = requirement_line().captures(line) {
            let kind = if &caps[1] == "FR" {
                RequirementKind::FR
            } else {
                RequirementKind::NFR
            };
            let id = caps
                .get(2)
                .map(|m| m.as_str().to_string())
                .or_else(|| caps.get(3).map(|m| m.as_str().to_string()))
                .map(|id| {
                    if id.starts_with(|c: char| c.is_ascii_digit()) {
                        format!("{}{}", kind.as_str(), id)
                    } else {
                        id
                    }
                });
            reqs.push(PendingReq {
                kind,
                id,
                text: caps[4].trim().to_string(),
            });
            list_tail_open = in_list;
            continue;
        }
        if in_list {
            if line.trim().is_empty() {
                continue;
            }
            match (list_tail_open, reqs.last_mut()) {
                (true, Some(last)) => {
                    last.text.push(' ');
                    last.text.push_str(line.trim());
                }
                _ => {
                    return Err(CorpusError::MalformedDocument(format!(
                        "line {}: text in a requirement list is not a requirement",
                        lineno + 1
                    )))
                }
            }
            continue;
        }
        match sections.last_mut() {
            Some((_, body)) => body.push(line.to_string()),
            None if line.trim().is_empty() => {}
            None => {
                return Err(CorpusError::MalformedDocument(format!(
                    "line {}: content before the first section",
                    lineno + 1
                )))
            }
        }
    }

    let scope_sections = sections
        .into_iter()
        .map(|(name, lines)| ScopeSection {
            name,
            body: lines.join("\n").trim().to_string(),
        })
        .collect();

    let mut fr_count = 0;
    let mut nfr_count = 0;
    let mut functional_reqs = Vec::new();
    let mut nonfunctional_reqs = Vec::new();
    for p in reqs {
        let (count, list) = match p.kind {
            RequirementKind::FR => (&mut fr_count, &mut functional_reqs),
            _ => (&mut nfr_count, &mut nonfunctional_reqs),
        };
        *count += 1;
        let id =
            p.id.unwrap_or_else(|| format!("{}{}", p.kind.as_str(), count));
        list.push(Requirement {
            id,
            kind: p.kind,
            text: normalize_ws(&p.text),
            dimension: None,
            category: None,
        });
    }

    let spec = ProjectSpec {
        project_id: project_id.unwrap_or_else(|| "untitled".to_string()),
        scope_sections,
        functional_reqs,
        nonfunctional_reqs,
    };
    spec.validate()?;
    Ok(spec)
}

/// Parse the JSON form (same field names as [`ProjectSpec`]).
pub fn parse_srs_json(document: &str) -> Result<ProjectSpec, CorpusError> {
    let spec: ProjectSpec = serde_json::from_str(document)
        .map_err(|e| CorpusError::MalformedDocument(e.to_string()))?;
    spec.validate()?;
    Ok(spec)
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TaxonomyEntry {
    pub requirement_text: String,
    pub dimension: Dimension,
    pub category: String,
}

/// Parse a taxonomy CSV with header `requirement,dimension,category`.
pub fn parse_taxonomy(table: &str) -> Result<Vec<TaxonomyEntry>, CorpusError> {
    if table.trim().is_empty() {
        return Ok(Vec::new());
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(table.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| CorpusError::MalformedDocument(e.to_string()))?
        .clone();
    let expected = ["requirement", "dimension", "category"];
    let header_ok = headers.len() == 3
        && headers
            .iter()
            .zip(expected)
            .all(|(h, e)| h.trim_start_matches('\u{feff}').eq_ignore_ascii_case(e));
    if !header_ok {
        return Err(CorpusError::MalformedDocument(format!(
            "taxonomy header must be requirement,dimension,category; found {:?}",
            headers.iter().collect::<Vec<_>>()
        )));
    }
    let mut entries = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| CorpusError::MalformedDocument(e.to_string()))?;
        let cell = |idx: usize, column: &'static str| -> Result<String, CorpusError> {
            record
                .get(idx)
                .map(str::trim)
                .filter(|c| !c.is_empty())
                .map(str::to_string)
                .ok_or(CorpusError::EmptyCell { row, column })
        };
        let requirement_text = cell(0, "requirement")?;
        let dimension_cell = cell(1, "dimension")?;
        let category = cell(2, "category")?;
        if record.len() > 3 {
            return Err(CorpusError::MalformedDocument(format!(
                "taxonomy row {row} has {} cells",
                record.len()
            )));
        }
        let dimension = dimension_cell
            .parse()
            .map_err(|value| CorpusError::UnknownDimension { row, value })?;
        entries.push(TaxonomyEntry {
            requirement_text,
            dimension,
            category,
        });
    }
    Ok(entries)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChunkSource {
    ProductScope,
    Taxonomy,
    Standard,
    Context,
    Catalog,
}

impl ChunkSource {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::ProductScope => "ProductScope",
            Self::Taxonomy => "Taxonomy",
            Self::Standard => "Standard",
            Self::Context => "Context",
            Self::Catalog => "Catalog",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Chunk {
    pub chunk_id: String,
    pub source: ChunkSource,
    pub text: String,
    pub metadata: BTreeMap<String, String>,
}

impl Chunk {
    pub fn new(chunk_id: impl Into<String>, source: ChunkSource, text: impl Into<String>) -> Self {
        Self {
            chunk_id: chunk_id.into(),
            source,
            text: text.into(),
            metadata: BTreeMap::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<String>) -> Self {
        self.metadata.insert(key.to_string(), value.into());
        self
    }
}

/// Stable id of a taxonomy row: `tx-` plus ten hex digits of a content hash.
pub fn taxonomy_record_id(entry: &TaxonomyEntry) -> String {
    let digest = sha256_hex(format!(
        "{}\u{1f}{}\u{1f}{}",
        entry.requirement_text, entry.dimension, entry.category
    ));
    format!("tx-{}", &digest[..10])
}

pub fn contextual_string(entry: &TaxonomyEntry) -> String {
    format!(
        "The requirement is to {} under the dimension {} and falls in the category of {}",
        entry.requirement_text, entry.dimension, entry.category
    )
}

pub fn contextualize(entry: &TaxonomyEntry) -> Chunk {
    Chunk::new(
        taxonomy_record_id(entry),
        ChunkSource::Taxonomy,
        contextual_string(entry),
    )
    .with_meta("requirement", entry.requirement_text.clone())
    .with_meta("dimension", entry.dimension.as_str())
    .with_meta("category", entry.category.clone())
}

/// One chunk per scope section, ids `scope-1`, `scope-2`, ...
pub fn chunk_scope(spec: &ProjectSpec) -> Vec<Chunk> {
    spec.scope_sections
        .iter()
        .enumerate()
        .map(|(i, s)| {
            Chunk::new(
                format!("scope-{}", i + 1),
                ChunkSource::ProductScope,
                s.body.clone(),
            )
            .with_meta("section", s.name.clone())
            .with_meta("project", spec.project_id.clone())
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionPairScore {
    pub first: String,
    pub second: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub pairwise_scores: Vec<SectionPairScore>,
    pub threshold: f64,
    pub passed: bool,
    pub offending_pairs: Vec<SectionPairScore>,
}

/// Pairwise cosine over section embeddings; passes iff every pair scores at
/// least `threshold`.
pub fn coherence_check(
    sections: &[ScopeSection],
    threshold: f64,
    embedder: &dyn EmbeddingProvider,
) -> Result<CoherenceReport, CorpusError> {
    if sections.len() < 2 {
        return Err(CorpusError::FewerThanTwoSections);
    }
    if !(0.0..=1.0).contains(&threshold) {
        return Err(CorpusError::InvalidThreshold(threshold));
    }
    let texts: Vec<&str> = sections.iter().map(|s| s.body.as_str()).collect();
    let vectors = embed_many(&texts, embedder, 1)?;
    let mut pairwise_scores = Vec::new();
    for i in 0..sections.len() {
        for j in i + 1..sections.len() {
            pairwise_scores.push(SectionPairScore {
                first: sections[i].name.clone(),
                second: sections[j].name.clone(),
                score: cosine(&vectors[i], &vectors[j])?,
            });
        }
    }
    let offending_pairs: Vec<_> = pairwise_scores
        .iter()
        .filter(|p| p.score < threshold)
        .cloned()
        .collect();
    Ok(CoherenceReport {
        passed: offending_pairs.is_empty(),
        pairwise_scores,
        threshold,
        offending_pairs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semantic_index::HashEmbedder;

    const MINI: &str = "# mini\n\n## Product Perspective\nA home automation hub.\n\n## Product Features\nControls lights.\nReads sensors.\n\n## Functional Requirements\nFR 1: The system shall switch lights.\nFR: The system shall read\n  temperature sensors.\n\n## Non-Functional Requirements\nNFR 1: The system shall respond within 2 seconds.\n";

    #[test]
    fn parses_sections_and_requirements() {
        let spec = parse_srs(MINI).unwrap();
        assert_eq!(spec.project_id, "mini");
        assert_eq!(spec.scope_sections.len(), 2);
        assert_eq!(
            spec.scope_sections[1].body,
            "Controls lights.\nReads sensors."
        );
        let ids: Vec<_> = spec.functional_reqs.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, vec!["FR1", "FR2"]);
        assert_eq!(
            spec.functional_reqs[1].text,
            "The system shall read temperature sensors."
        );
        assert_eq!(spec.nonfunctional_reqs[0].id, "NFR1");
    }

    #[test]
    fn explicit_ids_kept() {
        let doc = "## Scope\nbody\n## Requirements\nFR30: a\nFR FR-X: b\nNFR 7: c\n";
        let spec = parse_srs(doc).unwrap();
        let ids: Vec<_> = spec.requirements().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, vec!["FR30", "FR-X", "NFR7"]);
        assert_eq!(spec.project_id, "untitled");
    }

    #[test]
    fn zero_frs_is_malformed() {
        let doc = "# p\n## Scope\nbody text\n## Non-Functional Requirements\nNFR 1: fast\n";
        assert!(matches!(
            parse_srs(doc),
            Err(CorpusError::MalformedDocument(_))
        ));
    }

    #[test]
    fn missing_scope_is_malformed() {
        let doc = "# p\n## Functional Requirements\nFR 1: a\n";
        assert!(matches!(
            parse_srs(doc),
            Err(CorpusError::MalformedDocument(_))
        ));
    }

    #[test]
    fn duplicate_id_rejected() {
        let doc = "# p\n## Scope\nbody\n## Functional Requirements\nFR 3: a\nFR 3: b\n";
        assert_eq!(parse_srs(doc), Err(CorpusError::DuplicateId("FR3".into())));
    }

    #[test]
    fn stray_list_text_rejected() {
        let doc = "# p\n## Scope\nbody\n## Functional Requirements\nsome prose\nFR 1: a\n";
        assert!(matches!(
            parse_srs(doc),
            Err(CorpusError::MalformedDocument(_))
        ));
    }

    #[test]
    fn word_starting_with_fr_is_body_text() {
        let doc = "# p\n## Scope\nFRIDGE: keeps food cold\n## Functional Requirements\nFR 1: a\n";
        let spec = parse_srs(doc).unwrap();
        assert_eq!(spec.scope_sections[0].body, "FRIDGE: keeps food cold");
    }

    #[test]
    fn json_form_matches_text_form() {
        let spec = parse_srs(MINI).unwrap();
        let json = serde_json::to_string(&spec).unwrap();
        assert_eq!(parse_srs_json(&json).unwrap(), spec);
    }

    #[test]
    fn taxonomy_rows() {
        let csv = "requirement,dimension,category\n\"Assessing software over a long term and consider decisions with this in mind\", technical ,Longeitivity\n";
        let rows = parse_taxonomy(csv).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].dimension, Dimension::Technical);
        let chunk = contextualize(&rows[0]);
        assert_eq!(
            chunk.text,
            "The requirement is to Assessing software over a long term and consider decisions with this in mind under the dimension Technical and falls in the category of Longeitivity"
        );
        assert_eq!(chunk.metadata["dimension"], "Technical");
    }

    #[test]
    fn taxonomy_errors() {
        let bad = "requirement,dimension,category\nx,Ecological,y\n";
        assert_eq!(
            parse_taxonomy(bad),
            Err(CorpusError::UnknownDimension {
                row: 1,
                value: "Ecological".into()
            })
        );
        let empty_cell = "requirement,dimension,category\nx,Social,\n";
        assert_eq!(
            parse_taxonomy(empty_cell),
            Err(CorpusError::EmptyCell {
                row: 1,
                column: "category"
            })
        );
        assert_eq!(parse_taxonomy("").unwrap(), vec![]);
        assert_eq!(
            parse_taxonomy("requirement,dimension,category\n").unwrap(),
            vec![]
        );
    }

    #[test]
    fn distinct_entries_distinct_ids() {
        let a = TaxonomyEntry {
            requirement_text: "x".into(),
            dimension: Dimension::Social,
            category: "c".into(),
        };
        let mut b = a.clone();
        b.dimension = Dimension::Economic;
        assert_ne!(contextualize(&a).chunk_id, contextualize(&b).chunk_id);
    }

    #[test]
    fn scope_chunks() {
        let spec = parse_srs(MINI).unwrap();
        let chunks = chunk_scope(&spec);
        assert_eq!(chunks.len(), 2);
        assert_eq!(chunks[1].metadata["section"], "Product Features");
        assert_eq!(chunks[0].text, "A home automation hub.");
    }

    fn section(name: &str, body: &str) -> ScopeSection {
        ScopeSection {
            name: name.into(),
            body: body.into(),
        }
    }

    #[test]
    fn coherence_identical_sections() {
        let s = [
            section("a", "same words here"),
            section("b", "same words here"),
        ];
        let r = coherence_check(&s, 0.5, &HashEmbedder).unwrap();
        assert_eq!(r.pairwise_scores[0].score, 1.0);
        assert!(r.passed);
    }

    #[test]
    fn coherence_fixture_values() {
        // oracle: fixture_embedder.py -> 2/3 and 0.0
        let s = [
            section("a", "temperature humidity sensors"),
            section("b", "temperature humidity controller"),
        ];
        let r = coherence_check(&s, 0.5, &HashEmbedder).unwrap();
        assert!((r.pairwise_scores[0].score - 2.0 / 3.0).abs() < 1e-12);
        assert!(r.passed);

        let s = [
            section("a", "temperature humidity sensors"),
            section("b", "invoice payment ledger"),
        ];
        let r = coherence_check(&s, 0.5, &HashEmbedder).unwrap();
        assert_eq!(r.pairwise_scores[0].score, 0.0);
        assert!(!r.passed);
        assert_eq!(r.offending_pairs.len(), 1);
        assert_eq!(r.offending_pairs[0].first, "a");
    }

    #[test]
    fn coherence_needs_two() {
        assert_eq!(
            coherence_check(&[section("a", "x")], 0.5, &HashEmbedder),
            Err(CorpusError::FewerThanTwoSections)
        );
    }
}
