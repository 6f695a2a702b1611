use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::RelateError;
use crate::agent::{Tool, ToolOutput, ToolRegistry};
use crate::corpus::{Chunk, ChunkSource};
use crate::semantic_index::{EmbeddingProvider, VectorIndex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CatalogId {
    FRDependency,
    NFRCorrelation,
    SRCorrelation,
}

impl CatalogId {
    pub const ALL: [CatalogId; 3] = [
        Self::FRDependency,
        Self::NFRCorrelation,
        Self::SRCorrelation,
    ];

    /// Record id prefix; ids are `{prefix}-{ordinal}`.
    pub fn prefix(self) -> &'static str {
        match self {
            Self::FRDependency => "frdep",
            Self::NFRCorrelation => "nfrcor",
            Self::SRCorrelation => "srcor",
        }
    }

    pub fn tool_name(self) -> &'static str {
        match self {
            Self::FRDependency => "fr_dependency_catalog",
            Self::NFRCorrelation => "nfr_correlation_catalog",
            Self::SRCorrelation => "sr_correlation_catalog",
        }
    }

    fn tool_description(self) -> &'static str {
        match self {
            Self::FRDependency => {
                "Retrieves types of dependencies among functional requirements and their definitions. Each result starts with its catalog id in square brackets."
            }
            Self::NFRCorrelation => {
                "Retrieves known correlations (absolute or relative conflicts) among non-functional requirement categories. Each result starts with its catalog id in square brackets."
            }
            Self::SRCorrelation => {
                "Retrieves known positive and negative influences among sustainability categories within and across dimensions. Each result starts with its catalog id in square brackets."
            }
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::FRDependency => "FRDependency",
            Self::NFRCorrelation => "NFRCorrelation",
            Self::SRCorrelation => "SRCorrelation",
        }
    }
}

impl fmt::Display for CatalogId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogRecord {
    pub record_id: String,
    pub text: String,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Catalog {
    pub catalog_id: CatalogId,
    pub records: Vec<CatalogRecord>,
}

#[derive(Deserialize)]
struct JsonRow {
    text: String,
    #[serde(default)]
    source_tag: Option<String>,
    #[serde(default)]
    metadata: BTreeMap<String, String>,
}

impl Catalog {
    /// Build from `(text, metadata)` rows, assigning ordinal ids.
    pub fn from_rows(
        catalog_id: CatalogId,
        rows: impl IntoIterator<Item = (String, BTreeMap<String, String>)>,
    ) -> Result<Self, RelateError> {
        let mut records = Vec::new();
        for (i, (text, metadata)) in rows.into_iter().enumerate() {
            if text.trim().is_empty() {
                return Err(RelateError::MalformedInput(format!(
                    "{catalog_id} catalog row {}: empty text",
                    i + 1
                )));
            }
            records.push(CatalogRecord {
                record_id: format!("{}-{}", catalog_id.prefix(), i + 1),
                text: text.trim().to_string(),
                metadata,
            });
        }
        if records.is_empty() {
            return Err(RelateError::EmptyCatalog(catalog_id));
        }
        Ok(Self {
            catalog_id,
            records,
        })
    }

    /// CSV with a `text` column (other columns, such as `source_tag`, become
    /// metadata), or a JSON array of `{text, source_tag?, metadata?}`.
    pub fn parse(catalog_id: CatalogId, content: &str) -> Result<Self, RelateError> {
        if content.trim_start().starts_with('[') {
            let rows: Vec<JsonRow> = serde_json::from_str(content)
                .map_err(|e| RelateError::MalformedInput(format!("{catalog_id}: {e}")))?;
            return Self::from_rows(
                catalog_id,
                rows.into_iter().map(|r| {
                    let mut meta = r.metadata;
                    if let Some(tag) = r.source_tag {
                        meta.insert("source_tag".into(), tag);
                    }
                    (r.text, meta)
                }),
            );
        }
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(content.as_bytes());
        let headers = reader
            .headers()
            .map_err(|e| RelateError::MalformedInput(format!("{catalog_id}: {e}")))?
            .clone();
        let text_col = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case("text"))
            .ok_or_else(|| {
                RelateError::MalformedInput(format!("{catalog_id}: missing text column"))
            })?;
        let mut rows = Vec::new();
        for row in reader.records() {
            let row = row.map_err(|e| RelateError::MalformedInput(format!("{catalog_id}: {e}")))?;
            let mut meta = BTreeMap::new();
            for (i, h) in headers.iter().enumerate() {
                if i != text_col {
                    if let Some(v) = row.get(i).filter(|v| !v.is_empty()) {
                        meta.insert(h.to_string(), v.to_string());
                    }
                }
            }
            rows.push((row.get(text_col).unwrap_or("").to_string(), meta));
        }
        Self::from_rows(catalog_id, rows)
    }

    pub fn index(&self, embedder: &dyn EmbeddingProvider) -> Result<VectorIndex, RelateError> {
        let chunks: Vec<Chunk> = self
            .records
            .iter()
            .map(|r| {
                let mut c = Chunk::new(r.record_id.clone(), ChunkSource::Catalog, r.text.clone())
                    .with_meta("catalog", self.catalog_id.as_str());
                for (k, v) in &r.metadata {
                    c = c.with_meta(k, v.clone());
                }
                c
            })
            .collect();
        let mut index = VectorIndex::for_provider(embedder);
        index.add_chunks(&chunks, embedder, 1)?;
        Ok(index)
    }
}

/// The three indexed catalogs and the embedder they were built with.
#[derive(Clone)]
pub struct Catalogs {
    indexes: BTreeMap<CatalogId, Arc<VectorIndex>>,
    embedder: Arc<dyn EmbeddingProvider>,
}

impl fmt::Debug for Catalogs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Catalogs")
            .field(
                "sizes",
                &self
                    .indexes
                    .iter()
                    .map(|(k, v)| (*k, v.len()))
                    .collect::<Vec<_>>(),
            )
            .field("embedder", &self.embedder.provider_id())
            .finish()
    }
}

impl Catalogs {
    pub fn build(
        catalogs: &[Catalog],
        embedder: Arc<dyn EmbeddingProvider>,
    ) -> Result<Self, RelateError> {
        let mut indexes = BTreeMap::new();
        for c in catalogs {
            indexes.insert(c.catalog_id, Arc::new(c.index(embedder.as_ref())?));
        }
        Self::from_indexes(indexes, embedder)
    }

    pub fn from_indexes(
        indexes: BTreeMap<CatalogId, Arc<VectorIndex>>,
        embedder: Arc<dyn EmbeddingProvider>,
    ) -> Result<Self, RelateError> {
        for id in CatalogId::ALL {
            let index = indexes.get(&id).ok_or(RelateError::EmptyCatalog(id))?;
            if index.is_empty() {
                return Err(RelateError::EmptyCatalog(id));
            }
            if index.provider_id() != embedder.provider_id() {
                return Err(RelateError::Index(
                    crate::semantic_index::IndexError::ProviderMismatch {
                        expected: index.provider_id().to_string(),
                        found: embedder.provider_id().to_string(),
                    },
                ));
            }
        }
        Ok(Self { indexes, embedder })
    }

    pub fn catalog_index(&self, id: CatalogId) -> &Arc<VectorIndex> {
        &self.indexes[&id]
    }

    pub fn embedder(&self) -> &Arc<dyn EmbeddingProvider> {
        &self.embedder
    }

    /// Whether `record_id` belongs to any catalog.
    pub fn contains(&self, record_id: &str) -> bool {
        self.indexes.values().any(|i| i.get(record_id).is_some())
    }

    pub fn tool(&self, id: CatalogId, k: usize) -> Tool {
        let index = self.indexes[&id].clone();
        let embedder = self.embedder.clone();
        Tool::new(id.tool_name(), id.tool_description(), move |input| {
            let hits = index
                .query(input, k, f64::NEG_INFINITY, embedder.as_ref())
                .map_err(|e| e.to_string())?;
            if hits.is_empty() {
                return Ok(ToolOutput::text("No catalog entries found."));
            }
            let text = hits
                .iter()
                .map(|h| format!("[{}] {} (score {:.3})", h.record_id, h.record.text, h.score))
                .collect::<Vec<_>>()
                .join("\n");
            Ok(ToolOutput::with_refs(
                text,
                hits.iter().map(|h| h.record_id.clone()).collect(),
            ))
        })
    }

    pub fn registry(&self, ids: &[CatalogId], k: usize) -> Result<ToolRegistry, RelateError> {
        let mut reg = ToolRegistry::new();
        for id in ids {
            reg.register(self.tool(*id, k))?;
        }
        Ok(reg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json_forms() {
        let c = Catalog::parse(
            CatalogId::NFRCorrelation,
            "text,source_tag\nSecurity conflicts with performance,lit\nUsability helps accessibility,\n",
        )
        .unwrap();
        assert_eq!(c.records.len(), 2);
        assert_eq!(c.records[0].record_id, "nfrcor-1");
        assert_eq!(c.records[0].metadata["source_tag"], "lit");
        assert!(c.records[1].metadata.is_empty());

        let j = Catalog::parse(
            CatalogId::SRCorrelation,
            r#"[{"text": "Energy efficiency helps cost", "source_tag": "gen"}]"#,
        )
        .unwrap();
        assert_eq!(j.records[0].record_id, "srcor-1");
        assert_eq!(j.records[0].metadata["source_tag"], "gen");
    }

    #[test]
    fn empty_or_malformed_catalogs() {
        assert_eq!(
            Catalog::parse(CatalogId::FRDependency, "text\n"),
            Err(RelateError::EmptyCatalog(CatalogId::FRDependency))
        );
        assert!(Catalog::parse(CatalogId::FRDependency, "name\nx\n").is_err());
        assert!(Catalog::parse(CatalogId::FRDependency, "[{\"txt\": 1}]").is_err());
    }
}
