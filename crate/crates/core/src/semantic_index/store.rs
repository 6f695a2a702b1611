use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::embedder::{cosine, embed, embed_many, EmbeddingProvider, EmbeddingVector};
use super::IndexError;
use crate::corpus::Chunk;

pub const INDEX_FORMAT_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"GRIX";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexRecord {
    pub record_id: String,
    pub text: String,
    pub vector: EmbeddingVector,
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueryHit {
    pub record_id: String,
    pub score: f64,
    pub record: IndexRecord,
}

/// Exact (brute-force) cosine index with single-file persistence.
///
/// Reads take `&self` and writes take `&mut self`; share it behind an
/// `RwLock` for many-readers/single-writer access.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    provider_id: String,
    dimension: usize,
    records: Vec<IndexRecord>,
    positions: HashMap<String, usize>,
    closed: bool,
}

impl VectorIndex {
    pub fn new(provider_id: impl Into<String>, dimension: usize) -> Self {
        Self {
            provider_id: provider_id.into(),
            dimension,
            records: Vec::new(),
            positions: HashMap::new(),
            closed: false,
        }
    }

    pub fn for_provider(provider: &dyn EmbeddingProvider) -> Self {
        Self::new(provider.provider_id(), provider.dimension())
    }

    pub fn provider_id(&self) -> &str {
        &self.provider_id
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn records(&self) -> &[IndexRecord] {
        &self.records
    }

    pub fn get(&self, record_id: &str) -> Option<&IndexRecord> {
        self.positions.get(record_id).map(|&i| &self.records[i])
    }

    pub fn close(&mut self) {
        self.closed = true;
    }

    fn check_open(&self) -> Result<(), IndexError> {
        if self.closed {
            Err(IndexError::IndexClosed)
        } else {
            Ok(())
        }
    }

    fn check_provider(&self, provider: &dyn EmbeddingProvider) -> Result<(), IndexError> {
        if provider.dimension() != self.dimension {
            return Err(IndexError::DimensionMismatch {
                expected: self.dimension,
                found: provider.dimension(),
            });
        }
        if provider.provider_id() != self.provider_id {
            return Err(IndexError::ProviderMismatch {
                expected: self.provider_id.clone(),
                found: provider.provider_id().to_string(),
            });
        }
        Ok(())
    }

    /// Insert a pre-embedded record.
    pub fn insert(&mut self, record: IndexRecord) -> Result<String, IndexError> {
        self.check_open()?;
        if record.vector.dimension() != self.dimension {
            return Err(IndexError::DimensionMismatch {
                expected: self.dimension,
                found: record.vector.dimension(),
            });
        }
        if self.positions.contains_key(&record.record_id) {
            return Err(IndexError::DuplicateRecord(record.record_id));
        }
        let id = record.record_id.clone();
        self.positions.insert(id.clone(), self.records.len());
        self.records.push(record);
        Ok(id)
    }

    pub fn add_chunk(
        &mut self,
        chunk: &Chunk,
        provider: &dyn EmbeddingProvider,
    ) -> Result<String, IndexError> {
        self.check_open()?;
        self.check_provider(provider)?;
        if self.positions.contains_key(&chunk.chunk_id) {
            return Err(IndexError::DuplicateRecord(chunk.chunk_id.clone()));
        }
        let vector = embed(&chunk.text, provider)?;
        self.insert(chunk_record(chunk, vector))
    }

    /// Embed and insert a batch; either every chunk is added or none is.
    pub fn add_chunks(
        &mut self,
        chunks: &[Chunk],
        provider: &dyn EmbeddingProvider,
        concurrency: usize,
    ) -> Result<Vec<String>, IndexError> {
        self.check_open()?;
        self.check_provider(provider)?;
        let mut seen = std::collections::HashSet::new();
        for c in chunks {
            if self.positions.contains_key(&c.chunk_id) || !seen.insert(c.chunk_id.as_str()) {
                return Err(IndexError::DuplicateRecord(c.chunk_id.clone()));
            }
        }
        let texts: Vec<&str> = chunks.iter().map(|c| c.text.as_str()).collect();
        let vectors = embed_many(&texts, provider, concurrency)?;
        chunks
            .iter()
            .zip(vectors)
            .map(|(c, v)| self.insert(chunk_record(c, v)))
            .collect()
    }

    pub fn query(
        &self,
        query_text: &str,
        k: usize,
        min_score: f64,
        provider: &dyn EmbeddingProvider,
    ) -> Result<Vec<QueryHit>, IndexError> {
        self.query_filtered(query_text, k, min_score, provider, |_| true)
    }

    pub fn query_filtered(
        &self,
        query_text: &str,
        k: usize,
        min_score: f64,
        provider: &dyn EmbeddingProvider,
        filter: impl Fn(&IndexRecord) -> bool,
    ) -> Result<Vec<QueryHit>, IndexError> {
        self.check_open()?;
        self.check_provider(provider)?;
        if k == 0 {
            return Err(IndexError::InvalidK);
        }
        let q = embed(query_text, provider)?;
        self.query_vector(&q, k, min_score, filter)
    }

    /// Top-`k` records with score >= `min_score`, by descending score then
    /// ascending record id.
    pub fn query_vector(
        &self,
        query: &EmbeddingVector,
        k: usize,
        min_score: f64,
        filter: impl Fn(&IndexRecord) -> bool,
    ) -> Result<Vec<QueryHit>, IndexError> {
        self.check_open()?;
        if k == 0 {
            return Err(IndexError::InvalidK);
        }
        if query.dimension() != self.dimension {
            return Err(IndexError::DimensionMismatch {
                expected: self.dimension,
                found: query.dimension(),
            });
        }
        let mut scored = Vec::new();
        for r in self.records.iter().filter(|r| filter(r)) {
            let score = cosine(query, &r.vector)?;
            if score >= min_score {
                scored.push((score, r));
            }
        }
        scored.sort_by(|a, b| {
            b.0.total_cmp(&a.0)
                .then_with(|| a.1.record_id.cmp(&b.1.record_id))
        });
        Ok(scored
            .into_iter()
            .take(k)
            .map(|(score, r)| QueryHit {
                record_id: r.record_id.clone(),
                score,
                record: r.clone(),
            })
            .collect())
    }

    /// Write the binary index file (atomically via a temp file).
    pub fn persist(&self, path: &Path) -> Result<(), IndexError> {
        let bytes = self.to_bytes();
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, &bytes).map_err(|e| IndexError::Io(e.to_string()))?;
        fs::rename(&tmp, path).map_err(|e| IndexError::Io(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, IndexError> {
        let bytes =
            fs::read(path).map_err(|e| IndexError::Io(format!("{}: {e}", path.display())))?;
        Self::from_bytes(&bytes)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut body = Vec::new();
        for r in &self.records {
            let mut rec = Vec::new();
            put_str(&mut rec, &r.record_id);
            put_str(&mut rec, &r.text);
            rec.extend_from_slice(&(r.metadata.len() as u32).to_le_bytes());
            for (k, v) in &r.metadata {
                put_str(&mut rec, k);
                put_str(&mut rec, v);
            }
            for x in r.vector.values() {
                rec.extend_from_slice(&x.to_le_bytes());
            }
            body.extend_from_slice(&(rec.len() as u32).to_le_bytes());
            body.extend_from_slice(&rec);
        }
        let mut out = Vec::with_capacity(body.len() + 64);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&INDEX_FORMAT_VERSION.to_le_bytes());
        put_str(&mut out, &self.provider_id);
        out.extend_from_slice(&(self.dimension as u32).to_le_bytes());
        out.extend_from_slice(&(self.records.len() as u64).to_le_bytes());
        out.extend_from_slice(&Sha256::digest(&body));
        out.extend_from_slice(&body);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, IndexError> {
        let mut cur = Cursor { bytes, pos: 0 };
        if cur.take(4)? != MAGIC {
            return Err(IndexError::CorruptIndexFile("bad magic".into()));
        }
        let version = cur.u32()?;
        if version != INDEX_FORMAT_VERSION {
            return Err(IndexError::VersionMismatch {
                found: version,
                supported: INDEX_FORMAT_VERSION,
            });
        }
        let provider_id = cur.string()?;
        let dimension = cur.u32()? as usize;
        let count = cur.u64()?;
        let checksum = cur.take(32)?.to_vec();
        let body = &bytes[cur.pos..];
        if Sha256::digest(body).as_slice() != checksum.as_slice() {
            return Err(IndexError::CorruptIndexFile("checksum mismatch".into()));
        }
        let mut index = VectorIndex::new(provider_id, dimension);
        for _ in 0..count {
            let len = cur.u32()? as usize;
            let mut rec = Cursor {
                bytes: cur.take(len)?,
                pos: 0,
            };
            let record_id = rec.string()?;
            let text = rec.string()?;
            let mut metadata = BTreeMap::new();
            for _ in 0..rec.u32()? {
                let k = rec.string()?;
                metadata.insert(k, rec.string()?);
            }
            let mut values = Vec::with_capacity(dimension);
            for _ in 0..dimension {
                values.push(f64::from_le_bytes(
                    rec.take(8)?.try_into().expect("8 bytes"),
                ));
            }
            if rec.pos != rec.bytes.len() {
                return Err(IndexError::CorruptIndexFile(format!(
                    "trailing bytes in record {record_id}"
                )));
            }
            let vector = EmbeddingVector::new(values)
                .map_err(|e| IndexError::CorruptIndexFile(e.to_string()))?;
            index
                .insert(IndexRecord {
                    record_id,
                    text,
                    vector,
                    metadata,
                })
                .map_err(|e| IndexError::CorruptIndexFile(e.to_string()))?;
        }
        if cur.pos != bytes.len() {
            return Err(IndexError::CorruptIndexFile(
                "trailing bytes after records".into(),
            ));
        }
        Ok(index)
    }

    /// Debug export: header plus every record, vectors included.
    pub fn export_json(&self) -> serde_json::Value {
        serde_json::json!({
            "format_version": INDEX_FORMAT_VERSION,
            "provider_id": self.provider_id,
            "dimension": self.dimension,
            "record_count": self.records.len(),
            "records": self.records,
        })
    }
}

fn chunk_record(chunk: &Chunk, vector: EmbeddingVector) -> IndexRecord {
    let mut metadata = chunk.metadata.clone();
    metadata.insert("source".into(), chunk.source.as_str().into());
    IndexRecord {
        record_id: chunk.chunk_id.clone(),
        text: chunk.text.clone(),
        vector,
        metadata,
    }
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], IndexError> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| IndexError::CorruptIndexFile("truncated".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, IndexError> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64, IndexError> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn string(&mut self) -> Result<String, IndexError> {
        let len = self.u32()? as usize;
        String::from_utf8(self.take(len)?.to_vec())
            .map_err(|_| IndexError::CorruptIndexFile("invalid utf-8".into()))
    }
}
