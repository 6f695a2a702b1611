//! Per-project artifact directory: JSON artifacts, a manifest of their
//! content hashes in `state.json`, and the append-only decision log.

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use greenreq_core::review::{ReviewDecision, ReviewStage};
use greenreq_core::util::sha256_hex;

pub const STATE_FILE: &str = "state.json";
pub const DECISIONS_FILE: &str = "decisions.jsonl";
const LOCK_FILE: &str = ".lock";
pub const STATE_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("artifact {name} is not valid JSON for its type: {detail}")]
    Json { name: String, detail: String },
    #[error("artifact {0} was modified after it was written")]
    Tampered(String),
    #[error("artifact {0} does not exist")]
    Missing(String),
    #[error("{0} is not an initialized project directory; run `init` first")]
    NotInitialized(PathBuf),
    #[error("artifact directory belongs to project {found}, config says {expected}")]
    ProjectMismatch { expected: String, found: String },
    #[error("another process is writing to {0}")]
    Busy(PathBuf),
    #[error("decision {0} is already in the log")]
    DuplicateDecision(String),
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> StoreError + '_ {
    move |source| StoreError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Stage {
    Init,
    Elicited,
    Related,
    Classified,
    Optimized,
    Complete,
}

impl Stage {
    pub const ALL: [Stage; 6] = [
        Stage::Init,
        Stage::Elicited,
        Stage::Related,
        Stage::Classified,
        Stage::Optimized,
        Stage::Complete,
    ];

    pub fn previous(self) -> Stage {
        let i = Self::ALL.iter().position(|s| *s == self).unwrap_or(0);
        Self::ALL[i.saturating_sub(1)]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepRecord {
    pub name: String,
    /// Hash over everything the step read.
    pub input_hash: String,
    pub outputs: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReviewStatus {
    Pending,
    Decided,
}

/// Something the pipeline waits on a human for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewItem {
    pub review_id: String,
    pub stage: ReviewStage,
    /// Candidate-set round (`round-1`) or optimization task id.
    pub subject: String,
    pub round: u32,
    /// Artifact holding the payload under review.
    pub artifact: String,
    pub status: ReviewStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub decision_id: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PipelineState {
    pub schema_version: u32,
    pub project_id: String,
    pub stage: Stage,
    /// Completed steps in the order they ran.
    pub steps: Vec<StepRecord>,
    /// Artifact file name to sha256 of its bytes.
    pub artifacts: BTreeMap<String, String>,
    pub reviews: Vec<ReviewItem>,
    /// Logged decisions that no longer apply because the steps they were
    /// about were discarded by a forced rerun.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub retired_decisions: Vec<String>,
}

impl PipelineState {
    pub fn new(project_id: impl Into<String>) -> Self {
        Self {
            schema_version: STATE_SCHEMA_VERSION,
            project_id: project_id.into(),
            stage: Stage::Init,
            steps: Vec::new(),
            artifacts: BTreeMap::new(),
            reviews: Vec::new(),
            retired_decisions: Vec::new(),
        }
    }

    pub fn step(&self, name: &str) -> Option<&StepRecord> {
        self.steps.iter().find(|s| s.name == name)
    }

    pub fn review(&self, review_id: &str) -> Option<&ReviewItem> {
        self.reviews.iter().find(|r| r.review_id == review_id)
    }

    pub fn pending_reviews(&self) -> impl Iterator<Item = &ReviewItem> {
        self.reviews
            .iter()
            .filter(|r| r.status == ReviewStatus::Pending)
    }

    /// Add a pending review unless one with this id exists already.
    pub fn open_review(&mut self, item: ReviewItem) {
        if self.review(&item.review_id).is_none() {
            self.reviews.push(item);
        }
    }

    pub fn close_review(&mut self, review_id: &str, decision_id: &str) {
        if let Some(r) = self.reviews.iter_mut().find(|r| r.review_id == review_id) {
            r.status = ReviewStatus::Decided;
            r.decision_id = Some(decision_id.to_string());
        }
    }
}

#[derive(Debug, Clone)]
pub struct ArtifactStore {
    dir: PathBuf,
}

/// Exclusive write access to a project directory, released on drop or when
/// the process exits.
#[derive(Debug)]
pub struct ProjectLock {
    _file: File,
}

impl ArtifactStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        Self { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn is_initialized(&self) -> bool {
        self.path(STATE_FILE).is_file()
    }

    /// Create the directory and an empty state if there is none yet.
    pub fn init(&self, project_id: &str) -> Result<PipelineState, StoreError> {
        fs::create_dir_all(&self.dir).map_err(io(&self.dir))?;
        if self.is_initialized() {
            return self.load_state(project_id);
        }
        let state = PipelineState::new(project_id);
        self.save_state(&state)?;
        Ok(state)
    }

    pub fn load_state(&self, project_id: &str) -> Result<PipelineState, StoreError> {
        let path = self.path(STATE_FILE);
        if !path.is_file() {
            return Err(StoreError::NotInitialized(self.dir.clone()));
        }
        let bytes = fs::read(&path).map_err(io(&path))?;
        let state: PipelineState =
            serde_json::from_slice(&bytes).map_err(|e| StoreError::Json {
                name: STATE_FILE.into(),
                detail: e.to_string(),
            })?;
        if state.project_id != project_id {
            return Err(StoreError::ProjectMismatch {
                expected: project_id.into(),
                found: state.project_id,
            });
        }
        Ok(state)
    }

    pub fn save_state(&self, state: &PipelineState) -> Result<(), StoreError> {
        self.write_file(STATE_FILE, &to_json_bytes(state))
    }

    fn write_file(&self, name: &str, bytes: &[u8]) -> Result<(), StoreError> {
        let path = self.path(name);
        let tmp = self.path(&format!(".{name}.tmp"));
        fs::write(&tmp, bytes).map_err(io(&tmp))?;
        fs::rename(&tmp, &path).map_err(io(&path))
    }

    /// Write an artifact and record its hash in the manifest.
    pub fn write_bytes(
        &self,
        state: &mut PipelineState,
        name: &str,
        bytes: &[u8],
    ) -> Result<(), StoreError> {
        self.write_file(name, bytes)?;
        state.artifacts.insert(name.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_json<T: Serialize>(
        &self,
        state: &mut PipelineState,
        name: &str,
        value: &T,
    ) -> Result<(), StoreError> {
        self.write_bytes(state, name, &to_json_bytes(value))
    }

    /// Artifact bytes, checked against the manifest.
    pub fn read_bytes(&self, state: &PipelineState, name: &str) -> Result<Vec<u8>, StoreError> {
        let expected = state
            .artifacts
            .get(name)
            .ok_or_else(|| StoreError::Missing(name.to_string()))?;
        let path = self.path(name);
        let bytes = fs::read(&path).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => StoreError::Missing(name.to_string()),
            _ => StoreError::Io { path, source: e },
        })?;
        if &sha256_hex(&bytes) != expected {
            return Err(StoreError::Tampered(name.to_string()));
        }
        Ok(bytes)
    }

    pub fn read_json<T: DeserializeOwned>(
        &self,
        state: &PipelineState,
        name: &str,
    ) -> Result<T, StoreError> {
        let bytes = self.read_bytes(state, name)?;
        serde_json::from_slice(&bytes).map_err(|e| StoreError::Json {
            name: name.to_string(),
            detail: e.to_string(),
        })
    }

    /// Whether the artifact is on disk and matches its manifest hash.
    pub fn intact(&self, state: &PipelineState, name: &str) -> bool {
        self.read_bytes(state, name).is_ok()
    }

    pub fn remove(&self, state: &mut PipelineState, name: &str) -> Result<(), StoreError> {
        state.artifacts.remove(name);
        let path = self.path(name);
        match fs::remove_file(&path) {
            Err(e) if e.kind() != std::io::ErrorKind::NotFound => {
                Err(StoreError::Io { path, source: e })
            }
            _ => Ok(()),
        }
    }

    /// Every decision in the log, oldest first.
    pub fn decisions(&self) -> Result<Vec<ReviewDecision>, StoreError> {
        let path = self.path(DECISIONS_FILE);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(e) => return Err(StoreError::Io { path, source: e }),
        };
        text.lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(i, l)| {
                serde_json::from_str(l).map_err(|e| StoreError::Json {
                    name: format!("{DECISIONS_FILE} line {}", i + 1),
                    detail: e.to_string(),
                })
            })
            .collect()
    }

    /// Append one decision; earlier lines are never touched.
    pub fn append_decision(&self, decision: &ReviewDecision) -> Result<(), StoreError> {
        if self
            .decisions()?
            .iter()
            .any(|d| d.decision_id == decision.decision_id)
        {
            return Err(StoreError::DuplicateDecision(decision.decision_id.clone()));
        }
        let path = self.path(DECISIONS_FILE);
        let mut line = serde_json::to_string(decision).expect("decision serializes");
        line.push('\n');
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(io(&path))?;
        f.write_all(line.as_bytes()).map_err(io(&path))?;
        f.sync_all().map_err(io(&path))
    }

    pub fn try_lock(&self) -> Result<ProjectLock, StoreError> {
        fs::create_dir_all(&self.dir).map_err(io(&self.dir))?;
        let path = self.path(LOCK_FILE);
        let file = OpenOptions::new()
            .create(true)
            .truncate(false)
            .write(true)
            .open(&path)
            .map_err(io(&path))?;
        match file.try_lock() {
            Ok(()) => Ok(ProjectLock { _file: file }),
            Err(fs::TryLockError::WouldBlock) => Err(StoreError::Busy(self.dir.clone())),
            Err(fs::TryLockError::Error(source)) => Err(StoreError::Io { path, source }),
        }
    }
}

/// Pretty JSON with a trailing newline; the on-disk form of every artifact.
pub fn to_json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut bytes = serde_json::to_vec_pretty(value).expect("artifact serializes");
    bytes.push(b'\n');
    bytes
}
