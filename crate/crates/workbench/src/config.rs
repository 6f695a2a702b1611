//! Project configuration (`greenreq.toml`).
//!
//! Paths are resolved against the directory holding the config file and must
//! exist when the config is loaded. Credentials come from environment
//! variables named in the config, never from the file itself.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use greenreq_core::sustainability_optimizer::SatisfiedPredicate;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {detail}")]
    Parse { path: PathBuf, detail: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CatalogPaths {
    pub fr_dependency: PathBuf,
    pub nfr_correlation: PathBuf,
    pub sr_correlation: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inputs {
    pub srs: PathBuf,
    pub taxonomy: PathBuf,
    pub standard_doc: PathBuf,
    pub catalogs: CatalogPaths,
    /// Optional graph edit script applied after extraction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kg_edits: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ChatConfig {
    /// Scripted responses from a JSON file.
    Mock { script: PathBuf },
    /// Any OpenAI-compatible `/chat/completions` endpoint.
    Openai {
        base_url: String,
        model: String,
        #[serde(default)]
        api_key_env: Option<String>,
        #[serde(default = "default_timeout")]
        timeout_secs: u64,
        #[serde(default = "default_retries")]
        max_retries: u32,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EmbeddingConfig {
    /// The offline token-hash embedder.
    Hash,
    /// Any OpenAI-compatible `/embeddings` endpoint.
    Openai {
        base_url: String,
        model: String,
        dimension: usize,
        #[serde(default)]
        api_key_env: Option<String>,
        #[serde(default = "default_timeout")]
        timeout_secs: u64,
        #[serde(default = "default_retries")]
        max_retries: u32,
    },
}

fn default_timeout() -> u64 {
    120
}

fn default_retries() -> u32 {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Providers {
    pub chat: ChatConfig,
    pub embedding: EmbeddingConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    pub coherence: f64,
    pub related: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            coherence: 0.5,
            related: 0.65,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AgentConfig {
    pub temperature: f64,
    pub max_steps: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_output_tokens: Option<u32>,
    /// Classification runs per pair; run 0 is the one later stages use.
    pub runs: u32,
    pub retrieval_k: usize,
    pub concurrency: usize,
}

impl Default for AgentConfig {
    fn default() -> Self {
        Self {
            temperature: 0.3,
            max_steps: greenreq_core::agent::DEFAULT_MAX_STEPS,
            max_output_tokens: None,
            runs: 1,
            retrieval_k: 5,
            concurrency: 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReviewMode {
    /// Decisions come from the decision log and the decisions file; a stage
    /// that needs one stops and reports what it waits for.
    #[default]
    Batch,
    /// The stage waits until a decision is posted through the review API.
    Interactive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Completeness {
    #[default]
    AnyPositive,
    AnyPair,
}

impl From<Completeness> for SatisfiedPredicate {
    fn from(c: Completeness) -> Self {
        match c {
            Completeness::AnyPositive => SatisfiedPredicate::AnyPositive,
            Completeness::AnyPair => SatisfiedPredicate::AnyPair,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Policy {
    pub strict: bool,
    pub completeness: Completeness,
    pub reproposal_limit: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_review_rounds: Option<u32>,
    pub review_mode: ReviewMode,
    /// JSON array of review decisions read in batch mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decisions: Option<PathBuf>,
    /// Continue past a failed scope coherence check.
    pub allow_incoherent: bool,
    /// Interactive mode gives up waiting after this long.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub review_timeout_secs: Option<u64>,
}

impl Default for Policy {
    fn default() -> Self {
        Self {
            strict: true,
            completeness: Completeness::AnyPositive,
            reproposal_limit: greenreq_core::sustainability_optimizer::DEFAULT_REPROPOSAL_LIMIT,
            max_review_rounds: None,
            review_mode: ReviewMode::Batch,
            decisions: None,
            allow_incoherent: false,
            review_timeout_secs: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectConfig {
    pub project_id: String,
    /// Where stage artifacts go; default `artifacts` next to the config.
    #[serde(default = "default_artifacts")]
    pub artifacts_dir: PathBuf,
    pub inputs: Inputs,
    pub providers: Providers,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default)]
    pub agent: AgentConfig,
    #[serde(default)]
    pub policy: Policy,
    /// Directory of the config file; paths above are relative to it.
    #[serde(skip)]
    pub root: PathBuf,
}

fn default_artifacts() -> PathBuf {
    PathBuf::from("artifacts")
}

impl ProjectConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let root = path
            .parent()
            .map(|p| {
                if p.as_os_str().is_empty() {
                    Path::new(".")
                } else {
                    p
                }
            })
            .unwrap_or(Path::new("."))
            .to_path_buf();
        Self::parse(&text, &root).map_err(|e| match e {
            ConfigError::Parse { detail, .. } => ConfigError::Parse {
                path: path.to_path_buf(),
                detail,
            },
            other => other,
        })
    }

    /// Parse and validate config text whose relative paths hang off `root`.
    pub fn parse(text: &str, root: &Path) -> Result<Self, ConfigError> {
        let mut config: ProjectConfig = toml::from_str(text).map_err(|e| ConfigError::Parse {
            path: PathBuf::new(),
            detail: e.message().to_string(),
        })?;
        config.root = root.to_path_buf();
        config.validate()?;
        Ok(config)
    }

    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.root.join(path)
        }
    }

    pub fn artifacts(&self) -> PathBuf {
        self.resolve(&self.artifacts_dir)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| Err(ConfigError::Invalid(m));
        if self.project_id.is_empty()
            || !self
                .project_id
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            return invalid(format!(
                "project_id {:?} must be non-empty ASCII letters, digits, '_' or '-'",
                self.project_id
            ));
        }
        for (name, t) in [
            ("thresholds.coherence", self.thresholds.coherence),
            ("thresholds.related", self.thresholds.related),
        ] {
            if !(0.0..=1.0).contains(&t) {
                return invalid(format!("{name} = {t} is outside [0, 1]"));
            }
        }
        if !self.agent.temperature.is_finite() || self.agent.temperature < 0.0 {
            return invalid(format!(
                "agent.temperature = {} must be >= 0",
                self.agent.temperature
            ));
        }
        for (name, v) in [
            ("agent.max_steps", self.agent.max_steps),
            ("agent.runs", self.agent.runs as usize),
            ("agent.retrieval_k", self.agent.retrieval_k),
            ("agent.concurrency", self.agent.concurrency),
            (
                "policy.reproposal_limit",
                self.policy.reproposal_limit as usize,
            ),
        ] {
            if v == 0 {
                return invalid(format!("{name} must be at least 1"));
            }
        }
        if self.policy.max_review_rounds == Some(0) {
            return invalid("policy.max_review_rounds must be at least 1".into());
        }
        if let EmbeddingConfig::Openai { dimension: 0, .. } = self.providers.embedding {
            return invalid("providers.embedding.dimension must be at least 1".into());
        }
        let mut paths: Vec<(&str, &PathBuf)> = vec![
            ("inputs.srs", &self.inputs.srs),
            ("inputs.taxonomy", &self.inputs.taxonomy),
            ("inputs.standard_doc", &self.inputs.standard_doc),
            (
                "inputs.catalogs.fr_dependency",
                &self.inputs.catalogs.fr_dependency,
            ),
            (
                "inputs.catalogs.nfr_correlation",
                &self.inputs.catalogs.nfr_correlation,
            ),
            (
                "inputs.catalogs.sr_correlation",
                &self.inputs.catalogs.sr_correlation,
            ),
        ];
        if let Some(p) = &self.inputs.kg_edits {
            paths.push(("inputs.kg_edits", p));
        }
        if let Some(p) = &self.policy.decisions {
            paths.push(("policy.decisions", p));
        }
        if let ChatConfig::Mock { script } = &self.providers.chat {
            paths.push(("providers.chat.script", script));
        }
        for (name, p) in paths {
            let full = self.resolve(p);
            if !full.is_file() {
                return invalid(format!("{name}: {} does not exist", full.display()));
            }
        }
        Ok(())
    }
}
