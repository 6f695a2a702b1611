//! Chat and embedding backends built from the project config.

use std::sync::Arc;
use std::thread;
use std::time::Duration;

use serde_json::{json, Value};

use greenreq_core::agent::{ChatProvider, ChatRequest, MockChatProvider};
use greenreq_core::provider::ProviderError;
use greenreq_core::semantic_index::{EmbeddingProvider, HashEmbedder};
use greenreq_core::util::sha256_hex;

use crate::config::{ChatConfig, ConfigError, EmbeddingConfig, ProjectConfig};

pub struct Providers {
    pub chat: Arc<dyn ChatProvider>,
    pub embedder: Arc<dyn EmbeddingProvider>,
}

impl Providers {
    pub fn build(config: &ProjectConfig) -> Result<Self, ConfigError> {
        Ok(Self {
            chat: chat_provider(config)?,
            embedder: embedding_provider(config)?,
        })
    }
}

pub fn chat_provider(config: &ProjectConfig) -> Result<Arc<dyn ChatProvider>, ConfigError> {
    match &config.providers.chat {
        ChatConfig::Mock { script } => {
            let path = config.resolve(script);
            let text = std::fs::read_to_string(&path).map_err(|source| ConfigError::Io {
                path: path.clone(),
                source,
            })?;
            let mock = MockChatProvider::from_script(&text)
                .map_err(|detail| ConfigError::Parse { path, detail })?;
            Ok(Arc::new(mock))
        }
        ChatConfig::Openai {
            base_url,
            model,
            api_key_env,
            timeout_secs,
            max_retries,
        } => Ok(Arc::new(OpenAiChat {
            http: Http::new(base_url, api_key(api_key_env)?, *timeout_secs, *max_retries)?,
            provider_id: format!("openai:{model}"),
            model: model.clone(),
        })),
    }
}

pub fn embedding_provider(
    config: &ProjectConfig,
) -> Result<Arc<dyn EmbeddingProvider>, ConfigError> {
    match &config.providers.embedding {
        EmbeddingConfig::Hash => Ok(Arc::new(HashEmbedder)),
        EmbeddingConfig::Openai {
            base_url,
            model,
            dimension,
            api_key_env,
            timeout_secs,
            max_retries,
        } => Ok(Arc::new(OpenAiEmbedding {
            http: Http::new(base_url, api_key(api_key_env)?, *timeout_secs, *max_retries)?,
            provider_id: format!("openai:{model}"),
            model: model.clone(),
            dimension: *dimension,
        })),
    }
}

/// Identity of the chat backend for input hashing: its id plus, for a
/// mock, the script content.
pub fn chat_fingerprint(config: &ProjectConfig) -> String {
    match &config.providers.chat {
        ChatConfig::Mock { script } => {
            let bytes = std::fs::read(config.resolve(script)).unwrap_or_default();
            format!("mock:{}", sha256_hex(bytes))
        }
        ChatConfig::Openai {
            base_url, model, ..
        } => format!("openai:{base_url}:{model}"),
    }
}

pub fn embedding_fingerprint(config: &ProjectConfig) -> String {
    match &config.providers.embedding {
        EmbeddingConfig::Hash => HashEmbedder.provider_id().to_string(),
        EmbeddingConfig::Openai {
            base_url,
            model,
            dimension,
            ..
        } => format!("openai:{base_url}:{model}:{dimension}"),
    }
}

fn api_key(env: &Option<String>) -> Result<Option<String>, ConfigError> {
    match env {
        None => Ok(None),
        Some(name) => std::env::var(name)
            .map(Some)
            .map_err(|_| ConfigError::Invalid(format!("environment variable {name} is not set"))),
    }
}

struct Http {
    client: reqwest::blocking::Client,
    base_url: String,
    api_key: Option<String>,
    max_retries: u32,
}

impl Http {
    fn new(
        base_url: &str,
        api_key: Option<String>,
        timeout_secs: u64,
        max_retries: u32,
    ) -> Result<Self, ConfigError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(timeout_secs))
            .build()
            .map_err(|e| ConfigError::Invalid(format!("http client: {e}")))?;
        Ok(Self {
            client,
            base_url: base_url.trim_end_matches('/').to_string(),
            api_key,
            max_retries,
        })
    }

    /// POST with retries on transport errors, 429 and 5xx.
    fn post(&self, path: &str, body: &Value) -> Result<Value, ProviderError> {
        let url = format!("{}/{}", self.base_url, path);
        let mut attempt = 0;
        loop {
            let mut req = self.client.post(&url).json(body);
            if let Some(key) = &self.api_key {
                req = req.bearer_auth(key);
            }
            let retryable = match req.send() {
                Ok(resp) => {
                    let status = resp.status();
                    if status.is_success() {
                        return resp
                            .json::<Value>()
                            .map_err(|e| ProviderError::BadResponse(format!("{url}: {e}")));
                    }
                    let text = resp.text().unwrap_or_default();
                    let err = ProviderError::Unavailable(format!(
                        "{url}: HTTP {status}: {}",
                        truncate(&text, 300)
                    ));
                    if status.as_u16() == 429 || status.is_server_error() {
                        err
                    } else {
                        return Err(err);
                    }
                }
                Err(e) => ProviderError::Unavailable(format!("{url}: {e}")),
            };
            if attempt >= self.max_retries {
                return Err(retryable);
            }
            attempt += 1;
            thread::sleep(Duration::from_millis(500 << attempt));
        }
    }
}

fn truncate(s: &str, n: usize) -> &str {
    match s.char_indices().nth(n) {
        Some((i, _)) => &s[..i],
        None => s,
    }
}

struct OpenAiChat {
    http: Http,
    provider_id: String,
    model: String,
}

impl ChatProvider for OpenAiChat {
    fn provider_id(&self) -> &str {
        &self.provider_id
    }

    fn complete(&self, request: &ChatRequest) -> Result<String, ProviderError> {
        let mut body = json!({
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.params.temperature,
        });
        if let Some(max) = request.params.max_output_tokens {
            body["max_tokens"] = json!(max);
        }
        let resp = self.http.post("chat/completions", &body)?;
        resp["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| ProviderError::BadResponse("no choices[0].message.content".into()))
    }
}

struct OpenAiEmbedding {
    http: Http,
    provider_id: String,
    model: String,
    dimension: usize,
}

impl EmbeddingProvider for OpenAiEmbedding {
    fn provider_id(&self) -> &str {
        &self.provider_id
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f64>>, ProviderError> {
        let resp = self
            .http
            .post("embeddings", &json!({"model": self.model, "input": texts}))?;
        let data = resp["data"]
            .as_array()
            .ok_or_else(|| ProviderError::BadResponse("no data array".into()))?;
        let mut rows: Vec<(u64, Vec<f64>)> = Vec::with_capacity(data.len());
        for (i, item) in data.iter().enumerate() {
            let index = item["index"].as_u64().unwrap_or(i as u64);
            let vector = item["embedding"]
                .as_array()
                .ok_or_else(|| ProviderError::BadResponse("no embedding array".into()))?
                .iter()
                .map(|x| {
                    x.as_f64()
                        .ok_or_else(|| ProviderError::BadResponse("non-numeric embedding".into()))
                })
                .collect::<Result<Vec<f64>, _>>()?;
            rows.push((index, vector));
        }
        rows.sort_by_key(|r| r.0);
        if rows.len() != texts.len() {
            return Err(ProviderError::BadResponse(format!(
                "{} embeddings for {} texts",
                rows.len(),
                texts.len()
            )));
        }
        Ok(rows.into_iter().map(|r| r.1).collect())
    }
}
