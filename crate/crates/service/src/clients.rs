//! HTTP adapters for the controller, retrieval and generation backends.

use std::time::Duration;

use async_trait::async_trait;
use base64::Engine as _;
use serde::{Deserialize, Serialize};
use serde_json::json;
use sonify_core::acquisition::{AcquisitionError, AudioClip, GenerationClient, RetrievalClient, RetrievalHit};
use sonify_core::controller::{ControllerBackend, ControllerError, PromptBundle};

/// Preview keys tried in order when picking a download URL.
pub const PREVIEW_KEYS: [&str; 2] = ["preview-hq-wav", "preview-lq-wav"];

fn http_client() -> reqwest::Client {
    reqwest::Client::builder()
        .connect_timeout(Duration::from_secs(5))
        .build()
        .expect("reqwest client builds with static settings")
}

/// Why an attempt failed, and whether a second attempt is worthwhile.
enum Attempt {
    Retry(String),
    Fatal(String),
}

fn classify(e: &reqwest::Error) -> Attempt {
    if e.is_timeout() || e.is_connect() || e.is_request() {
        Attempt::Retry(e.to_string())
    } else {
        Attempt::Fatal(e.to_string())
    }
}

async fn fetch(
    request: impl Fn() -> reqwest::RequestBuilder,
    timeout: Duration,
) -> Result<Vec<u8>, AcquisitionError> {
    let mut last = String::new();
    for _ in 0..2 {
        let outcome = match request().timeout(timeout).send().await {
            Err(e) => classify(&e),
            Ok(resp) if resp.status().is_server_error() => Attempt::Retry(format!("HTTP {}", resp.status())),
            Ok(resp) if !resp.status().is_success() => Attempt::Fatal(format!("HTTP {}", resp.status())),
            Ok(resp) => match resp.bytes().await {
                Ok(b) => return Ok(b.to_vec()),
                Err(e) => classify(&e),
            },
        };
        match outcome {
            Attempt::Retry(msg) => last = msg,
            Attempt::Fatal(msg) => return Err(AcquisitionError::ServiceUnavailable(msg)),
        }
    }
    Err(AcquisitionError::ServiceUnavailable(last))
}

/// OpenAI-compatible chat-completion backend.
#[derive(Debug, Clone)]
pub struct ChatController {
    http: reqwest::Client,
    endpoint: String,
    api_key: Option<String>,
}

impl ChatController {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>) -> Self {
        Self {
            http: http_client(),
            endpoint: endpoint.into(),
            api_key,
        }
    }
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Deserialize)]
struct ChatMessage {
    content: Option<String>,
}

#[async_trait]
impl ControllerBackend for ChatController {
    async fn complete(&self, bundle: &PromptBundle) -> Result<String, ControllerError> {
        let body = json!({
            "model": bundle.options.model,
            "temperature": bundle.options.temperature,
            "messages": [
                {"role": "system", "content": bundle.system_context},
                {"role": "user", "content": bundle.user_message},
            ],
        });
        let mut last = ControllerError::Timeout;
        // one retry on transport errors only
        for _ in 0..2 {
            let mut req = self.http.post(&self.endpoint).json(&body).timeout(bundle.options.timeout);
            if let Some(key) = &self.api_key {
                req = req.bearer_auth(key);
            }
            let resp = match req.send().await {
                Ok(r) => r,
                Err(e) if e.is_timeout() => {
                    last = ControllerError::Timeout;
                    continue;
                }
                Err(e) => {
                    last = ControllerError::Transport(e.to_string());
                    continue;
                }
            };
            if !resp.status().is_success() {
                return Err(ControllerError::Status(resp.status().as_u16()));
            }
            let parsed: ChatResponse = resp.json().await.map_err(|e| {
                if e.is_timeout() {
                    ControllerError::Timeout
                } else {
                    ControllerError::InvalidResponse(e.to_string())
                }
            })?;
            return parsed
                .choices
                .into_iter()
                .next()
                .and_then(|c| c.message.content)
                .ok_or_else(|| ControllerError::InvalidResponse("no choices[0].message.content".into()));
        }
        Err(last)
    }
}

/// FreeSound-compatible text search plus preview download.
#[derive(Debug, Clone)]
pub struct FreesoundClient {
    http: reqwest::Client,
    endpoint: String,
    token: Option<String>,
    timeout: Duration,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SearchResponse {
    pub count: usize,
    pub results: Vec<SearchResult>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SearchResult {
    /// FreeSound ids are integers; accept strings too.
    pub id: serde_json::Value,
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub previews: std::collections::BTreeMap<String, String>,
}

impl SearchResult {
    fn into_hit(self) -> RetrievalHit {
        let id = match self.id {
            serde_json::Value::String(s) => s,
            other => other.to_string(),
        };
        let download_url = PREVIEW_KEYS.iter().find_map(|k| self.previews.get(*k).cloned());
        RetrievalHit {
            id,
            name: self.name,
            description: self.description,
            download_url,
        }
    }
}

impl FreesoundClient {
    pub fn new(endpoint: impl Into<String>, token: Option<String>, timeout: Duration) -> Self {
        Self {
            http: http_client(),
            endpoint: endpoint.into().trim_end_matches('/').to_owned(),
            token,
            timeout,
        }
    }

    fn authed(&self, req: reqwest::RequestBuilder) -> reqwest::RequestBuilder {
        match &self.token {
            Some(t) => req.header("Authorization", format!("Token {t}")),
            None => req,
        }
    }
}

#[async_trait]
impl RetrievalClient for FreesoundClient {
    async fn search(&self, query: &str) -> Result<Vec<RetrievalHit>, AcquisitionError> {
        let url = format!("{}/apiv2/search/text/", self.endpoint);
        let body = fetch(
            || {
                self.authed(self.http.get(&url).query(&[
                    ("query", query),
                    ("fields", "id,name,description,previews"),
                ]))
            },
            self.timeout,
        )
        .await?;
        let parsed: SearchResponse = serde_json::from_slice(&body)
            .map_err(|e| AcquisitionError::ServiceUnavailable(format!("malformed search response: {e}")))?;
        Ok(parsed.results.into_iter().map(SearchResult::into_hit).collect())
    }

    async fn download(&self, hit: &RetrievalHit) -> Result<AudioClip, AcquisitionError> {
        let url = hit
            .download_url
            .as_deref()
            .ok_or_else(|| AcquisitionError::InvalidAudio(format!("sound {} has no WAV preview", hit.id)))?;
        let bytes = fetch(|| self.authed(self.http.get(url)), self.timeout).await?;
        AudioClip::from_wav_bytes(&bytes)
    }
}

/// Request body of the generation service.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GenerationRequest {
    pub prompt: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_audio: Option<String>,
    pub mode: GenerationMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GenerationMode {
    Generate,
    Transfer,
}

pub fn encode_wav_base64(clip: &AudioClip) -> String {
    base64::engine::general_purpose::STANDARD.encode(clip.to_wav_bytes())
}

pub fn decode_wav_base64(text: &str) -> Result<AudioClip, AcquisitionError> {
    let bytes = base64::engine::general_purpose::STANDARD
        .decode(text)
        .map_err(|e| AcquisitionError::InvalidAudio(format!("seed_audio is not base64: {e}")))?;
    AudioClip::from_wav_bytes(&bytes)
}

/// Generation service speaking `POST /generate` and returning WAV bytes.
#[derive(Debug, Clone)]
pub struct HttpGenerator {
    http: reqwest::Client,
    endpoint: String,
    api_key: Option<String>,
    timeout: Duration,
}

impl HttpGenerator {
    pub fn new(endpoint: impl Into<String>, api_key: Option<String>, timeout: Duration) -> Self {
        Self {
            http: http_client(),
            endpoint: endpoint.into().trim_end_matches('/').to_owned(),
            api_key,
            timeout,
        }
    }

    async fn call(&self, body: &GenerationRequest) -> Result<AudioClip, AcquisitionError> {
        let url = format!("{}/generate", self.endpoint);
        let bytes = fetch(
            || {
                let req = self.http.post(&url).json(body);
                match &self.api_key {
                    Some(k) => req.bearer_auth(k),
                    None => req,
                }
            },
            self.timeout,
        )
        .await?;
        AudioClip::from_wav_bytes(&bytes)
    }
}

#[async_trait]
impl GenerationClient for HttpGenerator {
    async fn generate(&self, prompt: &str) -> Result<AudioClip, AcquisitionError> {
        self.call(&GenerationRequest {
            prompt: prompt.to_owned(),
            seed_audio: None,
            mode: GenerationMode::Generate,
        })
        .await
    }

    async fn transfer(&self, seed: &AudioClip, prompt: &str) -> Result<AudioClip, AcquisitionError> {
        self.call(&GenerationRequest {
            prompt: prompt.to_owned(),
            seed_audio: Some(encode_wav_base64(seed)),
            mode: GenerationMode::Transfer,
        })
        .await
    }
}
