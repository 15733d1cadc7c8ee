//! Local stand-ins for the retrieval and generation services, with fault
//! injection for tests.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicI64, AtomicU16, AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{header, HeaderMap, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Deserialize;
use sonify_core::acquisition::{corpus_audio, dsp, MockRetrieval};
use tokio::net::TcpListener;
use tokio::task::JoinHandle;

use crate::clients::{decode_wav_base64, GenerationMode, GenerationRequest, SearchResponse, SearchResult};

/// Faults applied to every request. Adjustable while the server runs.
#[derive(Debug, Default)]
pub struct Faults {
    latency_ms: AtomicU64,
    fail_status: AtomicU16,
    length_delta: AtomicI64,
}

impl Faults {
    pub fn new() -> Arc<Self> {
        Arc::new(Self::default())
    }

    pub fn set_latency(&self, latency: Duration) {
        self.latency_ms.store(latency.as_millis() as u64, Ordering::SeqCst);
    }

    /// Every request answers with `status` (0 disables).
    pub fn set_fail_status(&self, status: u16) {
        self.fail_status.store(status, Ordering::SeqCst);
    }

    /// Transfer responses gain (or lose) this many samples.
    pub fn set_length_delta(&self, delta: i64) {
        self.length_delta.store(delta, Ordering::SeqCst);
    }

    async fn apply(&self) -> Option<Response> {
        let ms = self.latency_ms.load(Ordering::SeqCst);
        if ms > 0 {
            tokio::time::sleep(Duration::from_millis(ms)).await;
        }
        match self.fail_status.load(Ordering::SeqCst) {
            0 => None,
            s => Some(StatusCode::from_u16(s).unwrap_or(StatusCode::SERVICE_UNAVAILABLE).into_response()),
        }
    }
}

fn wav(bytes: Vec<u8>) -> Response {
    ([(header::CONTENT_TYPE, "audio/wav")], bytes).into_response()
}

#[derive(Clone)]
struct RetrievalState {
    corpus: Arc<MockRetrieval>,
    faults: Arc<Faults>,
}

#[derive(Deserialize)]
struct SearchParams {
    query: String,
}

async fn search(State(s): State<RetrievalState>, headers: HeaderMap, Query(p): Query<SearchParams>) -> Response {
    if let Some(r) = s.faults.apply().await {
        return r;
    }
    let host = headers
        .get(header::HOST)
        .and_then(|h| h.to_str().ok())
        .unwrap_or("127.0.0.1");
    let results: Vec<SearchResult> = s
        .corpus
        .search_sync(&p.query)
        .into_iter()
        .map(|h| SearchResult {
            previews: [(
                "preview-hq-wav".to_string(),
                format!("http://{host}/apiv2/sounds/{}/preview.wav", h.id),
            )]
            .into(),
            id: h.id.into(),
            name: h.name,
            description: h.description,
        })
        .collect();
    Json(SearchResponse { count: results.len(), results }).into_response()
}

async fn preview(State(s): State<RetrievalState>, Path(id): Path<String>) -> Response {
    if let Some(r) = s.faults.apply().await {
        return r;
    }
    match s.corpus.lookup(&id) {
        Some(h) => wav(corpus_audio(&h.id).to_wav_bytes()),
        None => StatusCode::NOT_FOUND.into_response(),
    }
}

pub fn retrieval_router(corpus: MockRetrieval, faults: Arc<Faults>) -> Router {
    Router::new()
        .route("/apiv2/search/text/", get(search))
        .route("/apiv2/sounds/{id}/preview.wav", get(preview))
        .with_state(RetrievalState {
            corpus: Arc::new(corpus),
            faults,
        })
}

async fn generate(State(faults): State<Arc<Faults>>, body: Bytes) -> Response {
    if let Some(r) = faults.apply().await {
        return r;
    }
    let req: GenerationRequest = match serde_json::from_slice(&body) {
        Ok(r) => r,
        Err(e) => return (StatusCode::BAD_REQUEST, e.to_string()).into_response(),
    };
    let clip = match req.mode {
        GenerationMode::Generate => dsp::mock_generate(&req.prompt),
        GenerationMode::Transfer => {
            let Some(seed) = req.seed_audio.as_deref() else {
                return (StatusCode::BAD_REQUEST, "transfer needs seed_audio").into_response();
            };
            let seed = match decode_wav_base64(seed) {
                Ok(c) => c,
                Err(e) => return (StatusCode::BAD_REQUEST, e.to_string()).into_response(),
            };
            let out = dsp::mock_transfer(&seed, &req.prompt);
            let delta = faults.length_delta.load(Ordering::SeqCst);
            if delta == 0 {
                out
            } else {
                out.fit_to_len((out.len() as i64 + delta).max(1) as usize)
            }
        }
    };
    wav(clip.to_wav_bytes())
}

pub fn generation_router(faults: Arc<Faults>) -> Router {
    Router::new().route("/generate", post(generate)).with_state(faults)
}

/// A mock server bound to a local port.
pub struct MockServer {
    pub addr: SocketAddr,
    pub faults: Arc<Faults>,
    handle: JoinHandle<()>,
}

impl MockServer {
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub fn shutdown(self) {
        self.handle.abort();
    }
}

impl Drop for MockServer {
    fn drop(&mut self) {
        self.handle.abort();
    }
}

pub async fn serve_router(router: Router, addr: SocketAddr, faults: Arc<Faults>) -> std::io::Result<MockServer> {
    let listener = TcpListener::bind(addr).await?;
    let addr = listener.local_addr()?;
    let handle = tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, router).await {
            tracing::error!("mock server stopped: {e}");
        }
    });
    Ok(MockServer { addr, faults, handle })
}

pub async fn spawn_retrieval(corpus: MockRetrieval, addr: SocketAddr) -> std::io::Result<MockServer> {
    let faults = Faults::new();
    serve_router(retrieval_router(corpus, faults.clone()), addr, faults).await
}

pub async fn spawn_generation(addr: SocketAddr) -> std::io::Result<MockServer> {
    let faults = Faults::new();
    serve_router(generation_router(faults.clone()), addr, faults).await
}
