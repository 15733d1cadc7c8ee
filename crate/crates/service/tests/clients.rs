mod common;

use std::net::SocketAddr;
use std::time::Duration;

use axum::routing::post;
use axum::{Json, Router};
use common::fixtures;
use sonify_core::acquisition::{
    corpus_audio, dsp, rank_hits, retrieve_online, transfer_sound, AcquisitionError, AcquisitionMethod, AudioClip,
    GenerationClient, MockRetrieval, RetrievalClient, SoundAsset, SourceRef,
};
use sonify_core::controller::{BackendOptions, ControllerBackend, ControllerError, PromptBundle};
use sonify_service::clients::{ChatController, FreesoundClient, HttpGenerator};
use sonify_service::mock_server::{serve_router, spawn_generation, spawn_retrieval, Faults};

const ANY: &str = "127.0.0.1:0";

fn corpus() -> MockRetrieval {
    MockRetrieval::from_json(&std::fs::read_to_string(fixtures().join("freesound_corpus.json")).unwrap()).unwrap()
}

fn any_addr() -> SocketAddr {
    ANY.parse().unwrap()
}

#[tokio::test]
async fn retrieval_over_http_matches_in_process_mock() {
    let server = spawn_retrieval(corpus(), any_addr()).await.unwrap();
    let client = FreesoundClient::new(server.url(), Some("token".into()), Duration::from_secs(5));
    let query = "footsteps wood";
    let remote = retrieve_online(query, &client).await.unwrap();
    let local = retrieve_online(query, &corpus()).await.unwrap();
    assert_eq!(remote.len(), 5);
    let ids = |a: &[SoundAsset]| a.iter().map(|x| x.id().clone()).collect::<Vec<_>>();
    assert_eq!(ids(&remote), ids(&local));
    let expected: Vec<_> = rank_hits(query, corpus().search_sync(query))
        .into_iter()
        .take(5)
        .map(|h| SourceRef::Remote(h.id))
        .collect();
    let got: Vec<_> = remote.iter().map(|a| a.meta.source_ref.clone().unwrap()).collect();
    assert_eq!(got, expected);
    for a in &remote {
        let SourceRef::Remote(id) = a.meta.source_ref.clone().unwrap() else { unreachable!() };
        assert_eq!(*a.audio, corpus_audio(&id));
        assert_eq!(a.meta.method, AcquisitionMethod::Retrieved);
    }
}

#[tokio::test]
async fn retrieval_without_matches_is_empty() {
    let server = spawn_retrieval(corpus(), any_addr()).await.unwrap();
    let client = FreesoundClient::new(server.url(), None, Duration::from_secs(5));
    let err = retrieve_online("zzzqqq", &client).await.unwrap_err();
    assert!(matches!(err, AcquisitionError::EmptyResults(_)), "{err:?}");
}

#[tokio::test]
async fn retrieval_server_errors_are_unavailable() {
    let server = spawn_retrieval(corpus(), any_addr()).await.unwrap();
    server.faults.set_fail_status(503);
    let client = FreesoundClient::new(server.url(), None, Duration::from_secs(5));
    let err = client.search("wood").await.unwrap_err();
    assert!(matches!(err, AcquisitionError::ServiceUnavailable(_)), "{err:?}");
}

#[tokio::test]
async fn closed_port_is_unavailable() {
    let listener = std::net::TcpListener::bind(ANY).unwrap();
    let addr = listener.local_addr().unwrap();
    drop(listener);
    let client = FreesoundClient::new(format!("http://{addr}"), None, Duration::from_secs(2));
    let err = client.search("wood").await.unwrap_err();
    assert!(matches!(err, AcquisitionError::ServiceUnavailable(_)), "{err:?}");
}

#[tokio::test]
async fn slow_server_times_out() {
    let server = spawn_retrieval(corpus(), any_addr()).await.unwrap();
    server.faults.set_latency(Duration::from_millis(800));
    let client = FreesoundClient::new(server.url(), None, Duration::from_millis(100));
    let err = client.search("wood").await.unwrap_err();
    assert!(matches!(err, AcquisitionError::ServiceUnavailable(_)), "{err:?}");
}

#[tokio::test]
async fn generation_over_http_is_bit_exact() {
    let server = spawn_generation(any_addr()).await.unwrap();
    let client = HttpGenerator::new(server.url(), None, Duration::from_secs(5));
    let clip = client.generate("metal stomp on glass").await.unwrap();
    assert_eq!(clip, dsp::mock_generate("metal stomp on glass"));
    let seed = dsp::mock_generate("seed");
    let out = client.transfer(&seed, "more metallic").await.unwrap();
    assert_eq!(out, dsp::mock_transfer(&seed, "more metallic"));
}

#[tokio::test]
async fn misbehaving_transfer_backend_is_padded_or_truncated() {
    let server = spawn_generation(any_addr()).await.unwrap();
    let client = HttpGenerator::new(server.url(), None, Duration::from_secs(5));
    let seed = SoundAsset::new(dsp::mock_generate("seed"), AcquisitionMethod::Recommended, "seed", None);
    for delta in [-1234_i64, 0, 777] {
        server.faults.set_length_delta(delta);
        let out = transfer_sound(&seed, "softer", &client).await.unwrap();
        assert_eq!(out.audio.len(), seed.audio.len());
        assert_eq!(out.audio.sample_rate(), seed.audio.sample_rate());
        assert_eq!(out.meta.length_adjusted, delta != 0);
        assert_eq!(out.meta.source_ref, Some(SourceRef::Parent(seed.id().clone())));
    }
}

#[tokio::test]
async fn generation_rejects_garbage_audio() {
    let faults = Faults::new();
    let router = Router::new().route("/generate", post(|| async { "not a wav file" }));
    let server = serve_router(router, any_addr(), faults).await.unwrap();
    let client = HttpGenerator::new(server.url(), None, Duration::from_secs(5));
    let err = client.generate("x").await.unwrap_err();
    assert!(matches!(err, AcquisitionError::InvalidAudio(_)), "{err:?}");
}

fn bundle() -> PromptBundle {
    PromptBundle {
        system_context: "system".into(),
        user_message: "This event is Show Up, caused by toy robot.".into(),
        options: BackendOptions::default(),
    }
}

#[tokio::test]
async fn chat_controller_reads_first_choice() {
    let router = Router::new().route(
        "/v1/chat/completions",
        post(|Json(body): Json<serde_json::Value>| async move {
            assert_eq!(body["model"], "gpt-4");
            assert_eq!(body["messages"][0]["role"], "system");
            assert_eq!(body["messages"][1]["content"], "This event is Show Up, caused by toy robot.");
            Json(serde_json::json!({
                "choices": [{"message": {"role": "assistant", "content": "method3generation:robot appears"}}]
            }))
        }),
    );
    let server = serve_router(router, any_addr(), Faults::new()).await.unwrap();
    let c = ChatController::new(format!("{}/v1/chat/completions", server.url()), Some("sk".into()));
    assert_eq!(c.complete(&bundle()).await.unwrap(), "method3generation:robot appears");
}

#[tokio::test]
async fn chat_controller_reports_status_and_bad_bodies() {
    let router = Router::new()
        .route("/fail", post(|| async { (axum::http::StatusCode::UNAUTHORIZED, "no") }))
        .route("/odd", post(|| async { Json(serde_json::json!({"choices": []})) }));
    let server = serve_router(router, any_addr(), Faults::new()).await.unwrap();
    let fail = ChatController::new(format!("{}/fail", server.url()), None);
    assert_eq!(fail.complete(&bundle()).await, Err(ControllerError::Status(401)));
    let odd = ChatController::new(format!("{}/odd", server.url()), None);
    assert!(matches!(odd.complete(&bundle()).await, Err(ControllerError::InvalidResponse(_))));
}

#[tokio::test]
async fn transfer_rejects_rate_change() {
    struct Resampler;
    #[async_trait::async_trait]
    impl GenerationClient for Resampler {
        async fn generate(&self, _: &str) -> Result<AudioClip, AcquisitionError> {
            unreachable!()
        }
        async fn transfer(&self, seed: &AudioClip, _: &str) -> Result<AudioClip, AcquisitionError> {
            AudioClip::new(seed.sample_rate() * 2, seed.samples().to_vec())
        }
    }
    let seed = SoundAsset::new(dsp::mock_generate("seed"), AcquisitionMethod::Recommended, "seed", None);
    let err = transfer_sound(&seed, "x", &Resampler).await.unwrap_err();
    assert!(matches!(err, AcquisitionError::InvalidAudio(_)));
}
