mod common;

use std::sync::Arc;
use std::time::Duration;

use common::{mock_backends, mock_config, robot_events, unique, FixedController, StalledController};
use sonify_core::acquisition::{AcquisitionMethod, SourceRef};
use sonify_core::{ArEvent, AssetId, EventId, EventType};
use sonify_service::actor::{StreamBody, TransferMode};
use sonify_service::batch::run_batch;
use sonify_service::jobs::{FailureKind, JobMethod, JobState};
use sonify_service::session::{Session, SessionError};
use sonify_service::{Backends, SessionHandle};

fn new_session() -> Session {
    Session::new("test".into(), None, Default::default(), mock_config().snapshot())
}

fn spawn(backends: Backends) -> SessionHandle {
    SessionHandle::spawn(new_session(), backends, 8)
}

fn first_of(events: &[ArEvent], ty: EventType) -> ArEvent {
    events.iter().find(|e| e.event_type == ty).unwrap().clone()
}

async fn feed(h: &SessionHandle, events: &[ArEvent]) {
    for e in events {
        h.sim_event(e.clone(), 0.0).await.unwrap();
    }
    h.when_idle().await.unwrap();
}

async fn playbacks(h: &SessionHandle) -> Vec<(EventId, AssetId)> {
    let (history, _) = h.subscribe().await.unwrap();
    history
        .into_iter()
        .filter_map(|m| match m.body {
            StreamBody::Playback(p) => Some((p.event_id, p.asset_id)),
            _ => None,
        })
        .collect()
}

#[tokio::test]
async fn collide_and_show_up_fan_out() {
    let events = unique(&robot_events());
    let h = spawn(mock_backends());
    feed(&h, &events[..3]).await;
    let s = h.snapshot().await.unwrap();
    let jobs_of = |id: &str| s.jobs.iter().filter(|j| j.event_id.0 == id).collect::<Vec<_>>();
    let show_up = jobs_of("evt-0001");
    assert_eq!(
        show_up.iter().map(|j| j.method).collect::<Vec<_>>(),
        [JobMethod::Recommend, JobMethod::Retrieve, JobMethod::Generate]
    );
    let collide = jobs_of("evt-0003");
    assert_eq!(collide.len(), 4);
    assert!(collide.iter().any(|j| j.method == JobMethod::Transfer));
    for j in &s.jobs {
        assert_eq!(j.state, JobState::Done, "{j:?}");
        assert!(!j.result.is_empty());
        assert!(j.started_at.is_some() && j.finished_at.is_some());
    }
    for c in s.candidates.values() {
        assert!(c.methods().count() >= 3);
    }
}

#[tokio::test]
async fn controller_timeout_fails_one_job() {
    let mut backends = mock_backends();
    backends.controller = Arc::new(StalledController(Duration::from_secs(5)));
    backends.options.timeout = Duration::from_millis(50);
    let h = spawn(backends);
    let events = unique(&robot_events());
    feed(&h, &events[..1]).await;
    let s = h.snapshot().await.unwrap();
    assert_eq!(s.jobs.len(), 1);
    assert_eq!(s.jobs[0].method, JobMethod::Controller);
    assert!(matches!(&s.jobs[0].state, JobState::Failed { kind: FailureKind::Controller, reason } if reason.contains("timed out")));
    let views = h.events().await.unwrap();
    assert_eq!(views.len(), 1);
    assert_eq!(views[0].candidate_count, 0);
}

#[tokio::test]
async fn selection_drives_playback() {
    let all = robot_events();
    let collide = first_of(&all, EventType::Collide);
    let mut again = collide.clone();
    again.timestamp += 0.5;
    let mut third = collide.clone();
    third.timestamp += 1.0;
    let h = spawn(mock_backends());
    feed(&h, &[collide.clone(), again.clone()]).await;
    assert!(playbacks(&h).await.is_empty());

    let id = EventId::from("evt-0001");
    let view = h.candidates(id.clone()).await.unwrap();
    let generated = view.candidates.primary[&AcquisitionMethod::Generated][0].asset_id.clone();
    let recommended = view.candidates.primary[&AcquisitionMethod::Recommended][0].asset_id.clone();
    h.select(id.clone(), generated.clone()).await.unwrap();
    feed(&h, &[again.clone()]).await;
    assert_eq!(playbacks(&h).await, [(id.clone(), generated.clone())]);

    h.select(id.clone(), recommended.clone()).await.unwrap();
    feed(&h, &[third]).await;
    assert_eq!(playbacks(&h).await, [(id.clone(), generated), (id.clone(), recommended.clone())]);
    assert_eq!(h.view().await.unwrap().selections[&id], recommended);
}

#[tokio::test]
async fn selection_errors() {
    let events = unique(&robot_events());
    let h = spawn(mock_backends());
    feed(&h, &events[..2]).await;
    let mine = h.candidates("evt-0001".into()).await.unwrap().candidates;
    let other = h.candidates("evt-0002".into()).await.unwrap().candidates;
    let foreign = other.iter().find(|m| !mine.contains(&m.asset_id)).unwrap().asset_id.clone();
    let err = h.select("evt-0001".into(), foreign.clone()).await.unwrap_err();
    assert!(matches!(err, SessionError::NotACandidate { .. }));
    let err = h.select("evt-9999".into(), foreign).await.unwrap_err();
    assert_eq!(err, SessionError::UnknownEvent("evt-9999".into()));
}

#[tokio::test]
async fn user_transfer_keeps_length_and_dedupes() {
    let all = robot_events();
    let tap = first_of(&all, EventType::TapVirtualObject);
    let h = spawn(mock_backends());
    feed(&h, &[tap]).await;
    let id = EventId::from("evt-0001");
    let view = h.candidates(id.clone()).await.unwrap();
    let parent = view.candidates.primary[&AcquisitionMethod::Recommended][0].clone();

    let a = h
        .request_transfer(id.clone(), parent.asset_id.clone(), "more metallic".into(), TransferMode::Transfer)
        .await
        .unwrap();
    let b = h
        .request_transfer(id.clone(), parent.asset_id.clone(), "more metallic".into(), TransferMode::Transfer)
        .await
        .unwrap();
    assert_eq!(a.method, JobMethod::Transfer);
    assert_ne!(a.job_id, b.job_id);
    h.when_idle().await.unwrap();
    let s = h.snapshot().await.unwrap();
    let ja = s.job(&a.job_id).unwrap();
    let jb = s.job(&b.job_id).unwrap();
    assert_eq!(ja.state, JobState::Done);
    assert_eq!(ja.result, jb.result);
    let transferred = &s.candidates[&id].primary[&AcquisitionMethod::Transferred];
    assert_eq!(transferred.len(), 1);
    let t = &transferred[0];
    assert_eq!(t.sample_count, parent.sample_count);
    assert_eq!(t.sample_rate, parent.sample_rate);
    assert_eq!(t.source_ref, Some(SourceRef::Parent(parent.asset_id.clone())));
    assert_eq!(t.asset_id, ja.result[0]);

    let err = h
        .request_transfer(id.clone(), AssetId::from("nope"), "x".into(), TransferMode::Transfer)
        .await
        .unwrap_err();
    assert_eq!(err, SessionError::UnknownAsset("nope".into()));
    let err = h
        .request_transfer(id.clone(), parent.asset_id.clone(), "  ".into(), TransferMode::Transfer)
        .await
        .unwrap_err();
    assert!(matches!(err, SessionError::InvalidRequest(_)));
}

#[tokio::test]
async fn generate_similar_extends_the_prompt() {
    let events = unique(&robot_events());
    let h = spawn(mock_backends());
    feed(&h, &events[..1]).await;
    let id = EventId::from("evt-0001");
    let view = h.candidates(id.clone()).await.unwrap();
    let parent = view.candidates.primary[&AcquisitionMethod::Generated][0].clone();
    h.request_transfer(id.clone(), parent.asset_id.clone(), "but louder".into(), TransferMode::Similar)
        .await
        .unwrap();
    h.when_idle().await.unwrap();
    let generated = h.candidates(id).await.unwrap().candidates.primary[&AcquisitionMethod::Generated].clone();
    assert_eq!(generated.len(), 2);
    assert_eq!(generated[1].prompt_or_query, format!("{} but louder", parent.prompt_or_query));
    assert_eq!(generated[1].source_ref, Some(SourceRef::Parent(parent.asset_id)));
}

#[tokio::test]
async fn alternatives_are_ranks_two_to_five() {
    let mut backends = mock_backends();
    let names = ["Wood Knock Table", "Footsteps Wood Creak", "Metal Footsteps On Wood", "Marble Roll Wood", "Glass Tap Light", "Paper Rustle"];
    let reply: String = names.iter().map(|n| format!("method1recommend:{n}\n")).collect::<String>() + "method3generation:knock";
    backends.controller = Arc::new(FixedController(reply));
    let h = spawn(backends);
    let events = unique(&robot_events());
    feed(&h, &events[..1]).await;
    let id = EventId::from("evt-0001");
    let alts = h.alternatives(id.clone(), AcquisitionMethod::Recommended).await.unwrap();
    assert_eq!(alts.len(), 4);
    let refs: Vec<_> = alts.iter().map(|a| a.source_ref.clone().unwrap()).collect();
    let expected: Vec<_> = names[1..5].iter().map(|n| SourceRef::Library(n.to_string())).collect();
    assert_eq!(refs, expected);
    assert!(h.alternatives(id, AcquisitionMethod::Generated).await.unwrap().is_empty());
    let err = h.alternatives("evt-0404".into(), AcquisitionMethod::Recommended).await.unwrap_err();
    assert_eq!(err, SessionError::UnknownEvent("evt-0404".into()));
}

#[tokio::test]
async fn unknown_recommendations_are_skipped() {
    let mut backends = mock_backends();
    backends.controller = Arc::new(FixedController(
        "method1recommend:Dragon Roar Epic\nmethod1recommend:Paper Rustle\n".into(),
    ));
    let h = spawn(backends.clone());
    let events = unique(&robot_events());
    feed(&h, &events[..1]).await;
    let s = h.snapshot().await.unwrap();
    assert_eq!(s.jobs[0].state, JobState::Done);
    assert_eq!(s.jobs[0].result.len(), 1);

    backends.controller = Arc::new(FixedController("method1recommend:Dragon Roar Epic\n".into()));
    let h = spawn(backends);
    feed(&h, &events[..1]).await;
    let s = h.snapshot().await.unwrap();
    assert!(matches!(s.jobs[0].state, JobState::Failed { kind: FailureKind::UnknownFilename, .. }));
}

#[tokio::test]
async fn batch_and_live_agree() {
    let events = robot_events();
    let backends = mock_backends();
    let batch = run_batch(events.clone(), &backends, 8, "test".into(), mock_config().snapshot()).await;
    let h = spawn(backends);
    feed(&h, &events).await;
    let live = h.snapshot().await.unwrap();
    assert_eq!(batch.log, live.log);
    assert_eq!(batch.candidates.keys().collect::<Vec<_>>(), live.candidates.keys().collect::<Vec<_>>());
    for (id, c) in &batch.candidates {
        let ids = |c: &sonify_core::CandidateSet| {
            let mut v: Vec<_> = c.iter().map(|m| m.asset_id.clone()).collect();
            v.sort();
            v
        };
        assert_eq!(ids(c), ids(&live.candidates[id]), "{id}");
    }
    assert_eq!(batch.log.len(), 9);
}
