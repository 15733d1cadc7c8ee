//! Headless pipeline: a recorded event stream in, a finished session out.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use futures::future::join_all;
use sha2::{Digest, Sha256};
use sonify_core::engine::Target;
use sonify_core::{ArEvent, EventId, EventType};
use tokio::sync::Semaphore;

use crate::backends::Backends;
use crate::config::ConfigSnapshot;
use crate::jobs::{plan_specs, JobSpec};
use crate::session::Session;

/// `batch-` plus the first 16 hex digits of the SHA-256 of the input.
pub fn batch_session_id(input: &[u8]) -> String {
    let digest = hex::encode(Sha256::digest(input));
    format!("batch-{}", &digest[..16])
}

/// Plane materials as captured by the events themselves.
fn materials_from_events(events: &[ArEvent]) -> BTreeMap<sonify_core::PlaneId, sonify_core::MaterialLabel> {
    let mut out = BTreeMap::new();
    for e in events {
        if let (Some(Target::Plane { id }), Some(m)) = (&e.target, e.context.target_material) {
            out.entry(id.clone()).or_insert(m);
        }
    }
    out
}

/// Registers every event, asks the controller about each unique one, and
/// runs all resulting jobs with at most `parallelism` in flight. Results are
/// applied in job order, so the session does not depend on which backend
/// answered first.
pub async fn run_batch(
    events: Vec<ArEvent>,
    backends: &Backends,
    parallelism: usize,
    session_id: String,
    config: ConfigSnapshot,
) -> Session {
    let started = Instant::now();
    let wall = || started.elapsed().as_secs_f64();
    let mut session = Session::new(session_id, None, materials_from_events(&events), config);
    let mut fresh: Vec<(EventId, ArEvent)> = Vec::new();
    for e in events {
        let reg = session.register(e.clone());
        if reg.is_new {
            fresh.push((reg.event_id, e));
        }
    }
    tracing::info!(unique = fresh.len(), "asking controller");

    let permits = Arc::new(Semaphore::new(parallelism.max(1)));
    let replies = join_all(fresh.iter().map(|(_, e)| {
        let permits = permits.clone();
        async move {
            let _p = permits.acquire_owned().await.expect("semaphore open");
            backends.ask_controller(e).await
        }
    }))
    .await;

    let mut planned: Vec<(String, JobSpec, EventType)> = Vec::new();
    for ((event_id, event), reply) in fresh.iter().zip(replies) {
        match reply {
            Ok(parsed) => {
                for spec in plan_specs(parsed.commands.iter().map(|c| &c.command)) {
                    let job = session.add_job(event_id, &spec).expect("event registered");
                    planned.push((job.job_id, spec, event.event_type));
                }
            }
            Err(e) => {
                tracing::warn!(event = %event_id, "controller failed: {e}");
                session.controller_failed(event_id, &e, wall()).expect("event registered");
            }
        }
    }
    tracing::info!(jobs = planned.len(), "running jobs");

    let outcomes = join_all(planned.iter().map(|(_, spec, ty)| {
        let permits = permits.clone();
        async move {
            let _p = permits.acquire_owned().await.expect("semaphore open");
            let t0 = wall();
            let outcome = backends.run(spec, *ty).await;
            (t0, wall(), outcome)
        }
    }))
    .await;

    for ((job_id, _, _), (t0, t1, outcome)) in planned.iter().zip(outcomes) {
        session.job_started(job_id, t0).expect("job is pending");
        let job = session.job_finished(job_id, outcome, t1).expect("job is running");
        tracing::debug!(job = %job.job_id, state = ?job.state, "finished");
    }
    session
}
