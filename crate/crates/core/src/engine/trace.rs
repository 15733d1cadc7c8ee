use std::io::{BufRead, Write};

use thiserror::Error;

use super::{ArEvent, EngineError, SessionState, UserAction};

#[derive(Debug, Error)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

fn read_jsonl<T: serde::de::DeserializeOwned>(reader: impl BufRead) -> Result<Vec<T>, TraceError> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| TraceError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

fn write_jsonl<T: serde::Serialize>(mut writer: impl Write, items: &[T]) -> std::io::Result<()> {
    for item in items {
        serde_json::to_writer(&mut writer, item)?;
        writer.write_all(b"\n")?;
    }
    Ok(())
}

/// Reads an action trace: one JSON [`UserAction`] per line.
pub fn read_trace(reader: impl BufRead) -> Result<Vec<UserAction>, TraceError> {
    read_jsonl(reader)
}

pub fn write_trace(writer: impl Write, actions: &[UserAction]) -> std::io::Result<()> {
    write_jsonl(writer, actions)
}

pub fn read_events(reader: impl BufRead) -> Result<Vec<ArEvent>, TraceError> {
    read_jsonl(reader)
}

pub fn write_events(writer: impl Write, events: &[ArEvent]) -> std::io::Result<()> {
    write_jsonl(writer, events)
}

/// Replays `trace` against `state` with a fixed timestep until the session
/// clock reaches `until`. Actions are applied at the first step boundary at
/// or after their timestamp, in trace order.
pub fn replay(
    state: &mut SessionState,
    trace: &[UserAction],
    dt: f64,
    until: f64,
) -> Result<Vec<ArEvent>, TraceError> {
    let mut events = Vec::new();
    let mut next = 0;
    let steps = ((until - state.time()) / dt - 1e-9).ceil().max(0.0) as usize;
    for _ in 0..steps {
        while next < trace.len() && trace[next].timestamp <= state.time() + 1e-9 {
            events.extend(state.ingest_action(&trace[next])?);
            next += 1;
        }
        events.extend(state.step_physics(dt));
    }
    for action in &trace[next..] {
        events.extend(state.ingest_action(action)?);
    }
    Ok(events)
}
