use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{ArEvent, DedupeKey};
use crate::acquisition::AssetId;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EventId(pub String);

impl fmt::Display for EventId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for EventId {
    fn from(s: &str) -> Self {
        Self(s.to_owned())
    }
}

/// One unique event. Its candidate set is keyed by `event_id`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EventRecord {
    pub event_id: EventId,
    pub dedupe_key: DedupeKey,
    pub first_event: ArEvent,
    pub occurrence_count: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub selected_asset: Option<AssetId>,
}

/// Deduplicating log of unique events, in first-seen order. Event ids are
/// sequential (`evt-0001`, ...), so identical event streams produce
/// identical logs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EventLog {
    records: Vec<EventRecord>,
    index: HashMap<DedupeKey, usize>,
}

impl EventLog {
    pub fn new() -> Self {
        Self::default()
    }

    /// Rebuilds a log from persisted records.
    pub fn from_records(records: Vec<EventRecord>) -> Self {
        let index = records
            .iter()
            .enumerate()
            .map(|(i, r)| (r.dedupe_key.clone(), i))
            .collect();
        Self { records, index }
    }

    /// Returns `true` with a fresh record for an unseen key, otherwise bumps
    /// the existing record's occurrence count.
    pub fn register_event(&mut self, event: ArEvent) -> (bool, &EventRecord) {
        let key = event.dedupe_key();
        if let Some(&i) = self.index.get(&key) {
            let rec = &mut self.records[i];
            rec.occurrence_count += 1;
            return (false, rec);
        }
        let event_id = EventId(format!("evt-{:04}", self.records.len() + 1));
        self.index.insert(key.clone(), self.records.len());
        self.records.push(EventRecord {
            event_id,
            dedupe_key: key,
            first_event: event,
            occurrence_count: 1,
            selected_asset: None,
        });
        (true, self.records.last().expect("just pushed"))
    }

    pub fn records(&self) -> &[EventRecord] {
        &self.records
    }

    pub fn get(&self, id: &EventId) -> Option<&EventRecord> {
        self.records.iter().find(|r| &r.event_id == id)
    }

    pub fn get_mut(&mut self, id: &EventId) -> Option<&mut EventRecord> {
        self.records.iter_mut().find(|r| &r.event_id == id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}
