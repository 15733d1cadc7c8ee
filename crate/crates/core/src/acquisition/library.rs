use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::{AcquisitionError, AudioClip};

#[derive(Debug, Clone, PartialEq)]
pub enum LibrarySource {
    File(PathBuf),
    Memory(Arc<AudioClip>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct LibraryEntry {
    /// Descriptive label, e.g. "Crash Aluminum Tray Bang".
    pub filename: String,
    pub source: LibrarySource,
}

impl LibraryEntry {
    pub fn load(&self) -> Result<AudioClip, AcquisitionError> {
        match &self.source {
            LibrarySource::File(p) => AudioClip::read_wav(p),
            LibrarySource::Memory(c) => Ok((**c).clone()),
        }
    }
}

/// Local sound library. Entries are sorted by filename.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LibraryIndex {
    entries: Vec<LibraryEntry>,
}

fn check_name(name: &str) -> Result<(), AcquisitionError> {
    if name.trim().is_empty() || name.contains(['\n', '\r']) || name.trim() != name {
        return Err(AcquisitionError::Io(format!("invalid library filename {name:?}")));
    }
    Ok(())
}

impl LibraryIndex {
    /// Indexes every `.wav` file in `dir`; the file stem is the label.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, AcquisitionError> {
        let dir = dir.as_ref();
        let io = |e: std::io::Error| AcquisitionError::Io(format!("{}: {e}", dir.display()));
        let mut entries = Vec::new();
        for item in std::fs::read_dir(dir).map_err(io)? {
            let path = item.map_err(io)?.path();
            let is_wav = path
                .extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| e.eq_ignore_ascii_case("wav"));
            if !is_wav || !path.is_file() {
                continue;
            }
            let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
                continue;
            };
            std::fs::File::open(&path).map_err(io)?;
            entries.push(LibraryEntry {
                filename: stem.to_owned(),
                source: LibrarySource::File(path.clone()),
            });
        }
        Self::from_entries(entries)
    }

    pub fn in_memory(
        clips: impl IntoIterator<Item = (String, AudioClip)>,
    ) -> Result<Self, AcquisitionError> {
        Self::from_entries(
            clips
                .into_iter()
                .map(|(filename, clip)| LibraryEntry {
                    filename,
                    source: LibrarySource::Memory(Arc::new(clip)),
                })
                .collect(),
        )
    }

    fn from_entries(mut entries: Vec<LibraryEntry>) -> Result<Self, AcquisitionError> {
        entries.sort_by(|a, b| a.filename.cmp(&b.filename));
        let mut seen = BTreeSet::new();
        for e in &entries {
            check_name(&e.filename)?;
            if !seen.insert(e.filename.as_str()) {
                return Err(AcquisitionError::Io(format!("duplicate library filename {:?}", e.filename)));
            }
        }
        Ok(Self { entries })
    }

    pub fn entries(&self) -> &[LibraryEntry] {
        &self.entries
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.filename.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Exact match first, then a unique case-insensitive match.
    pub fn resolve(&self, filename: &str) -> Option<&LibraryEntry> {
        if let Some(e) = self.entries.iter().find(|e| e.filename == filename) {
            return Some(e);
        }
        let mut folded = self
            .entries
            .iter()
            .filter(|e| e.filename.to_lowercase() == filename.to_lowercase());
        match (folded.next(), folded.next()) {
            (Some(e), None) => Some(e),
            _ => None,
        }
    }
}
