//! Crash-safety bookkeeping for the flusher.
//!
//! Append-only JSON-lines journal under the session directory. Each record
//! advances one file's state; states only move forward within a generation
//! (`dirty -> flushing -> flushed -> evicted`), and a file whose size or
//! mtime changed since its record starts a new generation at `dirty`.

use std::collections::{HashMap, HashSet};
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileState {
    Dirty,
    Flushing,
    Flushed,
    Evicted,
}

/// Identity of one observed file version.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileVersion {
    pub size: u64,
    pub mtime_ns: i64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum JournalLine {
    State {
        rel: String,
        state: FileState,
        generation: u32,
        version: FileVersion,
        #[serde(skip_serializing_if = "Option::is_none")]
        checksum: Option<String>,
        cycle: u64,
    },
    Pin {
        rel: String,
    },
}

/// In-memory view of one file's journal state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FileRecord {
    pub state: FileState,
    pub generation: u32,
    pub version: FileVersion,
    pub checksum: Option<String>,
    /// Cycle in which the record last advanced; drives the post-move grace
    /// retention (evict one full cycle after the flush).
    pub cycle: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum JournalError {
    #[error("journal {0}: {1}")]
    Io(PathBuf, std::io::Error),
    #[error("journal {path} line {line}: {message}")]
    Corrupt {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("illegal transition for `{rel}`: {from:?} -> {to:?}")]
    IllegalTransition {
        rel: String,
        from: FileState,
        to: FileState,
    },
}

#[derive(Debug)]
pub struct FlushJournal {
    path: PathBuf,
    records: HashMap<String, FileRecord>,
    pins: HashSet<String>,
    /// Highest cycle number seen; survives flusher restarts.
    pub last_cycle: u64,
}

impl FlushJournal {
    /// Opens the journal, replaying any existing records.
    pub fn open(path: &Path) -> Result<FlushJournal, JournalError> {
        let mut journal = FlushJournal {
            path: path.to_path_buf(),
            records: HashMap::new(),
            pins: HashSet::new(),
            last_cycle: 0,
        };
        let text = match std::fs::read_to_string(path) {
            Ok(text) => text,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(journal),
            Err(e) => return Err(JournalError::Io(path.to_path_buf(), e)),
        };
        for (idx, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            // A torn final line from a crash is tolerated; anything else
            // malformed is corruption worth surfacing.
            let parsed: Result<JournalLine, _> = serde_json::from_str(line);
            match parsed {
                Ok(JournalLine::State {
                    rel,
                    state,
                    generation,
                    version,
                    checksum,
                    cycle,
                }) => {
                    journal.last_cycle = journal.last_cycle.max(cycle);
                    journal.records.insert(
                        rel,
                        FileRecord {
                            state,
                            generation,
                            version,
                            checksum,
                            cycle,
                        },
                    );
                }
                Ok(JournalLine::Pin { rel }) => {
                    journal.pins.insert(rel);
                }
                Err(e) if idx + 1 == text.lines().count() => {
                    crate::diag::warn(&format!(
                        "journal {}: dropping torn final line ({e})",
                        path.display()
                    ));
                }
                Err(e) => {
                    return Err(JournalError::Corrupt {
                        path: path.to_path_buf(),
                        line: idx + 1,
                        message: e.to_string(),
                    });
                }
            }
        }
        Ok(journal)
    }

    pub fn get(&self, rel: &str) -> Option<&FileRecord> {
        self.records.get(rel)
    }

    pub fn is_pinned(&self, rel: &str) -> bool {
        self.pins.contains(rel)
    }

    fn append(&self, line: &JournalLine) -> Result<(), JournalError> {
        let mut file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&self.path)
            .map_err(|e| JournalError::Io(self.path.clone(), e))?;
        let mut text = serde_json::to_string(line).expect("journal line serializes");
        text.push('\n');
        file.write_all(text.as_bytes())
            .map_err(|e| JournalError::Io(self.path.clone(), e))
    }

    /// Marks a prefetched file: pinned entries are never evicted.
    pub fn pin(&mut self, rel: &str) -> Result<(), JournalError> {
        if self.pins.insert(rel.to_string()) {
            self.append(&JournalLine::Pin {
                rel: rel.to_string(),
            })?;
        }
        Ok(())
    }

    /// Advances `rel` to `state`. A changed file version restarts the state
    /// machine in a new generation; within a generation states only move
    /// forward.
    pub fn advance(
        &mut self,
        rel: &str,
        state: FileState,
        version: FileVersion,
        checksum: Option<String>,
        cycle: u64,
    ) -> Result<(), JournalError> {
        let (generation, checksum) = match self.records.get(rel) {
            Some(prev) if prev.version == version => {
                if state <= prev.state && !(state == prev.state && state == FileState::Dirty) {
                    return Err(JournalError::IllegalTransition {
                        rel: rel.to_string(),
                        from: prev.state,
                        to: state,
                    });
                }
                (prev.generation, checksum.or_else(|| prev.checksum.clone()))
            }
            Some(prev) => (prev.generation + 1, checksum),
            None => (0, checksum),
        };
        let record = FileRecord {
            state,
            generation,
            version,
            checksum: checksum.clone(),
            cycle,
        };
        self.append(&JournalLine::State {
            rel: rel.to_string(),
            state,
            generation,
            version,
            checksum,
            cycle,
        })?;
        self.last_cycle = self.last_cycle.max(cycle);
        self.records.insert(rel.to_string(), record);
        Ok(())
    }

    /// All records, for reports and verification passes.
    pub fn records(&self) -> impl Iterator<Item = (&String, &FileRecord)> {
        self.records.iter()
    }
}
