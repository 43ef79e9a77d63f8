//! Lifecycle management: rule-driven flush, evict, move, and prefetch of
//! cached files, executed by a per-node background flusher process.

mod flusher;
mod journal;
mod rules;

pub use flusher::{
    hash_file, replicate, CycleReport, FileIssue, FinalReport, FlushError, Flusher,
    PrefetchReport,
};
pub use journal::{FileRecord, FileState, FileVersion, FlushJournal, JournalError};
pub use rules::{LifecycleMode, PlacementRule, RuleError, RuleSet, SourceList};
