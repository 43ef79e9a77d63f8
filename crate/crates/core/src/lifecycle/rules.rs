//! Rule lists driving the lifecycle: `.sea_flushlist`, `.sea_evictlist`,
//! and `.sea_prefetchlist`.
//!
//! Each file holds shell-style glob patterns, one per line, matched against
//! mountpoint-relative paths; `*` crosses directory separators, `#` starts
//! a comment. Which lists match a file decides its mode:
//!
//! | mode   | flushlist | evictlist |
//! |--------|-----------|-----------|
//! | copy   | yes       | no        |
//! | remove | no        | yes       |
//! | move   | yes       | yes       |
//! | keep   | no        | no        |

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

/// Which rule file a pattern came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SourceList {
    Flushlist,
    Evictlist,
    Prefetchlist,
}

/// One glob pattern from one rule file.
#[derive(Debug, Clone)]
pub struct PlacementRule {
    pub pattern: glob::Pattern,
    pub raw: String,
    pub source: SourceList,
}

/// What the lifecycle does with a file once it is stable in a cache tier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LifecycleMode {
    /// Replicate to base, keep the cached copy.
    Copy,
    /// Delete from cache without persisting.
    Remove,
    /// Replicate to base, then delete from cache.
    Move,
    /// Leave untouched.
    Keep,
}

#[derive(Debug, thiserror::Error)]
pub enum RuleError {
    #[error("{file}:{line}: bad pattern `{pattern}`: {message}")]
    BadPattern {
        file: String,
        line: usize,
        pattern: String,
        message: String,
    },
    #[error("reading {file}: {source}")]
    Io {
        file: String,
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Default)]
pub struct RuleSet {
    pub flush: Vec<PlacementRule>,
    pub evict: Vec<PlacementRule>,
    pub prefetch: Vec<PlacementRule>,
}

fn parse_list(file: &str, text: &str, source: SourceList) -> Result<Vec<PlacementRule>, RuleError> {
    let mut rules = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        let pattern = glob::Pattern::new(line).map_err(|e| RuleError::BadPattern {
            file: file.to_string(),
            line: idx + 1,
            pattern: line.to_string(),
            message: e.msg.to_string(),
        })?;
        rules.push(PlacementRule {
            pattern,
            raw: line.to_string(),
            source,
        });
    }
    Ok(rules)
}

impl RuleSet {
    /// Builds a rule set from in-memory list contents.
    pub fn from_texts(flush: &str, evict: &str, prefetch: &str) -> Result<RuleSet, RuleError> {
        Ok(RuleSet {
            flush: parse_list(".sea_flushlist", flush, SourceList::Flushlist)?,
            evict: parse_list(".sea_evictlist", evict, SourceList::Evictlist)?,
            prefetch: parse_list(".sea_prefetchlist", prefetch, SourceList::Prefetchlist)?,
        })
    }

    /// Loads the three lists named by the config. A missing file simply
    /// contributes no rules.
    pub fn load(
        flush: Option<&PathBuf>,
        evict: Option<&PathBuf>,
        prefetch: Option<&PathBuf>,
    ) -> Result<RuleSet, RuleError> {
        let read = |path: Option<&PathBuf>, source: SourceList| -> Result<_, RuleError> {
            let Some(path) = path else { return Ok(Vec::new()) };
            let file = path.display().to_string();
            match std::fs::read_to_string(path) {
                Ok(text) => parse_list(&file, &text, source),
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
                Err(source) => Err(RuleError::Io { file, source }),
            }
        };
        Ok(RuleSet {
            flush: read(flush, SourceList::Flushlist)?,
            evict: read(evict, SourceList::Evictlist)?,
            prefetch: read(prefetch, SourceList::Prefetchlist)?,
        })
    }

    fn matches(rules: &[PlacementRule], rel: &Path) -> bool {
        rules.iter().any(|r| r.pattern.matches_path(rel))
    }

    /// The mode table: (flush?, evict?) -> mode.
    pub fn classify(&self, rel: &Path) -> LifecycleMode {
        match (
            Self::matches(&self.flush, rel),
            Self::matches(&self.evict, rel),
        ) {
            (true, false) => LifecycleMode::Copy,
            (false, true) => LifecycleMode::Remove,
            (true, true) => LifecycleMode::Move,
            (false, false) => LifecycleMode::Keep,
        }
    }

    pub fn matches_prefetch(&self, rel: &Path) -> bool {
        Self::matches(&self.prefetch, rel)
    }
}
