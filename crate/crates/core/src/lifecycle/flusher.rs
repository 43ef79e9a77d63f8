//! The background flusher: applies copy/remove/move/keep to stable cache
//! files, drains caches at shutdown, and prefetches inputs at startup.
//!
//! The flusher is a separate process from the application and coordinates
//! with it only through the filesystem. Replication is crash-safe: stream
//! to a temporary name on the destination, fsync, then atomically rename.
//! A cache copy is deleted only after an identical copy (size plus
//! checksum) is verified on base; after a move-flush the cache copy is
//! retained for one extra cycle so in-flight readers keep a window to
//! finish.

use std::collections::{BTreeMap, HashMap};
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::SeaConfig;
use crate::lifecycle::journal::{FileState, FileVersion, FlushJournal, JournalError};
use crate::lifecycle::rules::{LifecycleMode, RuleSet};
use crate::pathmap::PathMapper;
use crate::session::Session;
use crate::throttle::{copy_paced, Pacer};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileIssue {
    pub rel: String,
    pub message: String,
}

/// What one pass over the caches did.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct CycleReport {
    pub cycle: u64,
    /// Replicated to base this cycle (copy- and move-mode files).
    pub flushed: Vec<String>,
    /// Move completed: cache copies dropped after verification.
    pub moved: Vec<String>,
    /// Remove-mode deletions.
    pub removed: Vec<String>,
    /// Slower duplicates dropped after an interrupted move left two copies.
    pub duplicates_cleaned: Vec<String>,
    /// Evictions forced by cache pressure, oldest mtime first.
    pub pressure_evicted: Vec<String>,
    pub skipped_unstable: Vec<String>,
    pub bytes_flushed: u64,
    pub bytes_evicted: u64,
    pub errors: Vec<FileIssue>,
}

impl CycleReport {
    /// True when the cycle changed nothing and nothing was deferred.
    pub fn quiescent(&self) -> bool {
        self.flushed.is_empty()
            && self.moved.is_empty()
            && self.removed.is_empty()
            && self.duplicates_cleaned.is_empty()
            && self.pressure_evicted.is_empty()
            && self.skipped_unstable.is_empty()
            && self.errors.is_empty()
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct FinalReport {
    pub cycles: u64,
    pub flushed: Vec<String>,
    pub moved: Vec<String>,
    pub removed: Vec<String>,
    pub bytes_flushed: u64,
    /// Keep-mode files deliberately left in caches, never persisted.
    pub kept_in_cache: Vec<String>,
    /// Flush-matched files that could not be brought to base.
    pub failed: Vec<FileIssue>,
}

impl FinalReport {
    pub fn success(&self) -> bool {
        self.failed.is_empty()
    }
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PrefetchReport {
    pub prefetched: Vec<String>,
    pub already_cached: Vec<String>,
    pub warnings: Vec<FileIssue>,
    pub bytes: u64,
}

#[derive(Debug, thiserror::Error)]
pub enum FlushError {
    #[error(transparent)]
    Journal(#[from] JournalError),
    #[error("lifecycle i/o on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> FlushError + '_ {
    move |source| FlushError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// SHA-256 of a file, hex.
pub fn hash_file(path: &Path) -> std::io::Result<String> {
    let mut file = std::fs::File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 256 * 1024];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex_string(&hasher.finalize()))
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn file_version(meta: &std::fs::Metadata) -> FileVersion {
    let mtime_ns = meta
        .modified()
        .ok()
        .and_then(|t| t.duration_since(std::time::UNIX_EPOCH).ok())
        .map(|d| d.as_nanos() as i64)
        .unwrap_or(0);
    FileVersion {
        size: meta.len(),
        mtime_ns,
    }
}

/// Crash-safe replication preserving bytes, permissions, and mtime:
/// temp name in the destination directory, fsync, atomic rename, then a
/// directory sync so the rename itself is durable.
pub fn replicate(src: &Path, dst: &Path, pacer: &mut Pacer) -> std::io::Result<(u64, String)> {
    let dir = dst.parent().unwrap_or_else(|| Path::new("/"));
    std::fs::create_dir_all(dir)?;
    let name = dst
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = dir.join(format!(".{name}.sea_tmp.{}", std::process::id()));

    let result = (|| -> std::io::Result<(u64, String)> {
        let mut input = std::fs::File::open(src)?;
        let meta = input.metadata()?;
        let out = std::fs::File::create(&tmp)?;
        let mut hasher = Sha256::new();
        let mut tee = HashingWriter {
            inner: &out,
            hasher: &mut hasher,
        };
        let bytes = copy_paced(&mut input, &mut tee, pacer)?;
        out.set_permissions(meta.permissions())?;
        if let Ok(mtime) = meta.modified() {
            out.set_times(std::fs::FileTimes::new().set_modified(mtime))?;
        }
        out.sync_all()?;
        drop(out);
        std::fs::rename(&tmp, dst)?;
        if let Ok(d) = std::fs::File::open(dir) {
            let _ = d.sync_all();
        }
        Ok((bytes, hex_string(&hasher.finalize())))
    })();
    if result.is_err() {
        let _ = std::fs::remove_file(&tmp);
    }
    result
}

struct HashingWriter<'a, W: std::io::Write> {
    inner: W,
    hasher: &'a mut Sha256,
}

impl<W: std::io::Write> std::io::Write for HashingWriter<'_, W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }
    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

#[derive(Debug, Clone, Copy)]
struct StabilityProbe {
    version: FileVersion,
    seen: Instant,
}

pub struct Flusher {
    mapper: PathMapper,
    rules: RuleSet,
    journal: FlushJournal,
    session: Session,
    stability: HashMap<String, StabilityProbe>,
}

impl Flusher {
    pub fn new(
        cfg: SeaConfig,
        rules: RuleSet,
        session: Session,
    ) -> Result<Flusher, FlushError> {
        let journal = FlushJournal::open(&session.journal_path())?;
        Ok(Flusher {
            mapper: PathMapper::new(cfg),
            rules,
            journal,
            session,
            stability: HashMap::new(),
        })
    }

    pub fn config(&self) -> &SeaConfig {
        self.mapper.config()
    }

    pub fn journal(&self) -> &FlushJournal {
        &self.journal
    }

    fn base_index(&self) -> usize {
        self.config().base_index()
    }

    fn base_pacer(&self) -> Pacer {
        Pacer::new(self.config().base().throttle_write)
    }

    /// Regular files on one tier, as mountpoint-relative paths.
    fn scan_tier(&self, tier: usize, into: &mut BTreeMap<String, Vec<usize>>) {
        let root = self.config().tiers[tier].root.clone();
        let mut stack = vec![root.clone()];
        while let Some(dir) = stack.pop() {
            let Ok(entries) = std::fs::read_dir(&dir) else { continue };
            for entry in entries.flatten() {
                let path = entry.path();
                let name = entry.file_name();
                if name.to_string_lossy().contains(".sea_tmp.") {
                    continue;
                }
                let Ok(kind) = entry.file_type() else { continue };
                if kind.is_dir() {
                    stack.push(path);
                } else if kind.is_file() {
                    if let Ok(rel) = path.strip_prefix(&root) {
                        into.entry(rel.to_string_lossy().into_owned())
                            .or_default()
                            .push(tier);
                    }
                }
            }
        }
    }

    /// A file is stable once its size and mtime have not changed across two
    /// probes one flush_interval apart. `force` (finalize, after the
    /// application exited) accepts a single probe.
    fn is_stable(&mut self, rel: &str, version: FileVersion, force: bool) -> bool {
        if force {
            return true;
        }
        let now = Instant::now();
        match self.stability.get(rel) {
            Some(probe)
                if probe.version == version
                    && now.duration_since(probe.seen) >= self.config().flush_interval =>
            {
                true
            }
            Some(probe) if probe.version == version => false,
            _ => {
                self.stability.insert(
                    rel.to_string(),
                    StabilityProbe {
                        version,
                        seen: now,
                    },
                );
                false
            }
        }
    }

    /// Brings `rel` to base if its current version is not there yet.
    /// Returns bytes copied (0 when the journal short-circuits).
    fn ensure_flushed(
        &mut self,
        rel: &str,
        src: &Path,
        version: FileVersion,
        cycle: u64,
    ) -> Result<u64, FlushError> {
        if let Some(rec) = self.journal.get(rel) {
            if rec.version == version && rec.state >= FileState::Flushed {
                // Belt and braces: the record claims base holds it.
                let base_path = self.mapper.resolve_on(self.base_index(), Path::new(rel));
                if base_path
                    .metadata()
                    .map(|m| m.len() == version.size)
                    .unwrap_or(false)
                {
                    return Ok(0);
                }
            }
        }
        let needs_state = self
            .journal
            .get(rel)
            .map(|r| r.version != version || r.state < FileState::Flushing)
            .unwrap_or(true);
        if needs_state {
            self.journal
                .advance(rel, FileState::Flushing, version, None, cycle)?;
        }
        let dst = self.mapper.resolve_on(self.base_index(), Path::new(rel));
        let mut pacer = self.base_pacer();
        let (bytes, checksum) = replicate(src, &dst, &mut pacer).map_err(io_err(src))?;
        self.journal
            .advance(rel, FileState::Flushed, version, Some(checksum), cycle)?;
        Ok(bytes)
    }

    /// Deletes the cache copies of `rel` after verifying base holds bytes
    /// identical to the fastest cache copy. A disagreeing base copy is
    /// repaired (re-replicated) first; only a file changing under us makes
    /// this back off until the next cycle.
    fn evict_verified(
        &mut self,
        rel: &str,
        copies: &[usize],
        version: FileVersion,
        cycle: u64,
    ) -> Result<bool, FlushError> {
        let base_path = self.mapper.resolve_on(self.base_index(), Path::new(rel));
        let fastest = self.mapper.resolve_on(copies[0], Path::new(rel));
        let cache_sum = hash_file(&fastest).map_err(io_err(&fastest))?;
        let base_matches = base_path
            .metadata()
            .map(|m| m.len() == version.size)
            .unwrap_or(false)
            && hash_file(&base_path).map_err(io_err(&base_path))? == cache_sum;
        if !base_matches {
            let mut pacer = self.base_pacer();
            let (_, copied_sum) =
                replicate(&fastest, &base_path, &mut pacer).map_err(io_err(&fastest))?;
            if copied_sum != cache_sum {
                return Ok(false); // file changed mid-flight
            }
        }
        for &tier in copies {
            let path = self.mapper.resolve_on(tier, Path::new(rel));
            std::fs::remove_file(&path).map_err(io_err(&path))?;
        }
        self.journal
            .advance(rel, FileState::Evicted, version, Some(cache_sum), cycle)?;
        self.stability.remove(rel);
        Ok(true)
    }

    /// One pass over every cache tier. `force` treats files as stable and
    /// disables the post-move grace (used by finalize, after the
    /// application has exited).
    pub fn flush_cycle(&mut self, force: bool) -> Result<CycleReport, FlushError> {
        let cycle = self.journal.last_cycle + 1;
        let mut report = CycleReport {
            cycle,
            ..CycleReport::default()
        };

        let mut files: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for tier in 0..self.base_index() {
            self.scan_tier(tier, &mut files);
        }

        for (rel, copies) in &files {
            let mode = self.rules.classify(Path::new(rel));
            if mode == LifecycleMode::Keep {
                continue;
            }
            let fastest = self.mapper.resolve_on(copies[0], Path::new(rel));
            let version = match fastest.metadata() {
                Ok(meta) => file_version(&meta),
                Err(_) => continue, // raced with the application; next cycle
            };
            if !self.is_stable(rel, version, force) {
                report.skipped_unstable.push(rel.clone());
                continue;
            }
            let pinned = self.journal.is_pinned(rel);

            let step = |flusher: &mut Flusher, report: &mut CycleReport| -> Result<(), FlushError> {
                match mode {
                    LifecycleMode::Keep => unreachable!(),
                    LifecycleMode::Copy | LifecycleMode::Move => {
                        let bytes = flusher.ensure_flushed(rel, &fastest, version, cycle)?;
                        if bytes > 0 {
                            report.flushed.push(rel.clone());
                            report.bytes_flushed += bytes;
                        }
                        // Interrupted moves can leave a second, slower copy.
                        for &tier in &copies[1..] {
                            let dup = flusher.mapper.resolve_on(tier, Path::new(rel));
                            let same = dup.metadata().map(|m| m.len() == version.size).unwrap_or(false)
                                && hash_file(&dup).ok() == hash_file(&fastest).ok();
                            if same {
                                std::fs::remove_file(&dup).map_err(io_err(&dup))?;
                                report.duplicates_cleaned.push(rel.clone());
                            }
                        }
                        if mode == LifecycleMode::Move && !pinned {
                            let rec = flusher.journal.get(rel).cloned();
                            if let Some(rec) = rec {
                                let grace_over = force || rec.cycle < cycle;
                                if rec.state == FileState::Flushed && grace_over {
                                    if flusher.evict_verified(rel, copies, version, cycle)? {
                                        report.moved.push(rel.clone());
                                        report.bytes_evicted += version.size;
                                    }
                                }
                            }
                        }
                    }
                    LifecycleMode::Remove => {
                        if pinned {
                            return Ok(());
                        }
                        for &tier in copies.iter() {
                            let path = flusher.mapper.resolve_on(tier, Path::new(rel));
                            std::fs::remove_file(&path).map_err(io_err(&path))?;
                        }
                        flusher
                            .journal
                            .advance(rel, FileState::Evicted, version, None, cycle)?;
                        flusher.stability.remove(rel);
                        report.removed.push(rel.clone());
                        report.bytes_evicted += version.size;
                    }
                }
                Ok(())
            };
            if let Err(e) = step(self, &mut report) {
                report.errors.push(FileIssue {
                    rel: rel.clone(),
                    message: e.to_string(),
                });
            }
        }

        self.relieve_pressure(&files, cycle, &mut report);
        let _ = self.session.append_report("cycles", &report);
        Ok(report)
    }

    /// When a cache tier's free space drops below the reservation, evict
    /// already-flushed move-mode files from it, oldest mtime first, grace
    /// notwithstanding.
    fn relieve_pressure(
        &mut self,
        files: &BTreeMap<String, Vec<usize>>,
        cycle: u64,
        report: &mut CycleReport,
    ) {
        let need = self.config().reserve_bytes();
        for tier in 0..self.base_index() {
            let Some(free) = crate::pathmap::probe_free_bytes(&self.config().tiers[tier].root)
            else {
                continue;
            };
            if free >= need {
                continue;
            }
            let mut candidates: Vec<(i64, String, Vec<usize>, FileVersion)> = Vec::new();
            for (rel, copies) in files {
                if !copies.contains(&tier)
                    || report.moved.contains(rel)
                    || self.journal.is_pinned(rel)
                    || self.rules.classify(Path::new(rel)) != LifecycleMode::Move
                {
                    continue;
                }
                let Some(rec) = self.journal.get(rel) else { continue };
                if rec.state != FileState::Flushed {
                    continue;
                }
                candidates.push((rec.version.mtime_ns, rel.clone(), copies.clone(), rec.version));
            }
            candidates.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
            let mut reclaimed = 0u64;
            for (_, rel, copies, version) in candidates {
                if free + reclaimed >= need {
                    break;
                }
                match self.evict_verified(&rel, &copies, version, cycle) {
                    Ok(true) => {
                        reclaimed += version.size;
                        report.pressure_evicted.push(rel.clone());
                        report.bytes_evicted += version.size;
                    }
                    Ok(false) => {}
                    Err(e) => report.errors.push(FileIssue {
                        rel,
                        message: e.to_string(),
                    }),
                }
            }
        }
    }

    /// Runs cycles until quiescent, then verifies the caches: every
    /// copy/move-matched file must be on base, every remove/move-matched
    /// file must be out of the caches, keep-matched leftovers are reported.
    pub fn finalize(&mut self) -> Result<FinalReport, FlushError> {
        let mut report = FinalReport::default();
        const MAX_CYCLES: u64 = 64;
        let mut last_pending = usize::MAX;
        loop {
            let cycle = self.flush_cycle(true)?;
            report.cycles += 1;
            report.flushed.extend(cycle.flushed.clone());
            report.moved.extend(cycle.moved.clone());
            report.removed.extend(cycle.removed.clone());
            report.bytes_flushed += cycle.bytes_flushed;
            if cycle.quiescent() {
                break;
            }
            let pending = cycle.errors.len() + cycle.skipped_unstable.len();
            if report.cycles >= MAX_CYCLES || (pending > 0 && pending == last_pending && cycle.flushed.is_empty() && cycle.moved.is_empty() && cycle.removed.is_empty()) {
                for issue in cycle.errors {
                    report.failed.push(issue);
                }
                break;
            }
            last_pending = pending;
        }

        // Verification pass over whatever still sits in the caches.
        let mut files: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        for tier in 0..self.base_index() {
            self.scan_tier(tier, &mut files);
        }
        for (rel, copies) in &files {
            match self.rules.classify(Path::new(rel)) {
                LifecycleMode::Keep => report.kept_in_cache.push(rel.clone()),
                LifecycleMode::Copy => {
                    let base = self.mapper.resolve_on(self.base_index(), Path::new(rel));
                    let cache = self.mapper.resolve_on(copies[0], Path::new(rel));
                    let ok = match (base.metadata(), cache.metadata()) {
                        (Ok(b), Ok(c)) => {
                            b.len() == c.len() && hash_file(&base).ok() == hash_file(&cache).ok()
                        }
                        _ => false,
                    };
                    if !ok {
                        report.failed.push(FileIssue {
                            rel: rel.clone(),
                            message: "copy-matched file not replicated to base".into(),
                        });
                    }
                }
                LifecycleMode::Move | LifecycleMode::Remove => {
                    if !self.journal.is_pinned(rel) {
                        report.failed.push(FileIssue {
                            rel: rel.clone(),
                            message: "evict-matched file still in cache".into(),
                        });
                    }
                }
            }
        }
        // Flush-matched files known to the journal must exist on base.
        let mut missing: Vec<FileIssue> = Vec::new();
        for (rel, rec) in self.journal.records() {
            let mode = self.rules.classify(Path::new(rel));
            if !matches!(mode, LifecycleMode::Copy | LifecycleMode::Move) {
                continue;
            }
            if rec.state >= FileState::Flushed {
                let base = self.mapper.resolve_on(self.base_index(), Path::new(rel));
                if !base.exists() {
                    missing.push(FileIssue {
                        rel: rel.clone(),
                        message: "journal says flushed but base copy is missing".into(),
                    });
                }
            }
        }
        report.failed.extend(missing);
        let _ = self.session.append_report("finalize", &report);
        Ok(report)
    }

    /// Copies prefetch-matched base files into the fastest tier with space
    /// and pins them; runs before the application starts.
    pub fn prefetch(&mut self) -> Result<PrefetchReport, FlushError> {
        let mut report = PrefetchReport::default();
        let base_root = self.config().base().root.clone();
        let read_pacer_rate = self.config().base().throttle_read;

        let mut stack = vec![base_root.clone()];
        let mut matched: Vec<(String, PathBuf)> = Vec::new();
        while let Some(dir) = stack.pop() {
            let Ok(entries) = std::fs::read_dir(&dir) else { continue };
            for entry in entries.flatten() {
                let path = entry.path();
                if path.file_name().is_some_and(|n| n == crate::session::SESSION_DIR) {
                    continue;
                }
                let Ok(kind) = entry.file_type() else { continue };
                if kind.is_dir() {
                    stack.push(path);
                } else if kind.is_file() {
                    if let Ok(rel) = path.strip_prefix(&base_root) {
                        let rel_str = rel.to_string_lossy().into_owned();
                        if self.rules.matches_prefetch(Path::new(&rel_str)) {
                            matched.push((rel_str, path));
                        }
                    }
                }
            }
        }
        matched.sort();

        for (rel, src) in matched {
            if !self.mapper.locate_all(Path::new(&rel)).iter().any(|(t, _)| *t != self.base_index()) {
                let tier = self.mapper.select_tier();
                if tier == self.base_index() {
                    report.warnings.push(FileIssue {
                        rel: rel.clone(),
                        message: "insufficient cache space; staying base-resident".into(),
                    });
                    continue;
                }
                let dst = self.mapper.resolve_on(tier, Path::new(&rel));
                let mut pacer = Pacer::new(read_pacer_rate);
                match replicate(&src, &dst, &mut pacer) {
                    Ok((bytes, checksum)) => {
                        let version = src.metadata().map(|m| file_version(&m)).unwrap_or(FileVersion { size: bytes, mtime_ns: 0 });
                        let cycle = self.journal.last_cycle;
                        // Base already holds these bytes, so the journal can
                        // mark them flushed outright.
                        self.journal
                            .advance(&rel, FileState::Flushed, version, Some(checksum), cycle)?;
                        self.journal.pin(&rel)?;
                        report.bytes += bytes;
                        report.prefetched.push(rel);
                    }
                    Err(e) => {
                        report.warnings.push(FileIssue {
                            rel,
                            message: format!("prefetch failed: {e}"),
                        });
                    }
                }
            } else {
                self.journal.pin(&rel)?;
                report.already_cached.push(rel);
            }
        }
        let _ = self.session.append_report("prefetch", &report);
        Ok(report)
    }
}
