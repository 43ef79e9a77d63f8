//! Virtual-path translation and tier selection.
//!
//! Paths under the configured mountpoint map to concrete per-tier paths;
//! everything else passes through untouched. New files go to the fastest
//! tier with room for one in-flight file per concurrent process; reads
//! resolve to the fastest tier that already holds the file, falling back
//! to the base tier.

use std::collections::BTreeMap;
use std::ffi::{CString, OsString};
use std::os::unix::ffi::OsStrExt;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use crate::config::{normalize_lexical, SeaConfig, TierClass};

/// Probe results are trusted for this long; within the window the mapper
/// tracks its own reservations instead of re-probing on every call.
const PROBE_TTL: Duration = Duration::from_millis(250);

/// Why a path is being translated. Creation consults capacity; the other
/// intents only look for existing copies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Intent {
    ReadExisting,
    CreateNew,
    Metadata,
}

/// Destination of a translation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TierChoice {
    /// Outside the mountpoint: the path is untouched.
    Passthrough,
    /// Index into the configured tier list.
    Tier(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TranslationResult {
    pub original: PathBuf,
    pub resolved: PathBuf,
    pub tier: TierChoice,
    pub intent: Intent,
}

impl TranslationResult {
    pub fn is_passthrough(&self) -> bool {
        self.tier == TierChoice::Passthrough
    }
}

/// Snapshot of a tier's capacity accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TierUsage {
    /// Last probed free space.
    pub free_bytes: u64,
    /// Space promised to this process's in-flight creations since the probe.
    pub reserved_bytes: u64,
}

impl TierUsage {
    pub fn usable(&self) -> u64 {
        self.free_bytes.saturating_sub(self.reserved_bytes)
    }
}

#[derive(Debug)]
struct TierState {
    usage: TierUsage,
    probed_at: Option<Instant>,
}

/// One name in a merged directory listing.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnionEntry {
    pub name: OsString,
    /// Tier that won the merge (fastest holder of the name).
    pub tier: usize,
    pub file_type: Option<std::fs::FileType>,
    pub inode: u64,
}

/// Free space visible to an unprivileged caller, from statvfs.
pub fn probe_free_bytes(root: &Path) -> Option<u64> {
    let c_path = CString::new(root.as_os_str().as_bytes()).ok()?;
    let mut stats: libc::statvfs = unsafe { std::mem::zeroed() };
    let rc = unsafe { libc::statvfs(c_path.as_ptr(), &mut stats) };
    if rc != 0 {
        return None;
    }
    Some(stats.f_bavail as u64 * stats.f_frsize as u64)
}

/// Deterministic 64-bit mixer used for the per-process tier shuffle.
fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Uniform Fisher-Yates permutation of equivalent tiers, fixed per process.
pub fn shuffle_equivalent(indices: &[usize], seed: u64) -> Vec<usize> {
    let mut order: Vec<usize> = indices.to_vec();
    let mut state = seed;
    for i in (1..order.len()).rev() {
        let j = (splitmix64(&mut state) % (i as u64 + 1)) as usize;
        order.swap(i, j);
    }
    order
}

/// Pure tier-selection rule: first tier in `order` whose usable budget
/// covers the reservation wins; otherwise the base takes the file.
pub fn choose_tier(order: &[usize], usage: &[TierUsage], threshold: u64, base: usize) -> usize {
    for &idx in order {
        if usage[idx].usable() >= threshold {
            return idx;
        }
    }
    base
}

pub struct PathMapper {
    cfg: SeaConfig,
    /// Cache tiers in evaluation order: class groups keep their priority,
    /// equivalent tiers within a group are shuffled once per process.
    select_order: Vec<usize>,
    tiers: Mutex<Vec<TierState>>,
}

impl PathMapper {
    pub fn new(cfg: SeaConfig) -> PathMapper {
        let seed = std::env::var("SEA_SHUFFLE_SEED")
            .ok()
            .and_then(|v| v.trim().parse::<u64>().ok())
            .unwrap_or_else(|| {
                let now = std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_nanos() as u64)
                    .unwrap_or(0);
                now ^ ((std::process::id() as u64) << 32)
            });
        PathMapper::with_seed(cfg, seed)
    }

    pub fn with_seed(cfg: SeaConfig, seed: u64) -> PathMapper {
        let mut select_order = Vec::new();
        for class in [TierClass::Memory, TierClass::LocalDisk] {
            let group: Vec<usize> = cfg
                .tiers
                .iter()
                .enumerate()
                .filter(|(_, t)| t.class == class)
                .map(|(i, _)| i)
                .collect();
            select_order.extend(shuffle_equivalent(&group, seed ^ class as u64));
        }
        let tiers = cfg
            .tiers
            .iter()
            .map(|_| TierState {
                usage: TierUsage {
                    free_bytes: 0,
                    reserved_bytes: 0,
                },
                probed_at: None,
            })
            .collect();
        PathMapper {
            cfg,
            select_order,
            tiers: Mutex::new(tiers),
        }
    }

    pub fn config(&self) -> &SeaConfig {
        &self.cfg
    }

    /// Cache-tier evaluation order used by `select_tier`.
    pub fn selection_order(&self) -> &[usize] {
        &self.select_order
    }

    /// Mountpoint-relative remainder of `path`, if it lies under the
    /// mountpoint. The path must already be absolute and lexically clean.
    pub fn mount_relative(&self, path: &Path) -> Option<PathBuf> {
        path.strip_prefix(&self.cfg.mountpoint)
            .ok()
            .map(|r| r.to_path_buf())
    }

    /// Concrete location of `rel` on one tier.
    pub fn resolve_on(&self, tier: usize, rel: &Path) -> PathBuf {
        self.cfg.tiers[tier].root.join(rel)
    }

    /// Maps a concrete tier path back into the virtual namespace.
    pub fn reverse(&self, physical: &Path) -> Option<PathBuf> {
        for tier in &self.cfg.tiers {
            if let Ok(rel) = physical.strip_prefix(&tier.root) {
                return Some(self.cfg.mountpoint.join(rel));
            }
        }
        None
    }

    /// Every tier currently holding `rel`, fastest first.
    pub fn locate_all(&self, rel: &Path) -> Vec<(usize, PathBuf)> {
        let mut found = Vec::new();
        for (idx, tier) in self.cfg.tiers.iter().enumerate() {
            let candidate = tier.root.join(rel);
            if candidate.symlink_metadata().is_ok() {
                found.push((idx, candidate));
            }
        }
        found
    }

    /// Fastest tier holding `rel`, or the base when it exists nowhere.
    pub fn locate_fastest(&self, rel: &Path) -> usize {
        for (idx, tier) in self.cfg.tiers.iter().enumerate() {
            if tier.root.join(rel).symlink_metadata().is_ok() {
                return idx;
            }
        }
        self.cfg.base_index()
    }

    /// Translates `path` (absolute, lexically clean) for the given intent.
    /// Never fails: the worst case resolves to the base tier.
    pub fn translate(&self, path: &Path, intent: Intent) -> TranslationResult {
        let abs = normalize_lexical(path);
        let rel = match self.mount_relative(&abs) {
            Some(rel) => rel,
            None => {
                return TranslationResult {
                    original: path.to_path_buf(),
                    resolved: path.to_path_buf(),
                    tier: TierChoice::Passthrough,
                    intent,
                };
            }
        };
        let tier = match intent {
            Intent::ReadExisting | Intent::Metadata => self.locate_fastest(&rel),
            Intent::CreateNew => self.select_tier(),
        };
        TranslationResult {
            original: path.to_path_buf(),
            resolved: self.resolve_on(tier, &rel),
            tier: TierChoice::Tier(tier),
            intent,
        }
    }

    /// Fastest cache tier with room for `n_processes x max_file_size`,
    /// falling back to the base. Reserves one file's worth on the winner;
    /// reservations expire when the next fresh probe replaces them.
    pub fn select_tier(&self) -> usize {
        let threshold = self.cfg.reserve_bytes();
        let mut probes: Vec<(usize, u64)> = Vec::new();
        {
            let tiers = self.tiers.lock().unwrap_or_else(|e| e.into_inner());
            for &idx in &self.select_order {
                let stale = tiers[idx]
                    .probed_at
                    .is_none_or(|at| at.elapsed() > PROBE_TTL);
                if stale {
                    probes.push((idx, 0));
                }
            }
        }
        // statvfs happens outside the lock.
        for probe in &mut probes {
            probe.1 = probe_free_bytes(&self.cfg.tiers[probe.0].root).unwrap_or(0);
        }

        let mut tiers = self.tiers.lock().unwrap_or_else(|e| e.into_inner());
        let now = Instant::now();
        for (idx, free) in probes {
            // Only take the newer probe if nobody else refreshed meanwhile.
            if tiers[idx].probed_at.is_none_or(|at| at.elapsed() > PROBE_TTL) {
                tiers[idx].usage = TierUsage {
                    free_bytes: free,
                    reserved_bytes: 0,
                };
                tiers[idx].probed_at = Some(now);
            }
        }
        let usage: Vec<TierUsage> = tiers.iter().map(|t| t.usage).collect();
        let chosen = choose_tier(&self.select_order, &usage, threshold, self.cfg.base_index());
        if chosen != self.cfg.base_index() {
            tiers[chosen].usage.reserved_bytes = tiers[chosen]
                .usage
                .reserved_bytes
                .saturating_add(self.cfg.max_file_size);
        }
        chosen
    }

    /// Union directory listing across all tiers at `rel`, deduplicated by
    /// name with the fastest tier winning. `NotFound` when no tier has the
    /// directory at all.
    pub fn list_union(&self, rel: &Path) -> std::io::Result<Vec<UnionEntry>> {
        use std::os::unix::fs::DirEntryExt;
        let mut merged: BTreeMap<OsString, UnionEntry> = BTreeMap::new();
        let mut seen_dir = false;
        for (idx, tier) in self.cfg.tiers.iter().enumerate() {
            let dir = tier.root.join(rel);
            let entries = match std::fs::read_dir(&dir) {
                Ok(entries) => entries,
                Err(_) => continue,
            };
            seen_dir = true;
            for entry in entries.flatten() {
                merged.entry(entry.file_name()).or_insert_with(|| UnionEntry {
                    name: entry.file_name(),
                    tier: idx,
                    file_type: entry.file_type().ok(),
                    inode: entry.ino(),
                });
            }
        }
        if !seen_dir {
            return Err(std::io::Error::from(std::io::ErrorKind::NotFound));
        }
        Ok(merged.into_values().collect())
    }

    /// Current usage snapshot, for diagnostics and tests.
    pub fn usage_snapshot(&self) -> Vec<TierUsage> {
        let tiers = self.tiers.lock().unwrap_or_else(|e| e.into_inner());
        tiers.iter().map(|t| t.usage).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashMap;

    fn test_config(dir: &Path, tiers: &[(&str, TierClass)]) -> SeaConfig {
        let tier_sections: String = tiers
            .iter()
            .map(|(label, class)| {
                let root = dir.join(label);
                std::fs::create_dir_all(&root).unwrap();
                format!(
                    "[tier:{label}]\nroot = {}\nclass = {}\n",
                    root.display(),
                    class.as_str()
                )
            })
            .collect();
        let text = format!(
            "[sea]\nmount = /sea\nmax_file_size = 1 KiB\nn_processes = 2\n{tier_sections}"
        );
        SeaConfig::parse(&text, dir, "test.ini").unwrap()
    }

    fn mapper(dir: &Path) -> PathMapper {
        let cfg = test_config(
            dir,
            &[
                ("m0", TierClass::Memory),
                ("d0", TierClass::LocalDisk),
                ("base", TierClass::Base),
            ],
        );
        PathMapper::with_seed(cfg, 7)
    }

    #[test]
    fn outside_mountpoint_is_identity_for_every_intent() {
        let dir = tempfile::tempdir().unwrap();
        let m = mapper(dir.path());
        for intent in [Intent::ReadExisting, Intent::CreateNew, Intent::Metadata] {
            let t = m.translate(Path::new("/etc/hosts"), intent);
            assert!(t.is_passthrough());
            assert_eq!(t.resolved, PathBuf::from("/etc/hosts"));
        }
    }

    #[test]
    fn create_goes_to_fastest_tier_with_space() {
        let dir = tempfile::tempdir().unwrap();
        let m = mapper(dir.path());
        let t = m.translate(Path::new("/sea/a/b.dat"), Intent::CreateNew);
        assert_eq!(t.tier, TierChoice::Tier(0));
        assert_eq!(t.resolved, dir.path().join("m0/a/b.dat"));
    }

    #[test]
    fn read_resolves_to_fastest_existing_copy() {
        let dir = tempfile::tempdir().unwrap();
        let m = mapper(dir.path());

        // Nowhere: falls back to base.
        let t = m.translate(Path::new("/sea/x.dat"), Intent::ReadExisting);
        assert_eq!(t.tier, TierChoice::Tier(2));

        // Only on the middle tier: resolves there.
        std::fs::write(dir.path().join("d0/x.dat"), b"x").unwrap();
        let t = m.translate(Path::new("/sea/x.dat"), Intent::ReadExisting);
        assert_eq!(t.tier, TierChoice::Tier(1));
        assert_eq!(t.resolved, dir.path().join("d0/x.dat"));

        // Appears on the memory tier too: that copy wins.
        std::fs::write(dir.path().join("m0/x.dat"), b"x").unwrap();
        let t = m.translate(Path::new("/sea/x.dat"), Intent::ReadExisting);
        assert_eq!(t.tier, TierChoice::Tier(0));
    }

    #[test]
    fn read_after_create_sees_the_created_copy() {
        let dir = tempfile::tempdir().unwrap();
        let m = mapper(dir.path());
        let t = m.translate(Path::new("/sea/new.dat"), Intent::CreateNew);
        std::fs::create_dir_all(t.resolved.parent().unwrap()).unwrap();
        std::fs::write(&t.resolved, b"fresh").unwrap();
        let r = m.translate(Path::new("/sea/new.dat"), Intent::ReadExisting);
        assert_eq!(r.tier, t.tier);
        assert_eq!(r.resolved, t.resolved);
    }

    #[test]
    fn prefix_preservation_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let m = mapper(dir.path());
        for rel in ["a", "a/b/c.dat", "deep/ly/nested/file"] {
            let virt = Path::new("/sea").join(rel);
            for intent in [Intent::ReadExisting, Intent::CreateNew, Intent::Metadata] {
                let t = m.translate(&virt, intent);
                let TierChoice::Tier(idx) = t.tier else {
                    panic!("unexpected passthrough")
                };
                let back = t.resolved.strip_prefix(&m.config().tiers[idx].root).unwrap();
                assert_eq!(m.config().mountpoint.join(back), virt);
            }
        }
    }

    #[test]
    fn relative_components_are_normalized_before_the_prefix_test() {
        let dir = tempfile::tempdir().unwrap();
        let m = mapper(dir.path());
        let t = m.translate(Path::new("/sea/a/../b.dat"), Intent::CreateNew);
        assert!(t.resolved.ends_with("b.dat"));
        assert!(!t.resolved.to_string_lossy().contains(".."));
        // Dot-dot escaping the mountpoint is a passthrough.
        let t = m.translate(Path::new("/sea/../etc/hosts"), Intent::Metadata);
        assert!(t.is_passthrough());
    }

    #[test]
    fn locate_all_orders_by_tier_priority() {
        let dir = tempfile::tempdir().unwrap();
        let m = mapper(dir.path());
        assert!(m.locate_all(Path::new("nope")).is_empty());

        std::fs::write(dir.path().join("base/f"), b"b").unwrap();
        let found = m.locate_all(Path::new("f"));
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].0, 2);

        std::fs::write(dir.path().join("m0/f"), b"m").unwrap();
        let found = m.locate_all(Path::new("f"));
        assert_eq!(found.iter().map(|(i, _)| *i).collect::<Vec<_>>(), vec![0, 2]);
    }

    #[test]
    fn selection_threshold_is_processes_times_file_size() {
        // p=2, F=1 KiB -> threshold 2 KiB.
        let usage = |free: u64| TierUsage {
            free_bytes: free,
            reserved_bytes: 0,
        };
        let order = [0usize, 1];
        assert_eq!(choose_tier(&order, &[usage(2048), usage(1 << 30)], 2048, 2), 0);
        assert_eq!(choose_tier(&order, &[usage(2047), usage(1 << 30)], 2048, 2), 1);
        assert_eq!(choose_tier(&order, &[usage(0), usage(0)], 2048, 2), 2);
    }

    #[test]
    fn monotone_fallback_under_more_free_space() {
        // If tier k wins, growing a faster tier j's budget to meet the
        // threshold can only move the choice earlier.
        let threshold = 1000;
        let base = 3;
        let order = [0usize, 1, 2];
        let usages = [
            TierUsage { free_bytes: 10, reserved_bytes: 0 },
            TierUsage { free_bytes: 999, reserved_bytes: 0 },
            TierUsage { free_bytes: 5000, reserved_bytes: 0 },
        ];
        let k = choose_tier(&order, &usages, threshold, base);
        assert_eq!(k, 2);
        for j in 0..k {
            let mut more = usages;
            more[j].free_bytes = threshold;
            let k2 = choose_tier(&order, &more, threshold, base);
            assert!(k2 <= k, "adding space to tier {j} moved choice from {k} to {k2}");
        }
    }

    #[test]
    fn reservations_consume_the_budget_until_reprobe() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = test_config(
            dir.path(),
            &[("m0", TierClass::Memory), ("base", TierClass::Base)],
        );
        // Reserve = 2 KiB per pick; tempdir free space is huge, so picks
        // stay on tier 0, each adding to the reservation.
        let m = PathMapper::with_seed(cfg, 1);
        assert_eq!(m.select_tier(), 0);
        assert_eq!(m.select_tier(), 0);
        let usage = m.usage_snapshot();
        assert_eq!(usage[0].reserved_bytes, 2 * 1024);
    }

    #[test]
    fn shuffle_is_deterministic_per_seed_and_identity_for_one() {
        assert_eq!(shuffle_equivalent(&[4], 99), vec![4]);
        let a = shuffle_equivalent(&[0, 1, 2, 3, 4, 5], 42);
        let b = shuffle_equivalent(&[0, 1, 2, 3, 4, 5], 42);
        assert_eq!(a, b);
        let c = shuffle_equivalent(&[0, 1, 2, 3, 4, 5], 43);
        assert_ne!(a, c, "distinct seeds should usually differ");
    }

    #[test]
    fn shuffle_first_choice_is_uniform_chi_square() {
        // 6000 distinct seeds over 6 disks: expected 1000 first-choices per
        // disk. Chi-square with 5 degrees of freedom, alpha ~ 0.001 -> 20.5.
        let n = 6000u64;
        let mut counts: HashMap<usize, u64> = HashMap::new();
        for seed in 0..n {
            let order = shuffle_equivalent(&[0, 1, 2, 3, 4, 5], seed);
            *counts.entry(order[0]).or_default() += 1;
        }
        let expected = n as f64 / 6.0;
        let chi2: f64 = (0..6)
            .map(|i| {
                let observed = *counts.get(&i).unwrap_or(&0) as f64;
                (observed - expected).powi(2) / expected
            })
            .sum();
        assert!(chi2 < 20.5, "chi-square {chi2} too large: {counts:?}");
    }

    #[test]
    fn union_listing_dedups_by_name_fastest_wins() {
        let dir = tempfile::tempdir().unwrap();
        let m = mapper(dir.path());
        std::fs::create_dir_all(dir.path().join("m0/out")).unwrap();
        std::fs::create_dir_all(dir.path().join("base/out")).unwrap();
        std::fs::write(dir.path().join("m0/out/fileA"), b"a").unwrap();
        std::fs::write(dir.path().join("base/out/fileB"), b"b").unwrap();
        std::fs::write(dir.path().join("base/out/fileA"), b"stale").unwrap();

        let entries = m.list_union(Path::new("out")).unwrap();
        let names: Vec<String> = entries
            .iter()
            .map(|e| e.name.to_string_lossy().into_owned())
            .collect();
        assert_eq!(names, vec!["fileA", "fileB"]);
        assert_eq!(entries[0].tier, 0, "fastest copy wins the merge");
        assert_eq!(entries[1].tier, 2);

        assert!(m.list_union(Path::new("missing")).is_err());
        std::fs::create_dir_all(dir.path().join("d0/empty")).unwrap();
        assert!(m.list_union(Path::new("empty")).unwrap().is_empty());
    }

    #[test]
    fn reverse_maps_tier_paths_into_the_virtual_namespace() {
        let dir = tempfile::tempdir().unwrap();
        let m = mapper(dir.path());
        let phys = dir.path().join("d0/a/b.dat");
        assert_eq!(m.reverse(&phys), Some(PathBuf::from("/sea/a/b.dat")));
        assert_eq!(m.reverse(Path::new("/etc/hosts")), None);
    }
}
