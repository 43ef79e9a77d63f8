//! Configuration: the virtual mountpoint, the ordered storage hierarchy,
//! capacity hints, and the rule-list locations.
//!
//! The format is a small INI dialect: one `[sea]` section plus one
//! `[tier:NAME]` section per storage tier, listed fastest first with the
//! persistent base tier last. `SEA_HOME` points at the file (default
//! `./sea.ini`).

use std::path::{Component, Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::units::{format_duration, format_size, parse_duration, parse_size};

pub const DEFAULT_CONFIG_NAME: &str = "sea.ini";
pub const ENV_CONFIG: &str = "SEA_HOME";

const DEFAULT_FLUSH_INTERVAL: Duration = Duration::from_millis(500);

/// Storage class of one tier. Ordering in the hierarchy must follow the
/// class order: memory tiers first, then local disks, then the base.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TierClass {
    Memory,
    LocalDisk,
    Base,
}

impl TierClass {
    pub fn as_str(&self) -> &'static str {
        match self {
            TierClass::Memory => "memory",
            TierClass::LocalDisk => "local_disk",
            TierClass::Base => "base",
        }
    }

    fn rank(&self) -> u8 {
        match self {
            TierClass::Memory => 0,
            TierClass::LocalDisk => 1,
            TierClass::Base => 2,
        }
    }
}

/// One cache or base storage level.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StorageTier {
    pub label: String,
    pub root: PathBuf,
    pub class: TierClass,
    /// Desk-scale stand-in for a slow device: paces flusher streams into
    /// this tier, bytes per second.
    pub throttle_write: Option<u64>,
    /// Same for reads issued by the flusher and benchmark harness.
    pub throttle_read: Option<u64>,
}

/// The full runtime configuration, immutable after load.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeaConfig {
    /// Virtual prefix the application uses; never touched physically.
    pub mountpoint: PathBuf,
    /// Ordered hierarchy, fastest first; the last entry is the base.
    pub tiers: Vec<StorageTier>,
    /// Largest single file the workload produces, bytes.
    pub max_file_size: u64,
    /// Expected concurrent writer processes per node.
    pub n_processes: u32,
    pub flushlist_path: Option<PathBuf>,
    pub evictlist_path: Option<PathBuf>,
    pub prefetchlist_path: Option<PathBuf>,
    /// Period of the background lifecycle cycle; also the stability window.
    pub flush_interval: Duration,
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{file}:{line}:{col}: {message}")]
    Parse {
        file: String,
        line: usize,
        col: usize,
        message: String,
    },
    #[error("reading {file}: {source}")]
    Io {
        file: String,
        source: std::io::Error,
    },
    #[error("base tier required (declare exactly one [tier:NAME] with class = base, last)")]
    BaseTierRequired,
    #[error("base tier must be last (tier `{0}` follows it)")]
    BaseTierNotLast(String),
    #[error("multiple base tiers (`{0}` and `{1}`)")]
    MultipleBaseTiers(String, String),
    #[error("tier class order violated: `{0}` ({1}) listed after a slower class")]
    ClassOrder(String, &'static str),
    #[error("max_file_size must be > 0")]
    ZeroMaxFileSize,
    #[error("n_processes must be >= 1")]
    ZeroProcesses,
    #[error("{0} must be an absolute path (got `{1}`)")]
    RelativePath(&'static str, String),
    #[error("nested mountpoint/tier: `{0}` and tier `{1}` overlap")]
    NestedMountpointTier(String, String),
    #[error("tier roots `{0}` and `{1}` are identical or nested")]
    NestedTierRoots(String, String),
    #[error("base tier `{label}` unusable: {message}")]
    BaseUnavailable { label: String, message: String },
}

/// One `validate_runtime` finding; never fatal for cache tiers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuntimeWarning {
    pub tier: String,
    pub message: String,
}

impl std::fmt::Display for RuntimeWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "tier `{}`: {}", self.tier, self.message)
    }
}

/// True when `inner` equals `outer` or lies beneath it, component-wise.
pub fn path_is_within(inner: &Path, outer: &Path) -> bool {
    let mut inner_parts = inner.components();
    for out in outer.components() {
        match inner_parts.next() {
            Some(part) if part == out => continue,
            _ => return false,
        }
    }
    true
}

/// Lexically normalizes an absolute path: resolves `.` and `..` without
/// touching the filesystem, the way a shell tracks its logical directory.
pub fn normalize_lexical(path: &Path) -> PathBuf {
    let mut out = PathBuf::new();
    for part in path.components() {
        match part {
            Component::CurDir => {}
            Component::ParentDir => {
                out.pop();
            }
            other => out.push(other),
        }
    }
    if out.as_os_str().is_empty() {
        out.push("/");
    }
    out
}

struct Cursor<'a> {
    file: &'a str,
    line: usize,
}

impl Cursor<'_> {
    fn err(&self, col: usize, message: impl Into<String>) -> ConfigError {
        ConfigError::Parse {
            file: self.file.to_string(),
            line: self.line,
            col,
            message: message.into(),
        }
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find(|c| c == '#' || c == ';') {
        Some(idx) => &line[..idx],
        None => line,
    }
}

impl SeaConfig {
    /// Parses and validates configuration text. `base_dir` anchors relative
    /// rule-list paths (normally the directory containing the file).
    pub fn parse(source: &str, base_dir: &Path, file_name: &str) -> Result<SeaConfig, ConfigError> {
        enum Section {
            None,
            Sea,
            Tier(usize),
        }

        let mut mountpoint: Option<PathBuf> = None;
        let mut max_file_size: Option<u64> = None;
        let mut n_processes: Option<u32> = None;
        let mut flushlist: Option<PathBuf> = None;
        let mut evictlist: Option<PathBuf> = None;
        let mut prefetchlist: Option<PathBuf> = None;
        let mut flush_interval = DEFAULT_FLUSH_INTERVAL;
        let mut tiers: Vec<(String, Option<PathBuf>, Option<TierClass>, Option<u64>, Option<u64>)> =
            Vec::new();
        let mut section = Section::None;

        for (idx, raw) in source.lines().enumerate() {
            let cur = Cursor {
                file: file_name,
                line: idx + 1,
            };
            let line = strip_comment(raw).trim_end();
            let text = line.trim_start();
            if text.is_empty() {
                continue;
            }
            let col = raw.len() - raw.trim_start().len() + 1;
            if let Some(rest) = text.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| cur.err(col, "unclosed section header"))?
                    .trim();
                section = if name == "sea" {
                    Section::Sea
                } else if let Some(label) = name.strip_prefix("tier:") {
                    let label = label.trim();
                    if label.is_empty() {
                        return Err(cur.err(col, "tier name must not be empty"));
                    }
                    if tiers.iter().any(|(l, ..)| l == label) {
                        return Err(cur.err(col, format!("duplicate tier `{label}`")));
                    }
                    tiers.push((label.to_string(), None, None, None, None));
                    Section::Tier(tiers.len() - 1)
                } else {
                    return Err(cur.err(col, format!("unknown section `[{name}]`")));
                };
                continue;
            }

            let (key, value) = text
                .split_once('=')
                .ok_or_else(|| cur.err(col, format!("expected `key = value`, got `{text}`")))?;
            let key = key.trim();
            let value = value.trim();
            let vcol = col + text.find('=').unwrap() + 1;
            if value.is_empty() {
                return Err(cur.err(vcol, format!("empty value for `{key}`")));
            }
            let list_path = |v: &str| -> PathBuf {
                let p = Path::new(v);
                if p.is_absolute() {
                    p.to_path_buf()
                } else {
                    base_dir.join(p)
                }
            };

            match section {
                Section::None => {
                    return Err(cur.err(col, format!("key `{key}` outside any section")));
                }
                Section::Sea => match key {
                    "mount" => mountpoint = Some(PathBuf::from(value)),
                    "max_file_size" => {
                        max_file_size =
                            Some(parse_size(value).map_err(|m| cur.err(vcol, m))?);
                    }
                    "n_processes" => {
                        n_processes = Some(
                            value
                                .parse()
                                .map_err(|_| cur.err(vcol, format!("bad count `{value}`")))?,
                        );
                    }
                    "flushlist" => flushlist = Some(list_path(value)),
                    "evictlist" => evictlist = Some(list_path(value)),
                    "prefetchlist" => prefetchlist = Some(list_path(value)),
                    "flush_interval" => {
                        flush_interval = parse_duration(value).map_err(|m| cur.err(vcol, m))?;
                    }
                    other => {
                        return Err(cur.err(col, format!("unknown key `{other}` in [sea]")));
                    }
                },
                Section::Tier(i) => match key {
                    "root" => tiers[i].1 = Some(PathBuf::from(value)),
                    "class" => {
                        tiers[i].2 = Some(match value {
                            "memory" => TierClass::Memory,
                            "local_disk" => TierClass::LocalDisk,
                            "base" => TierClass::Base,
                            other => {
                                return Err(cur.err(
                                    vcol,
                                    format!(
                                        "unknown class `{other}` (memory, local_disk, base)"
                                    ),
                                ));
                            }
                        });
                    }
                    "throttle_write" => {
                        tiers[i].3 = Some(parse_size(value).map_err(|m| cur.err(vcol, m))?);
                    }
                    "throttle_read" => {
                        tiers[i].4 = Some(parse_size(value).map_err(|m| cur.err(vcol, m))?);
                    }
                    other => {
                        return Err(cur.err(col, format!("unknown key `{other}` in [tier]")));
                    }
                },
            }
        }

        let missing = |line: usize, what: &str| ConfigError::Parse {
            file: file_name.to_string(),
            line,
            col: 1,
            message: format!("missing required key `{what}`"),
        };
        let mountpoint = mountpoint.ok_or_else(|| missing(1, "mount"))?;
        let max_file_size = max_file_size.ok_or_else(|| missing(1, "max_file_size"))?;
        let n_processes = n_processes.ok_or_else(|| missing(1, "n_processes"))?;

        let mut built = Vec::with_capacity(tiers.len());
        for (label, root, class, tw, tr) in tiers {
            let root = root.ok_or_else(|| missing(1, &format!("root (tier `{label}`)")))?;
            let class = class.ok_or_else(|| missing(1, &format!("class (tier `{label}`)")))?;
            built.push(StorageTier {
                label,
                root,
                class,
                throttle_write: tw,
                throttle_read: tr,
            });
        }

        let cfg = SeaConfig {
            mountpoint,
            tiers: built,
            max_file_size,
            n_processes,
            flushlist_path: flushlist,
            evictlist_path: evictlist,
            prefetchlist_path: prefetchlist,
            flush_interval,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Loads and validates the file at `path`.
    pub fn load(path: &Path) -> Result<SeaConfig, ConfigError> {
        let file = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            file: file.clone(),
            source,
        })?;
        let base_dir = path.parent().unwrap_or_else(|| Path::new("."));
        SeaConfig::parse(&text, base_dir, &file)
    }

    /// Loads the file named by `SEA_HOME`, or `./sea.ini` when unset.
    pub fn from_env() -> Result<SeaConfig, ConfigError> {
        let path = std::env::var_os(ENV_CONFIG)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from(DEFAULT_CONFIG_NAME));
        SeaConfig::load(&path)
    }

    /// Structural invariants; called by every constructor.
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.max_file_size == 0 {
            return Err(ConfigError::ZeroMaxFileSize);
        }
        if self.n_processes == 0 {
            return Err(ConfigError::ZeroProcesses);
        }
        if !self.mountpoint.is_absolute() {
            return Err(ConfigError::RelativePath(
                "mountpoint",
                self.mountpoint.display().to_string(),
            ));
        }

        let base_count = self
            .tiers
            .iter()
            .filter(|t| t.class == TierClass::Base)
            .count();
        if self.tiers.is_empty() || base_count == 0 {
            return Err(ConfigError::BaseTierRequired);
        }
        if base_count > 1 {
            let mut bases = self.tiers.iter().filter(|t| t.class == TierClass::Base);
            return Err(ConfigError::MultipleBaseTiers(
                bases.next().unwrap().label.clone(),
                bases.next().unwrap().label.clone(),
            ));
        }
        let base_idx = self
            .tiers
            .iter()
            .position(|t| t.class == TierClass::Base)
            .unwrap();
        if base_idx != self.tiers.len() - 1 {
            return Err(ConfigError::BaseTierNotLast(
                self.tiers[base_idx + 1].label.clone(),
            ));
        }
        let mut rank = 0;
        for tier in &self.tiers {
            if tier.class.rank() < rank {
                return Err(ConfigError::ClassOrder(
                    tier.label.clone(),
                    tier.class.as_str(),
                ));
            }
            rank = tier.class.rank();
            if !tier.root.is_absolute() {
                return Err(ConfigError::RelativePath(
                    "tier root",
                    tier.root.display().to_string(),
                ));
            }
        }

        for tier in &self.tiers {
            if path_is_within(&tier.root, &self.mountpoint)
                || path_is_within(&self.mountpoint, &tier.root)
            {
                return Err(ConfigError::NestedMountpointTier(
                    self.mountpoint.display().to_string(),
                    tier.label.clone(),
                ));
            }
        }
        for (i, a) in self.tiers.iter().enumerate() {
            for b in &self.tiers[i + 1..] {
                if path_is_within(&a.root, &b.root) || path_is_within(&b.root, &a.root) {
                    return Err(ConfigError::NestedTierRoots(
                        a.label.clone(),
                        b.label.clone(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Index of the base tier (always the last entry).
    pub fn base_index(&self) -> usize {
        self.tiers.len() - 1
    }

    pub fn base(&self) -> &StorageTier {
        &self.tiers[self.base_index()]
    }

    /// Capacity a tier must hold before accepting new files: one in-flight
    /// file per concurrent process.
    pub fn reserve_bytes(&self) -> u64 {
        self.max_file_size.saturating_mul(self.n_processes as u64)
    }

    /// Serializes back to the INI dialect; `parse` of the result is `==`.
    pub fn to_ini(&self) -> String {
        let mut out = String::from("[sea]\n");
        out.push_str(&format!("mount = {}\n", self.mountpoint.display()));
        out.push_str(&format!(
            "max_file_size = {}\n",
            format_size(self.max_file_size)
        ));
        out.push_str(&format!("n_processes = {}\n", self.n_processes));
        for (key, path) in [
            ("flushlist", &self.flushlist_path),
            ("evictlist", &self.evictlist_path),
            ("prefetchlist", &self.prefetchlist_path),
        ] {
            if let Some(path) = path {
                out.push_str(&format!("{key} = {}\n", path.display()));
            }
        }
        out.push_str(&format!(
            "flush_interval = {}\n",
            format_duration(self.flush_interval)
        ));
        for tier in &self.tiers {
            out.push_str(&format!("\n[tier:{}]\n", tier.label));
            out.push_str(&format!("root = {}\n", tier.root.display()));
            out.push_str(&format!("class = {}\n", tier.class.as_str()));
            if let Some(v) = tier.throttle_write {
                out.push_str(&format!("throttle_write = {}\n", format_size(v)));
            }
            if let Some(v) = tier.throttle_read {
                out.push_str(&format!("throttle_read = {}\n", format_size(v)));
            }
        }
        out
    }

    /// Probes every tier root: existence, writability, and free space.
    /// Cache-tier problems come back as warnings; an unusable base tier is
    /// a hard error because nothing could ever be persisted.
    pub fn validate_runtime(&self) -> Result<Vec<RuntimeWarning>, ConfigError> {
        let mut warnings = Vec::new();
        let need = self.reserve_bytes();
        for (idx, tier) in self.tiers.iter().enumerate() {
            let is_base = idx == self.base_index();
            let mut fail = |message: String| -> Result<(), ConfigError> {
                if is_base {
                    Err(ConfigError::BaseUnavailable {
                        label: tier.label.clone(),
                        message,
                    })
                } else {
                    warnings.push(RuntimeWarning {
                        tier: tier.label.clone(),
                        message,
                    });
                    Ok(())
                }
            };
            if !tier.root.is_dir() {
                fail(format!("root `{}` is not a directory", tier.root.display()))?;
                continue;
            }
            let probe = tier.root.join(format!(".sea_probe.{}", std::process::id()));
            match std::fs::write(&probe, b"probe") {
                Ok(()) => {
                    let _ = std::fs::remove_file(&probe);
                }
                Err(e) => {
                    fail(format!("root `{}` not writable: {e}", tier.root.display()))?;
                    continue;
                }
            }
            if !is_base {
                if let Some(free) = crate::pathmap::probe_free_bytes(&tier.root) {
                    if free < need {
                        warnings.push(RuntimeWarning {
                            tier: tier.label.clone(),
                            message: format!(
                                "free space {} below reservation {} (n_processes x max_file_size)",
                                format_size(free),
                                format_size(need)
                            ),
                        });
                    }
                }
            }
        }
        Ok(warnings)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(base: &Path) -> String {
        format!(
            "# storage hierarchy\n\
             [sea]\n\
             mount = /sea\n\
             max_file_size = 617 MiB\n\
             n_processes = 6\n\
             flush_interval = 500ms\n\
             \n\
             [tier:mem0]\n\
             root = {0}/shm\n\
             class = memory\n\
             \n\
             [tier:ssd0]\n\
             root = {0}/ssd\n\
             class = local_disk\n\
             \n\
             [tier:pfs]\n\
             root = {0}/out\n\
             class = base\n",
            base.display()
        )
    }

    #[test]
    fn parses_three_tier_hierarchy() {
        let cfg = SeaConfig::parse(&sample(Path::new("/x")), Path::new("/x"), "sea.ini").unwrap();
        assert_eq!(cfg.tiers.len(), 3);
        assert_eq!(cfg.max_file_size, 617 << 20);
        assert_eq!(cfg.n_processes, 6);
        assert_eq!(cfg.base().root, PathBuf::from("/x/out"));
        assert_eq!(cfg.base().class, TierClass::Base);
        assert_eq!(cfg.reserve_bytes(), 6 * (617 << 20));
    }

    #[test]
    fn deterministic_and_round_trips() {
        let text = sample(Path::new("/x"));
        let a = SeaConfig::parse(&text, Path::new("/x"), "sea.ini").unwrap();
        let b = SeaConfig::parse(&text, Path::new("/x"), "sea.ini").unwrap();
        assert_eq!(a, b);
        let again = SeaConfig::parse(&a.to_ini(), Path::new("/x"), "sea.ini").unwrap();
        assert_eq!(a, again);
    }

    #[test]
    fn zero_tiers_is_base_tier_required() {
        let text = "[sea]\nmount = /sea\nmax_file_size = 1 MiB\nn_processes = 1\n";
        let err = SeaConfig::parse(text, Path::new("/"), "sea.ini").unwrap_err();
        assert!(matches!(err, ConfigError::BaseTierRequired), "{err}");
    }

    #[test]
    fn nested_mountpoint_and_tier_rejected() {
        let text = "[sea]\nmount = /data\nmax_file_size = 1 MiB\nn_processes = 1\n\
                    [tier:cache]\nroot = /data/cache\nclass = memory\n\
                    [tier:base]\nroot = /out\nclass = base\n";
        let err = SeaConfig::parse(text, Path::new("/"), "sea.ini").unwrap_err();
        assert!(matches!(err, ConfigError::NestedMountpointTier(..)), "{err}");
    }

    #[test]
    fn each_invariant_gets_a_distinct_error() {
        let base = "[sea]\nmount = /sea\nmax_file_size = 1 MiB\nn_processes = 1\n";
        let tier = |label: &str, root: &str, class: &str| {
            format!("[tier:{label}]\nroot = {root}\nclass = {class}\n")
        };

        // base not last
        let text = format!("{base}{}{}", tier("b", "/b", "base"), tier("m", "/m", "memory"));
        assert!(matches!(
            SeaConfig::parse(&text, Path::new("/"), "t").unwrap_err(),
            ConfigError::BaseTierNotLast(_)
        ));

        // two bases
        let text = format!("{base}{}{}", tier("b1", "/b1", "base"), tier("b2", "/b2", "base"));
        assert!(matches!(
            SeaConfig::parse(&text, Path::new("/"), "t").unwrap_err(),
            ConfigError::MultipleBaseTiers(..)
        ));

        // class order: disk before memory
        let text = format!(
            "{base}{}{}{}",
            tier("d", "/d", "local_disk"),
            tier("m", "/m", "memory"),
            tier("b", "/b", "base")
        );
        assert!(matches!(
            SeaConfig::parse(&text, Path::new("/"), "t").unwrap_err(),
            ConfigError::ClassOrder(..)
        ));

        // zero max_file_size
        let text = format!(
            "[sea]\nmount = /sea\nmax_file_size = 0\nn_processes = 1\n{}",
            tier("b", "/b", "base")
        );
        assert!(matches!(
            SeaConfig::parse(&text, Path::new("/"), "t").unwrap_err(),
            ConfigError::ZeroMaxFileSize
        ));

        // zero processes
        let text = format!(
            "[sea]\nmount = /sea\nmax_file_size = 1\nn_processes = 0\n{}",
            tier("b", "/b", "base")
        );
        assert!(matches!(
            SeaConfig::parse(&text, Path::new("/"), "t").unwrap_err(),
            ConfigError::ZeroProcesses
        ));

        // relative mountpoint
        let text = format!(
            "[sea]\nmount = sea\nmax_file_size = 1\nn_processes = 1\n{}",
            tier("b", "/b", "base")
        );
        assert!(matches!(
            SeaConfig::parse(&text, Path::new("/"), "t").unwrap_err(),
            ConfigError::RelativePath(..)
        ));

        // nested tier roots
        let text = format!(
            "{base}{}{}{}",
            tier("m", "/fast", "memory"),
            tier("d", "/fast/disk", "local_disk"),
            tier("b", "/b", "base")
        );
        assert!(matches!(
            SeaConfig::parse(&text, Path::new("/"), "t").unwrap_err(),
            ConfigError::NestedTierRoots(..)
        ));
    }

    #[test]
    fn parse_errors_carry_line_and_column() {
        let text = "[sea]\nmount = /sea\nmax_file_size = lots\n";
        match SeaConfig::parse(text, Path::new("/"), "sea.ini").unwrap_err() {
            ConfigError::Parse { line, col, .. } => {
                assert_eq!(line, 3);
                assert!(col > 1);
            }
            other => panic!("expected parse error, got {other}"),
        }
    }

    #[test]
    fn rule_lists_resolve_relative_to_config_dir() {
        let text = "[sea]\nmount = /sea\nmax_file_size = 1\nn_processes = 1\n\
                    flushlist = .sea_flushlist\n\
                    [tier:b]\nroot = /b\nclass = base\n";
        let cfg = SeaConfig::parse(text, Path::new("/etc/sea"), "t").unwrap();
        assert_eq!(
            cfg.flushlist_path.as_deref(),
            Some(Path::new("/etc/sea/.sea_flushlist"))
        );
    }

    #[test]
    fn runtime_validation_probes_tiers() {
        let dir = tempfile::tempdir().unwrap();
        let shm = dir.path().join("shm");
        let out = dir.path().join("out");
        std::fs::create_dir_all(&shm).unwrap();
        std::fs::create_dir_all(&out).unwrap();
        let text = format!(
            "[sea]\nmount = /sea\nmax_file_size = 1 KiB\nn_processes = 1\n\
             [tier:m]\nroot = {}\nclass = memory\n\
             [tier:b]\nroot = {}\nclass = base\n",
            shm.display(),
            out.display()
        );
        let cfg = SeaConfig::parse(&text, dir.path(), "t").unwrap();
        assert!(cfg.validate_runtime().unwrap().is_empty());

        // A missing cache tier root is a warning naming the tier.
        std::fs::remove_dir(&shm).unwrap();
        let warnings = cfg.validate_runtime().unwrap();
        assert_eq!(warnings.len(), 1);
        assert_eq!(warnings[0].tier, "m");

        // A missing base tier is a hard error.
        std::fs::remove_dir(&out).unwrap();
        assert!(matches!(
            cfg.validate_runtime().unwrap_err(),
            ConfigError::BaseUnavailable { .. }
        ));
    }

    #[test]
    fn free_space_warning_uses_reservation_product() {
        let dir = tempfile::tempdir().unwrap();
        let shm = dir.path().join("shm");
        let out = dir.path().join("out");
        std::fs::create_dir_all(&shm).unwrap();
        std::fs::create_dir_all(&out).unwrap();
        // An absurd reservation trips the warning on any real filesystem:
        // 1024 procs x 1 TiB each.
        let text = format!(
            "[sea]\nmount = /sea\nmax_file_size = 1 TiB\nn_processes = 1024\n\
             [tier:m]\nroot = {}\nclass = memory\n\
             [tier:b]\nroot = {}\nclass = base\n",
            shm.display(),
            out.display()
        );
        let cfg = SeaConfig::parse(&text, dir.path(), "t").unwrap();
        let warnings = cfg.validate_runtime().unwrap();
        assert_eq!(warnings.len(), 1, "{warnings:?}");
        assert_eq!(warnings[0].tier, "m");
        assert!(warnings[0].message.contains("free space"));
    }

    #[test]
    fn lexical_normalization() {
        assert_eq!(
            normalize_lexical(Path::new("/a/b/../c/./d")),
            PathBuf::from("/a/c/d")
        );
        assert_eq!(normalize_lexical(Path::new("/../..")), PathBuf::from("/"));
    }
}
