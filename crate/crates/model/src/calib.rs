//! Calibration input: cluster geometry and measured storage bandwidths.
//!
//! Two on-disk forms are accepted:
//!
//! * INI with a `[cluster]` section (geometry) and a `[bandwidth]` section
//!   (per-layer read/cached_read/write rates), and
//! * CSV rows `layer,action,bandwidth_mib` for the bandwidth table alone,
//!   in which case the geometry falls back to the built-in defaults.
//!
//! Sizes and rates accept binary suffixes (`KiB`, `MiB`, `GiB`, `TiB`);
//! rates are per second. Bare numbers are bytes.

use std::collections::HashMap;
use std::fmt;
use std::path::Path;

use crate::model::ClusterSpec;

const MIB: f64 = 1024.0 * 1024.0;

#[derive(Debug, thiserror::Error)]
pub enum CalibError {
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("reading {file}: {source}")]
    Io {
        file: String,
        source: std::io::Error,
    },
}

/// Measured bandwidths of one storage layer, bytes per second.
#[derive(Debug, Clone, Copy, Default)]
pub struct LayerBandwidth {
    pub read: Option<f64>,
    pub cached_read: Option<f64>,
    pub write: Option<f64>,
}

/// The parsed calibration: geometry plus the three-layer bandwidth table.
#[derive(Debug, Clone)]
pub struct Calibration {
    pub cluster: ClusterSpec<f64>,
    pub tmpfs: LayerBandwidth,
    pub local_disk: LayerBandwidth,
    pub lustre: LayerBandwidth,
    /// When the fast tier is the OS page cache rather than a tmpfs mount,
    /// reads are served at the PFS cached-read rate.
    pub page_cache_backed: bool,
}

/// Built-in geometry and bandwidths of the reference cluster the model was
/// calibrated on: 5 compute nodes with 6 processes and 6 local disks each,
/// a 4-node PFS with 44 disks, 25 GbE, 126 GiB tmpfs, 447 GiB per disk.
pub fn default_calibration() -> Calibration {
    Calibration {
        cluster: ClusterSpec {
            compute_nodes: 5,
            storage_nodes: 4,
            procs_per_node: 6,
            pfs_disks: 44,
            local_disks: 6,
            network_bw: 2980.0 * MIB,
            pfs_disk_read_bw: 1381.14 * MIB,
            pfs_disk_write_bw: 121.0 * MIB,
            local_disk_read_bw: 501.70 * MIB,
            local_disk_write_bw: 426.0 * MIB,
            cache_read_bw: 6676.48 * MIB,
            cache_write_bw: 2560.0 * MIB,
            tmpfs_bytes: 126.0 * 1024.0 * MIB,
            local_disk_bytes: 447.0 * 1024.0 * MIB,
            file_bytes: 617.0 * MIB,
        },
        tmpfs: LayerBandwidth {
            read: Some(6676.48 * MIB),
            cached_read: Some(6318.08 * MIB),
            write: Some(2560.0 * MIB),
        },
        local_disk: LayerBandwidth {
            read: Some(501.70 * MIB),
            cached_read: Some(7034.88 * MIB),
            write: Some(426.0 * MIB),
        },
        lustre: LayerBandwidth {
            read: Some(1381.14 * MIB),
            cached_read: Some(6103.04 * MIB),
            write: Some(121.0 * MIB),
        },
        page_cache_backed: false,
    }
}

impl Calibration {
    /// Applies the bandwidth table onto the cluster spec.
    pub fn resolve(mut self) -> ClusterSpec<f64> {
        if let Some(v) = self.lustre.read {
            self.cluster.pfs_disk_read_bw = v;
        }
        if let Some(v) = self.lustre.write {
            self.cluster.pfs_disk_write_bw = v;
        }
        if let Some(v) = self.local_disk.read {
            self.cluster.local_disk_read_bw = v;
        }
        if let Some(v) = self.local_disk.write {
            self.cluster.local_disk_write_bw = v;
        }
        if let Some(v) = self.tmpfs.write {
            self.cluster.cache_write_bw = v;
        }
        let cache_read = if self.page_cache_backed {
            self.lustre.cached_read.or(self.tmpfs.read)
        } else {
            self.tmpfs.read
        };
        if let Some(v) = cache_read {
            self.cluster.cache_read_bw = v;
        }
        self.cluster
    }
}

/// Parses a size or per-second rate with optional binary suffix.
pub fn parse_rate(text: &str) -> Result<f64, String> {
    let trimmed = text.trim();
    let (num, mult) = match trimmed
        .char_indices()
        .find(|(_, ch)| ch.is_ascii_alphabetic())
    {
        Some((idx, _)) => {
            let (v, unit) = trimmed.split_at(idx);
            let mult = match unit.trim() {
                "B" => 1.0,
                "KiB" => 1024.0,
                "MiB" => MIB,
                "GiB" => 1024.0 * MIB,
                "TiB" => 1024.0 * 1024.0 * MIB,
                other => return Err(format!("unknown unit `{other}`")),
            };
            (v, mult)
        }
        None => (trimmed, 1.0),
    };
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| format!("bad number `{num}`"))?;
    if !value.is_finite() || value < 0.0 {
        return Err(format!("value out of range `{trimmed}`"));
    }
    Ok(value * mult)
}

fn strip_comment(line: &str) -> &str {
    match line.find(|c| c == '#' || c == ';') {
        Some(idx) => &line[..idx],
        None => line,
    }
}

/// Loads a calibration file, dispatching on extension (`.csv` vs INI).
pub fn load(path: &Path) -> Result<Calibration, CalibError> {
    let file = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| CalibError::Io {
        file: file.clone(),
        source,
    })?;
    if path.extension().is_some_and(|e| e == "csv") {
        parse_csv(&file, &text)
    } else {
        parse_ini(&file, &text)
    }
}

/// CSV form: `layer,action,bandwidth_mib` rows, geometry defaulted.
pub fn parse_csv(file: &str, text: &str) -> Result<Calibration, CalibError> {
    let mut calib = default_calibration();
    for (idx, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim();
        if line.is_empty() || line.starts_with("layer,") {
            continue;
        }
        let err = |message: String| CalibError::Parse {
            file: file.to_string(),
            line: idx + 1,
            message,
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(err(format!("expected 3 fields, got {}", fields.len())));
        }
        let value: f64 = fields[2]
            .parse()
            .map_err(|_| err(format!("bad bandwidth `{}`", fields[2])))?;
        let value = value * MIB;
        let layer = match fields[0] {
            "tmpfs" => &mut calib.tmpfs,
            "local_disk" | "disk" => &mut calib.local_disk,
            "lustre" | "pfs" => &mut calib.lustre,
            other => return Err(err(format!("unknown layer `{other}`"))),
        };
        match fields[1] {
            "read" => layer.read = Some(value),
            "cached_read" | "cached read" => layer.cached_read = Some(value),
            "write" => layer.write = Some(value),
            other => return Err(err(format!("unknown action `{other}`"))),
        }
    }
    Ok(calib)
}

/// INI form: `[cluster]` geometry plus `[bandwidth]` rates.
pub fn parse_ini(file: &str, text: &str) -> Result<Calibration, CalibError> {
    let mut calib = default_calibration();
    let mut section = String::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = strip_comment(raw).trim();
        let err = |message: String| CalibError::Parse {
            file: file.to_string(),
            line: idx + 1,
            message,
        };
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| err("unclosed section header".into()))?;
            section = name.trim().to_string();
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| err(format!("expected key = value, got `{line}`")))?;
        let key = key.trim();
        let value = value.trim();
        if let Some(prev) = seen.insert(format!("{section}.{key}"), idx + 1) {
            return Err(err(format!("duplicate key `{key}` (first at line {prev})")));
        }
        let count = |v: &str| -> Result<u32, CalibError> {
            v.parse().map_err(|_| err(format!("bad count `{v}`")))
        };
        let rate = |v: &str| -> Result<f64, CalibError> { parse_rate(v).map_err(err) };
        match (section.as_str(), key) {
            ("cluster", "compute_nodes" | "nodes") => {
                calib.cluster.compute_nodes = count(value)?;
            }
            ("cluster", "storage_nodes") => calib.cluster.storage_nodes = count(value)?,
            ("cluster", "procs_per_node" | "procs") => {
                calib.cluster.procs_per_node = count(value)?;
            }
            ("cluster", "pfs_disks" | "osts") => calib.cluster.pfs_disks = count(value)?,
            ("cluster", "local_disks" | "disks") => calib.cluster.local_disks = count(value)?,
            ("cluster", "network") => calib.cluster.network_bw = rate(value)?,
            ("cluster", "tmpfs_space") => calib.cluster.tmpfs_bytes = rate(value)?,
            ("cluster", "local_disk_space") => calib.cluster.local_disk_bytes = rate(value)?,
            ("cluster", "file_size") => calib.cluster.file_bytes = rate(value)?,
            ("cluster", "page_cache_backed") => {
                calib.page_cache_backed = value
                    .parse()
                    .map_err(|_| err(format!("bad bool `{value}`")))?;
            }
            ("bandwidth", _) => {
                let value = rate(value)?;
                let (layer, action) = key
                    .split_once('_')
                    .ok_or_else(|| err(format!("unknown bandwidth key `{key}`")))?;
                let layer = match layer {
                    "tmpfs" => &mut calib.tmpfs,
                    "disk" => &mut calib.local_disk,
                    "lustre" | "pfs" => &mut calib.lustre,
                    other => return Err(err(format!("unknown layer `{other}`"))),
                };
                match action {
                    "read" => layer.read = Some(value),
                    "cached_read" => layer.cached_read = Some(value),
                    "write" => layer.write = Some(value),
                    other => return Err(err(format!("unknown action `{other}`"))),
                }
            }
            (sec, k) => return Err(err(format!("unknown key `{k}` in section `[{sec}]`"))),
        }
    }
    Ok(calib)
}

impl fmt::Display for Calibration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = &self.cluster;
        write!(
            f,
            "{} nodes x {} procs, {} PFS disks on {} storage nodes, {} local disks/node",
            c.compute_nodes, c.procs_per_node, c.pfs_disks, c.storage_nodes, c.local_disks
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_suffixes() {
        assert_eq!(parse_rate("4096").unwrap(), 4096.0);
        assert_eq!(parse_rate("1 KiB").unwrap(), 1024.0);
        assert_eq!(parse_rate("617 MiB").unwrap(), 617.0 * MIB);
        assert_eq!(parse_rate("1381.14 MiB").unwrap(), 1381.14 * MIB);
        assert_eq!(parse_rate("2 GiB").unwrap(), 2.0 * 1024.0 * MIB);
        assert!(parse_rate("10 MB").is_err());
        assert!(parse_rate("-5").is_err());
    }

    #[test]
    fn ini_round_trip_of_geometry_and_bandwidths() {
        let text = "\
[cluster]
nodes = 3
storage_nodes = 2
procs = 4
osts = 10
disks = 2
network = 1000 MiB
tmpfs_space = 8 GiB
local_disk_space = 100 GiB
file_size = 64 MiB

[bandwidth]
lustre_read = 800 MiB
lustre_write = 100 MiB
tmpfs_read = 5000 MiB
tmpfs_write = 2000 MiB
disk_read = 400 MiB
disk_write = 300 MiB
";
        let calib = parse_ini("test.ini", text).unwrap();
        let spec = calib.resolve();
        assert_eq!(spec.compute_nodes, 3);
        assert_eq!(spec.pfs_disks, 10);
        assert_eq!(spec.pfs_disk_read_bw, 800.0 * MIB);
        assert_eq!(spec.cache_read_bw, 5000.0 * MIB);
        assert_eq!(spec.cache_write_bw, 2000.0 * MIB);
        assert_eq!(spec.tmpfs_bytes, 8.0 * 1024.0 * MIB);
    }

    #[test]
    fn ini_errors_carry_line_numbers() {
        let err = parse_ini("bad.ini", "[cluster]\nnodes == 3\n").unwrap_err();
        assert!(matches!(err, CalibError::Parse { line: 2, .. }), "{err}");
        let err = parse_ini("bad.ini", "[cluster]\nnodes = 1\nnodes = 2\n").unwrap_err();
        assert!(err.to_string().contains("duplicate"), "{err}");
    }

    #[test]
    fn csv_overrides_bandwidths_only() {
        let text = "layer,action,bandwidth_mib\nlustre,write,50\ntmpfs,read,4000\n";
        let calib = parse_csv("bench.csv", text).unwrap();
        let spec = calib.resolve();
        assert_eq!(spec.pfs_disk_write_bw, 50.0 * MIB);
        assert_eq!(spec.cache_read_bw, 4000.0 * MIB);
        // Geometry stays at the defaults.
        assert_eq!(spec.compute_nodes, 5);
    }

    #[test]
    fn page_cache_backed_uses_cached_read_rate() {
        let text = "[cluster]\npage_cache_backed = true\n";
        let spec = parse_ini("pc.ini", text).unwrap().resolve();
        assert_eq!(spec.cache_read_bw, 6103.04 * MIB);
    }
}
