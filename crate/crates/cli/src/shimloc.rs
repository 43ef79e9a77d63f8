//! Locating the interposition object at runtime.

use std::path::PathBuf;

pub const SHIM_FILE: &str = "libsea_shim.so";

/// Finds the preload object: `SEA_SHIM` wins, then the executable's own
/// directory and its parents (covers installed layouts and build trees).
pub fn find_shim() -> Option<PathBuf> {
    if let Some(explicit) = std::env::var_os("SEA_SHIM") {
        let p = PathBuf::from(explicit);
        if p.is_file() {
            return Some(p);
        }
    }
    let exe = std::env::current_exe().ok()?;
    let mut dir = exe.parent()?.to_path_buf();
    for _ in 0..3 {
        let candidate = dir.join(SHIM_FILE);
        if candidate.is_file() {
            return Some(candidate);
        }
        let in_lib = dir.join("lib").join(SHIM_FILE);
        if in_lib.is_file() {
            return Some(in_lib);
        }
        dir = match dir.parent() {
            Some(p) => p.to_path_buf(),
            None => break,
        };
    }
    None
}

/// Environment entries that activate the shim for a child process.
pub fn preload_env(shim: &std::path::Path, config: &std::path::Path) -> Vec<(String, String)> {
    let mut preload = shim.display().to_string();
    if let Ok(existing) = std::env::var("LD_PRELOAD") {
        if !existing.is_empty() {
            preload = format!("{preload}:{existing}");
        }
    }
    vec![
        ("LD_PRELOAD".to_string(), preload),
        (
            sea_core::config::ENV_CONFIG.to_string(),
            config.display().to_string(),
        ),
    ]
}
