//! Global shim state and the per-thread recursion guard.
//!
//! Configuration loads lazily on the first intercepted call. Failure to
//! load never aborts the host application: the shim degrades to pure
//! passthrough after one diagnostic. Calls issued by the shim's own
//! machinery (journal, probes, copies) run with the guard set and bypass
//! translation entirely, so internal I/O can use the standard library
//! freely without re-entering translation.

use std::cell::Cell;
use std::sync::OnceLock;

use sea_core::config::SeaConfig;
use sea_core::pathmap::PathMapper;

pub struct Shim {
    pub mapper: PathMapper,
}

static STATE: OnceLock<Option<Shim>> = OnceLock::new();

thread_local! {
    static IN_SHIM: Cell<bool> = const { Cell::new(false) };
}

/// RAII token proving this thread entered the shim exactly once.
pub struct Guard;

impl Guard {
    /// None when the calling thread is already inside a wrapper; the caller
    /// must then delegate to the real implementation untranslated.
    pub fn enter() -> Option<Guard> {
        IN_SHIM.with(|flag| {
            if flag.get() {
                None
            } else {
                flag.set(true);
                Some(Guard)
            }
        })
    }
}

impl Drop for Guard {
    fn drop(&mut self) {
        IN_SHIM.with(|flag| flag.set(false));
    }
}

/// The loaded state, or None in passthrough mode. Must only be called with
/// the guard held (config loading performs file I/O).
pub fn get() -> Option<&'static Shim> {
    STATE
        .get_or_init(|| {
            let explicit = std::env::var_os(sea_core::config::ENV_CONFIG).is_some();
            match SeaConfig::from_env() {
                Ok(cfg) => {
                    sea_debug!(1, "shim active: mountpoint {}, {} tiers, {} symbols",
                        cfg.mountpoint.display(),
                        cfg.tiers.len(),
                        crate::real::INTERCEPTED.len());
                    Some(Shim {
                        mapper: PathMapper::new(cfg),
                    })
                }
                Err(e) if explicit => {
                    // One diagnostic, then fail open; the shim must never be
                    // the reason the host application dies.
                    sea_core::diag::warn(&format!("configuration unusable, passthrough mode: {e}"));
                    None
                }
                Err(_) => {
                    sea_debug!(1, "no configuration found; passthrough mode");
                    None
                }
            }
        })
        .as_ref()
}

pub fn set_errno(value: libc::c_int) {
    unsafe {
        *libc::__errno_location() = value;
    }
}

pub fn errno() -> libc::c_int {
    unsafe { *libc::__errno_location() }
}
