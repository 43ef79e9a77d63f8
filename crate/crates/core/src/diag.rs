//! Diagnostics on standard error, prefixed `sea:` and gated by `SEA_DEBUG`
//! (0 = silent, 1 = decisions, 2 = every intercepted call).

use std::sync::atomic::{AtomicU8, Ordering};

const UNSET: u8 = u8::MAX;
static LEVEL: AtomicU8 = AtomicU8::new(UNSET);

/// Current debug level, read from `SEA_DEBUG` once.
pub fn debug_level() -> u8 {
    let cached = LEVEL.load(Ordering::Relaxed);
    if cached != UNSET {
        return cached;
    }
    let level = std::env::var("SEA_DEBUG")
        .ok()
        .and_then(|v| v.trim().parse::<u8>().ok())
        .unwrap_or(0)
        .min(2);
    LEVEL.store(level, Ordering::Relaxed);
    level
}

/// Unconditional diagnostic line.
pub fn warn(message: &str) {
    eprintln!("sea: {message}");
}

/// Diagnostic emitted when `SEA_DEBUG` is at least `level`.
#[macro_export]
macro_rules! sea_debug {
    ($level:expr, $($arg:tt)*) => {
        if $crate::diag::debug_level() >= $level {
            eprintln!("sea: {}", format_args!($($arg)*));
        }
    };
}
