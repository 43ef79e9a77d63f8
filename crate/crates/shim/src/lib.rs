//! LD_PRELOAD interposition layer.
//!
//! Preloaded ahead of the C runtime, this object shadows the path-taking
//! file API and redirects anything under the configured mountpoint to the
//! storage hierarchy, then delegates to the real implementation resolved
//! through `dlsym(RTLD_NEXT, ...)`. Activation:
//!
//! ```text
//! LD_PRELOAD=libsea_shim.so SEA_HOME=/path/to/sea.ini my_pipeline ...
//! ```
//!
//! Only dynamically linked applications that call through the C library
//! are supported. Configuration problems degrade to pure passthrough
//! (fail open); the shim must never be the reason the host crashes.

#[macro_use]
extern crate sea_core;

mod dirstream;
mod ops;
mod paths;
mod real;
mod state;
mod wrappers;

pub use real::{SymbolClass, SymbolSpec, INTERCEPTED};
