//! Core of the sea data-placement library: configuration, virtual-path
//! translation across a user-defined storage hierarchy, and rule-driven
//! flush/evict/prefetch lifecycle management.
//!
//! The interposition shim and the `sea` launcher are separate crates built
//! on top of this one; everything here is plain library code with no
//! exported C symbols.

pub mod config;
pub mod diag;
pub mod lifecycle;
pub mod pathmap;
pub mod session;
pub mod throttle;
pub mod units;

pub use config::{ConfigError, SeaConfig, StorageTier, TierClass};
pub use pathmap::{Intent, PathMapper, TierChoice, TranslationResult};
