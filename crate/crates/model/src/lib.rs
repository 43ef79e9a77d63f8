//! Analytical makespan bounds for a parallel file system and for sea's
//! tiered storage hierarchy.
//!
//! The core is generic over the scalar type via [`num_traits::Float`];
//! `f64` is the default everywhere and what the CLI uses.

pub mod calib;
mod model;
pub mod sweep;

pub use model::{
    derive_workload, lustre_bandwidth, lustre_bounds, makespan_cache, makespan_lustre_cached,
    makespan_lustre_nocache, makespan_sea_lower, makespan_sea_upper, sea_bounds, sea_placement,
    ClusterSpec, Component, Direction, MakespanBounds, ModelError, PlacementBreakdown,
    SeaMakespan, WorkloadSpec,
};

/// Concrete aliases for the common case.
pub type ClusterSpec64 = ClusterSpec<f64>;
pub type WorkloadSpec64 = WorkloadSpec<f64>;
pub type MakespanBounds64 = MakespanBounds<f64>;
