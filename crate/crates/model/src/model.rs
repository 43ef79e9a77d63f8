//! Bandwidth-bound makespan model.
//!
//! Two systems are modeled: a Lustre-style parallel file system (PFS), and
//! sea's three-layer hierarchy (tmpfs, node-local disks, PFS). For each
//! system the model yields a lower bound (all post-input I/O served from
//! memory) and an upper bound (no caching effects). Latency is ignored
//! throughout; the bounds assume the bottleneck is bandwidth, and that I/O
//! to distinct storage layers never overlaps in time.
//!
//! Sizes are in bytes and bandwidths in bytes per second, but every formula
//! is a ratio, so any consistent unit pair works.

use num_traits::Float;
use serde::{Deserialize, Serialize};

/// Read or write side of a bandwidth formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Read,
    Write,
}

/// Hardware description: node counts, disk counts, and measured bandwidths.
///
/// Counts are dimensionless; bandwidths are per single device (PFS disks,
/// local disks), per node (network, memory), and capacities are per node
/// (tmpfs) or per disk (local disk space).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterSpec<T = f64> {
    /// Compute nodes participating in the run (c).
    pub compute_nodes: u32,
    /// PFS storage nodes (s).
    pub storage_nodes: u32,
    /// Parallel application processes per node (p).
    pub procs_per_node: u32,
    /// PFS storage disks, across all storage nodes (d).
    pub pfs_disks: u32,
    /// Node-local disks per compute node (g); zero when nodes are diskless.
    pub local_disks: u32,
    /// Network bandwidth of one node (N).
    pub network_bw: T,
    /// Read bandwidth of a single PFS disk (d_r).
    pub pfs_disk_read_bw: T,
    /// Write bandwidth of a single PFS disk (d_w).
    pub pfs_disk_write_bw: T,
    /// Read bandwidth of a single local disk (G_r).
    pub local_disk_read_bw: T,
    /// Write bandwidth of a single local disk (G_w).
    pub local_disk_write_bw: T,
    /// Per-node memory (page cache / tmpfs) read bandwidth (C_r).
    pub cache_read_bw: T,
    /// Per-node memory write bandwidth (C_w).
    pub cache_write_bw: T,
    /// tmpfs space available on one node (t).
    pub tmpfs_bytes: T,
    /// Space available on one local disk (r).
    pub local_disk_bytes: T,
    /// Size of a single workload file (F); reserved per process on a device.
    pub file_bytes: T,
}

/// Data volumes moved by the application.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WorkloadSpec<T = f64> {
    /// Input bytes, always read from the PFS first (D_I).
    pub input_bytes: T,
    /// Intermediate bytes produced and read back between stages (D_m).
    pub intermediate_bytes: T,
    /// Final output bytes that must persist (D_f).
    pub final_bytes: T,
    /// Total bytes read, for the cache-free PFS bound (D_r).
    pub read_bytes: T,
    /// Total bytes written, for the cache-free PFS bound (D_w).
    pub write_bytes: T,
    /// Bytes read through memory in the cached bound (D_cr).
    pub cached_read_bytes: T,
    /// Bytes written through memory in the cached bound (D_cw).
    pub cached_write_bytes: T,
}

/// How the tiered system splits intermediate and final data across layers.
///
/// Constructed only by [`sea_placement`], which guarantees the conservation
/// identities: reads sum to `intermediate_bytes`, writes sum to
/// `intermediate_bytes + final_bytes`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlacementBreakdown<T = f64> {
    pub tmpfs_read_bytes: T,
    pub tmpfs_write_bytes: T,
    pub local_disk_read_bytes: T,
    pub local_disk_write_bytes: T,
    pub pfs_read_bytes: T,
    pub pfs_write_bytes: T,
}

/// One labeled addend of a makespan bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component<T = f64> {
    pub label: String,
    pub seconds: T,
}

/// Predicted makespan interval for one system, with per-layer addends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MakespanBounds<T = f64> {
    pub lower: T,
    pub upper: T,
    /// Addends of `lower`, in evaluation order; they sum to `lower`.
    pub lower_components: Vec<Component<T>>,
    /// Addends of `upper`; they sum to `upper`.
    pub upper_components: Vec<Component<T>>,
}

/// Upper-bound makespan of the tiered system, split by storage layer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeaMakespan<T = f64> {
    pub total: T,
    /// Initial input read plus overflow traffic on the PFS.
    pub pfs_seconds: T,
    /// Time spent on node-local disks.
    pub local_disk_seconds: T,
    /// Time spent on tmpfs.
    pub tmpfs_seconds: T,
}

/// Errors raised when a spec violates the model's domain.
#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid cluster spec: {0}")]
    InvalidCluster(String),
    #[error("invalid workload: {0}")]
    InvalidWorkload(String),
    #[error("unknown sweep parameter `{0}`")]
    UnknownParameter(String),
}

impl<T: Float> ClusterSpec<T> {
    /// Checks counts, bandwidths, and capacities against the model's domain.
    pub fn validate(&self) -> Result<(), ModelError> {
        let err = |m: &str| Err(ModelError::InvalidCluster(m.to_string()));
        if self.compute_nodes < 1 || self.storage_nodes < 1 {
            return err("node counts must be >= 1");
        }
        if self.procs_per_node < 1 {
            return err("procs_per_node must be >= 1");
        }
        if self.pfs_disks < 1 {
            return err("pfs_disks must be >= 1");
        }
        let zero = T::zero();
        let bws = [
            self.network_bw,
            self.pfs_disk_read_bw,
            self.pfs_disk_write_bw,
            self.local_disk_read_bw,
            self.local_disk_write_bw,
            self.cache_read_bw,
            self.cache_write_bw,
        ];
        if bws.iter().any(|b| *b <= zero || !b.is_finite()) {
            return err("all bandwidths must be positive and finite");
        }
        if self.tmpfs_bytes < zero || self.local_disk_bytes < zero || self.file_bytes < zero {
            return err("capacities must be >= 0");
        }
        Ok(())
    }
}

impl<T: Float> WorkloadSpec<T> {
    pub fn validate(&self) -> Result<(), ModelError> {
        let vals = [
            self.input_bytes,
            self.intermediate_bytes,
            self.final_bytes,
            self.read_bytes,
            self.write_bytes,
            self.cached_read_bytes,
            self.cached_write_bytes,
        ];
        if vals.iter().any(|v| *v < T::zero() || !v.is_finite()) {
            return Err(ModelError::InvalidWorkload(
                "all data volumes must be >= 0 and finite".into(),
            ));
        }
        Ok(())
    }
}

fn count<T: Float>(n: u32) -> T {
    T::from(n).expect("count fits in the scalar type")
}

/// 0/anything is zero time; avoids NaN when a layer has no devices and the
/// placement routed nothing there.
fn io_time<T: Float>(bytes: T, bandwidth: T) -> T {
    if bytes == T::zero() {
        T::zero()
    } else {
        bytes / bandwidth
    }
}

/// Aggregate PFS bandwidth: the minimum of compute-side network, storage-side
/// network, and collective disk throughput, where at most `min(d, c*p)` disks
/// are busy because a file lives on a single disk.
pub fn lustre_bandwidth<T: Float>(spec: &ClusterSpec<T>, direction: Direction) -> T {
    let c = count::<T>(spec.compute_nodes);
    let s = count::<T>(spec.storage_nodes);
    let p = count::<T>(spec.procs_per_node);
    let d = count::<T>(spec.pfs_disks);
    let per_disk = match direction {
        Direction::Read => spec.pfs_disk_read_bw,
        Direction::Write => spec.pfs_disk_write_bw,
    };
    (c * spec.network_bw)
        .min(s * spec.network_bw)
        .min(per_disk * d.min(c * p))
}

/// PFS makespan with no caching: every byte crosses the wire.
pub fn makespan_lustre_nocache<T: Float>(w: &WorkloadSpec<T>, spec: &ClusterSpec<T>) -> T {
    io_time(w.read_bytes, lustre_bandwidth(spec, Direction::Read))
        + io_time(w.write_bytes, lustre_bandwidth(spec, Direction::Write))
}

/// Makespan of I/O served entirely by per-node memory. Each node brings its
/// own memory bandwidth, so the aggregate scales with the node count.
pub fn makespan_cache<T: Float>(w: &WorkloadSpec<T>, spec: &ClusterSpec<T>) -> T {
    let c = count::<T>(spec.compute_nodes);
    io_time(w.cached_read_bytes, c * spec.cache_read_bw)
        + io_time(w.cached_write_bytes, c * spec.cache_write_bw)
}

/// PFS makespan when everything after the initial input read stays in the
/// page cache.
pub fn makespan_lustre_cached<T: Float>(w: &WorkloadSpec<T>, spec: &ClusterSpec<T>) -> T {
    let cached = WorkloadSpec {
        cached_read_bytes: w.intermediate_bytes,
        cached_write_bytes: w.intermediate_bytes + w.final_bytes,
        ..*w
    };
    io_time(w.input_bytes, lustre_bandwidth(spec, Direction::Read))
        + makespan_cache(&cached, spec)
}

/// Splits intermediate and final data across tmpfs, local disks, and the PFS.
///
/// Each layer takes as much as fits after reserving one file per process
/// (`p * F` per node on tmpfs, per node across the disk set); the PFS absorbs
/// the remainder, so conservation holds by construction.
pub fn sea_placement<T: Float>(w: &WorkloadSpec<T>, spec: &ClusterSpec<T>) -> PlacementBreakdown<T> {
    let zero = T::zero();
    let c = count::<T>(spec.compute_nodes);
    let p = count::<T>(spec.procs_per_node);
    let g = count::<T>(spec.local_disks);
    let reserve = p * spec.file_bytes;

    let total_writes = w.intermediate_bytes + w.final_bytes;
    let tmpfs_cap = (c * (spec.tmpfs_bytes - reserve)).max(zero);
    let tmpfs_read = w.intermediate_bytes.min(tmpfs_cap);
    let tmpfs_write = total_writes.min(tmpfs_cap);

    let disk_cap = (c * (g * spec.local_disk_bytes - reserve)).max(zero);
    let disk_read = (w.intermediate_bytes - tmpfs_read).min(disk_cap);
    let disk_write = (total_writes - tmpfs_write).min(disk_cap);

    // The residuals are >= 0 in exact arithmetic; clamp the odd negative ulp.
    PlacementBreakdown {
        tmpfs_read_bytes: tmpfs_read,
        tmpfs_write_bytes: tmpfs_write,
        local_disk_read_bytes: disk_read,
        local_disk_write_bytes: disk_write,
        pfs_read_bytes: (w.intermediate_bytes - disk_read - tmpfs_read).max(zero),
        pfs_write_bytes: (total_writes - disk_write - tmpfs_write).max(zero),
    }
}

/// Upper bound for the tiered system: sum of the per-layer makespans, with
/// the initial input read charged to the PFS layer.
pub fn makespan_sea_upper<T: Float>(w: &WorkloadSpec<T>, spec: &ClusterSpec<T>) -> SeaMakespan<T> {
    let placement = sea_placement(w, spec);
    let c = count::<T>(spec.compute_nodes);
    let g = count::<T>(spec.local_disks);

    let tmpfs = io_time(placement.tmpfs_read_bytes, c * spec.cache_read_bw)
        + io_time(placement.tmpfs_write_bytes, c * spec.cache_write_bw);
    let disks = io_time(placement.local_disk_read_bytes, g * c * spec.local_disk_read_bw)
        + io_time(placement.local_disk_write_bytes, g * c * spec.local_disk_write_bw);
    let pfs = io_time(w.input_bytes, lustre_bandwidth(spec, Direction::Read))
        + io_time(placement.pfs_read_bytes, lustre_bandwidth(spec, Direction::Read))
        + io_time(placement.pfs_write_bytes, lustre_bandwidth(spec, Direction::Write));

    SeaMakespan {
        total: pfs + disks + tmpfs,
        pfs_seconds: pfs,
        local_disk_seconds: disks,
        tmpfs_seconds: tmpfs,
    }
}

/// Lower bound for the tiered system: initial PFS read, then everything in
/// memory. Identical to [`makespan_lustre_cached`] by definition, and shares
/// its code so the identity holds bit-for-bit.
pub fn makespan_sea_lower<T: Float>(w: &WorkloadSpec<T>, spec: &ClusterSpec<T>) -> T {
    makespan_lustre_cached(w, spec)
}

/// Workload volumes of the incrementation benchmark: every chunk is read
/// once from the PFS, rewritten once per iteration, and re-read between
/// iterations; the last iteration's outputs are final.
pub fn derive_workload<T: Float>(iterations: u32, chunks: u64, chunk_bytes: T) -> WorkloadSpec<T> {
    let n = T::from(iterations).expect("iteration count fits in the scalar type");
    let k = T::from(chunks).expect("chunk count fits in the scalar type");
    let one = T::one();
    let input = k * chunk_bytes;
    let final_out = if chunks == 0 { T::zero() } else { input };
    let intermediate = (n - one).max(T::zero()) * k * chunk_bytes;
    WorkloadSpec {
        input_bytes: input,
        intermediate_bytes: intermediate,
        final_bytes: final_out,
        read_bytes: input + intermediate,
        write_bytes: intermediate + final_out,
        cached_read_bytes: intermediate,
        cached_write_bytes: intermediate + final_out,
    }
}

/// Both bounds for the plain PFS, with labeled addends.
pub fn lustre_bounds<T: Float>(w: &WorkloadSpec<T>, spec: &ClusterSpec<T>) -> MakespanBounds<T> {
    let l_r = lustre_bandwidth(spec, Direction::Read);
    let l_w = lustre_bandwidth(spec, Direction::Write);
    let c = count::<T>(spec.compute_nodes);
    let comp = |label: &str, seconds: T| Component {
        label: label.to_string(),
        seconds,
    };
    let lower_components = vec![
        comp("input_read", io_time(w.input_bytes, l_r)),
        comp("cache_read", io_time(w.intermediate_bytes, c * spec.cache_read_bw)),
        comp(
            "cache_write",
            io_time(w.intermediate_bytes + w.final_bytes, c * spec.cache_write_bw),
        ),
    ];
    let upper_components = vec![
        comp("read", io_time(w.read_bytes, l_r)),
        comp("write", io_time(w.write_bytes, l_w)),
    ];
    MakespanBounds {
        lower: makespan_lustre_cached(w, spec),
        upper: makespan_lustre_nocache(w, spec),
        lower_components,
        upper_components,
    }
}

/// Both bounds for the tiered system, with labeled addends.
pub fn sea_bounds<T: Float>(w: &WorkloadSpec<T>, spec: &ClusterSpec<T>) -> MakespanBounds<T> {
    let upper = makespan_sea_upper(w, spec);
    let l_r = lustre_bandwidth(spec, Direction::Read);
    let c = count::<T>(spec.compute_nodes);
    let comp = |label: &str, seconds: T| Component {
        label: label.to_string(),
        seconds,
    };
    let lower_components = vec![
        comp("input_read", io_time(w.input_bytes, l_r)),
        comp("cache_read", io_time(w.intermediate_bytes, c * spec.cache_read_bw)),
        comp(
            "cache_write",
            io_time(w.intermediate_bytes + w.final_bytes, c * spec.cache_write_bw),
        ),
    ];
    let upper_components = vec![
        comp("pfs", upper.pfs_seconds),
        comp("local_disk", upper.local_disk_seconds),
        comp("tmpfs", upper.tmpfs_seconds),
    ];
    MakespanBounds {
        lower: makespan_sea_lower(w, spec),
        upper: upper.total,
        lower_components,
        upper_components,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_spec() -> ClusterSpec {
        ClusterSpec {
            compute_nodes: 5,
            storage_nodes: 4,
            procs_per_node: 6,
            pfs_disks: 44,
            local_disks: 6,
            network_bw: 2980.0,
            pfs_disk_read_bw: 1381.14,
            pfs_disk_write_bw: 121.0,
            local_disk_read_bw: 501.70,
            local_disk_write_bw: 426.0,
            cache_read_bw: 6676.48,
            cache_write_bw: 2560.0,
            tmpfs_bytes: 129024.0,
            local_disk_bytes: 457728.0,
            file_bytes: 617.0,
        }
    }

    #[test]
    fn bandwidth_min_structure() {
        let spec = base_spec();
        // Disk term binds on writes, storage-side network on reads.
        assert_eq!(lustre_bandwidth(&spec, Direction::Write), 3630.0);
        assert_eq!(lustre_bandwidth(&spec, Direction::Read), 11920.0);

        // Single-stream case degenerates to min(N, d_r).
        let single = ClusterSpec {
            compute_nodes: 1,
            procs_per_node: 1,
            pfs_disks: 1,
            ..spec
        };
        assert_eq!(
            lustre_bandwidth(&single, Direction::Read),
            2980.0_f64.min(1381.14)
        );

        // An unbounded disk term leaves the network as the limit.
        let fast_disks = ClusterSpec {
            pfs_disk_read_bw: f64::INFINITY,
            ..spec
        };
        assert_eq!(lustre_bandwidth(&fast_disks, Direction::Read), 11920.0);
    }

    #[test]
    fn nocache_makespan_is_linear_in_volume() {
        let spec = base_spec();
        let w = derive_workload(10, 1000, 617.0);
        let m1 = makespan_lustre_nocache(&w, &spec);
        let doubled = WorkloadSpec {
            read_bytes: w.read_bytes * 2.0,
            write_bytes: w.write_bytes * 2.0,
            ..w
        };
        let m2 = makespan_lustre_nocache(&doubled, &spec);
        assert!((m2 - 2.0 * m1).abs() < 1e-9 * m1);

        let empty = WorkloadSpec {
            read_bytes: 0.0,
            write_bytes: 0.0,
            ..w
        };
        assert_eq!(makespan_lustre_nocache(&empty, &spec), 0.0);
    }

    #[test]
    fn cache_makespan_scales_with_nodes() {
        let spec = base_spec();
        let w = WorkloadSpec {
            input_bytes: 0.0,
            intermediate_bytes: 0.0,
            final_bytes: 0.0,
            read_bytes: 0.0,
            write_bytes: 0.0,
            cached_read_bytes: 10_000.0,
            cached_write_bytes: 10_000.0,
        };
        let m5 = makespan_cache(&w, &spec);
        let m10 = makespan_cache(
            &w,
            &ClusterSpec {
                compute_nodes: 10,
                ..spec
            },
        );
        assert!((m5 - 2.0 * m10).abs() < 1e-12 * m5);

        let empty = WorkloadSpec {
            cached_read_bytes: 0.0,
            cached_write_bytes: 0.0,
            ..w
        };
        assert_eq!(makespan_cache(&empty, &spec), 0.0);
    }

    #[test]
    fn cached_bound_reduces_to_input_read_without_intermediates() {
        let spec = base_spec();
        let w = derive_workload(1, 100, 617.0);
        let only_input = WorkloadSpec {
            final_bytes: 0.0,
            intermediate_bytes: 0.0,
            write_bytes: 0.0,
            cached_write_bytes: 0.0,
            ..w
        };
        let expect = only_input.input_bytes / lustre_bandwidth(&spec, Direction::Read);
        assert!((makespan_lustre_cached(&only_input, &spec) - expect).abs() < 1e-12);
        assert!((makespan_sea_lower(&only_input, &spec) - expect).abs() < 1e-12);
        assert!((makespan_sea_upper(&only_input, &spec).total - expect).abs() < 1e-12);
    }

    #[test]
    fn placement_zeroes_tmpfs_when_reservation_consumes_it() {
        let spec = ClusterSpec {
            tmpfs_bytes: 6.0 * 617.0, // t == p*F exactly
            ..base_spec()
        };
        let w = derive_workload(10, 1000, 617.0);
        let p = sea_placement(&w, &spec);
        assert_eq!(p.tmpfs_read_bytes, 0.0);
        assert_eq!(p.tmpfs_write_bytes, 0.0);
    }

    #[test]
    fn placement_routes_everything_to_pfs_without_local_disks() {
        let spec = ClusterSpec {
            local_disks: 0,
            tmpfs_bytes: 0.0,
            ..base_spec()
        };
        let w = derive_workload(10, 1000, 617.0);
        let p = sea_placement(&w, &spec);
        assert_eq!(p.local_disk_read_bytes, 0.0);
        assert_eq!(p.local_disk_write_bytes, 0.0);
        assert_eq!(p.pfs_read_bytes, w.intermediate_bytes);
        assert_eq!(p.pfs_write_bytes, w.intermediate_bytes + w.final_bytes);
        // No devices on the middle layer: its makespan term must stay zero.
        assert_eq!(makespan_sea_upper(&w, &spec).local_disk_seconds, 0.0);
    }

    #[test]
    fn derive_workload_volume_arithmetic() {
        let w = derive_workload(10, 1000, 617.0);
        assert_eq!(w.input_bytes, 617_000.0);
        assert_eq!(w.final_bytes, 617_000.0);
        assert_eq!(w.intermediate_bytes, 5_553_000.0);
        assert_eq!(w.read_bytes, w.input_bytes + w.intermediate_bytes);
        assert_eq!(w.write_bytes, 6_170_000.0);

        let single = derive_workload(1, 1000, 617.0);
        assert_eq!(single.intermediate_bytes, 0.0);
        assert_eq!(single.read_bytes, single.input_bytes);
        assert_eq!(single.write_bytes, single.final_bytes);

        let empty = derive_workload::<f64>(10, 0, 617.0);
        assert_eq!(empty.read_bytes, 0.0);
        assert_eq!(empty.write_bytes, 0.0);
    }

    #[test]
    fn bounds_components_sum_to_each_bound() {
        let spec = base_spec();
        let w = derive_workload(10, 1000, 617.0);
        for bounds in [lustre_bounds(&w, &spec), sea_bounds(&w, &spec)] {
            let lo: f64 = bounds.lower_components.iter().map(|c| c.seconds).sum();
            let hi: f64 = bounds.upper_components.iter().map(|c| c.seconds).sum();
            assert!((lo - bounds.lower).abs() <= 1e-9 * bounds.lower);
            assert!((hi - bounds.upper).abs() <= 1e-9 * bounds.upper);
            assert!(bounds.lower <= bounds.upper);
        }
    }

    #[test]
    fn generic_scalar_matches_f64_at_f32_precision() {
        let spec = base_spec();
        let w = derive_workload(10, 1000, 617.0);
        let spec32 = ClusterSpec::<f32> {
            compute_nodes: spec.compute_nodes,
            storage_nodes: spec.storage_nodes,
            procs_per_node: spec.procs_per_node,
            pfs_disks: spec.pfs_disks,
            local_disks: spec.local_disks,
            network_bw: spec.network_bw as f32,
            pfs_disk_read_bw: spec.pfs_disk_read_bw as f32,
            pfs_disk_write_bw: spec.pfs_disk_write_bw as f32,
            local_disk_read_bw: spec.local_disk_read_bw as f32,
            local_disk_write_bw: spec.local_disk_write_bw as f32,
            cache_read_bw: spec.cache_read_bw as f32,
            cache_write_bw: spec.cache_write_bw as f32,
            tmpfs_bytes: spec.tmpfs_bytes as f32,
            local_disk_bytes: spec.local_disk_bytes as f32,
            file_bytes: spec.file_bytes as f32,
        };
        let w32 = derive_workload::<f32>(10, 1000, 617.0);
        let m64 = makespan_sea_upper(&w, &spec).total;
        let m32 = makespan_sea_upper(&w32, &spec32).total as f64;
        assert!((m64 - m32).abs() < 1e-3 * m64);
    }

    #[test]
    fn validation_rejects_degenerate_specs() {
        let mut spec = base_spec();
        assert!(spec.validate().is_ok());
        spec.compute_nodes = 0;
        assert!(spec.validate().is_err());
        let mut spec = base_spec();
        spec.cache_write_bw = 0.0;
        assert!(spec.validate().is_err());
        let mut spec = base_spec();
        spec.tmpfs_bytes = -1.0;
        assert!(spec.validate().is_err());
    }
}
