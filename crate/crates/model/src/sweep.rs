//! Parameter sweeps over the makespan bounds.

use std::fmt;
use std::str::FromStr;

use num_traits::Float;
use serde::Serialize;

use crate::model::{
    derive_workload, lustre_bounds, sea_bounds, ClusterSpec, MakespanBounds, ModelError,
};

/// Which input quantity a sweep varies. Everything a point depends on is
/// re-derived per value, including the workload volumes when the iteration
/// or chunk count changes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    ComputeNodes,
    LocalDisks,
    ProcsPerNode,
    Iterations,
    Chunks,
    PfsDisks,
}

impl SweepParam {
    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::ComputeNodes => "nodes",
            SweepParam::LocalDisks => "disks",
            SweepParam::ProcsPerNode => "procs",
            SweepParam::Iterations => "iterations",
            SweepParam::Chunks => "chunks",
            SweepParam::PfsDisks => "osts",
        }
    }
}

impl FromStr for SweepParam {
    type Err = ModelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nodes" => Ok(SweepParam::ComputeNodes),
            "disks" => Ok(SweepParam::LocalDisks),
            "procs" | "threads" => Ok(SweepParam::ProcsPerNode),
            "iterations" | "iters" => Ok(SweepParam::Iterations),
            "chunks" => Ok(SweepParam::Chunks),
            "osts" => Ok(SweepParam::PfsDisks),
            other => Err(ModelError::UnknownParameter(other.to_string())),
        }
    }
}

/// A full evaluation scenario: cluster plus the workload generator inputs.
#[derive(Debug, Clone, Copy)]
pub struct Scenario<T = f64> {
    pub cluster: ClusterSpec<T>,
    pub iterations: u32,
    pub chunks: u64,
    pub chunk_bytes: T,
}

impl<T: Float> Scenario<T> {
    fn at(&self, param: SweepParam, value: u64) -> Scenario<T> {
        let mut point = *self;
        match param {
            SweepParam::ComputeNodes => point.cluster.compute_nodes = value as u32,
            SweepParam::LocalDisks => point.cluster.local_disks = value as u32,
            SweepParam::ProcsPerNode => point.cluster.procs_per_node = value as u32,
            SweepParam::Iterations => point.iterations = value as u32,
            SweepParam::Chunks => point.chunks = value,
            SweepParam::PfsDisks => point.cluster.pfs_disks = value as u32,
        }
        point
    }

    pub fn evaluate(&self) -> (MakespanBounds<T>, MakespanBounds<T>) {
        let w = derive_workload(self.iterations, self.chunks, self.chunk_bytes);
        (lustre_bounds(&w, &self.cluster), sea_bounds(&w, &self.cluster))
    }
}

/// One sweep point.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow<T = f64> {
    pub param: &'static str,
    pub value: u64,
    pub lustre: MakespanBounds<T>,
    pub sea: MakespanBounds<T>,
}

/// Sweep result table.
#[derive(Debug, Clone, Serialize)]
pub struct SweepTable<T = f64> {
    /// Documents the model's scope: the bounds ignore latency entirely.
    pub caveat: &'static str,
    pub rows: Vec<SweepRow<T>>,
}

pub const LATENCY_CAVEAT: &str =
    "bandwidth-bound model: latency and metadata costs are not represented";

/// Evaluates both systems' bounds at every value of the swept parameter.
pub fn sweep<T: Float>(
    param: SweepParam,
    values: &[u64],
    base: &Scenario<T>,
) -> Result<SweepTable<T>, ModelError> {
    let mut rows = Vec::with_capacity(values.len());
    for &value in values {
        let point = base.at(param, value);
        point.cluster.validate()?;
        let (lustre, sea) = point.evaluate();
        rows.push(SweepRow {
            param: param.name(),
            value,
            lustre,
            sea,
        });
    }
    Ok(SweepTable {
        caveat: LATENCY_CAVEAT,
        rows,
    })
}

impl<T: Float + fmt::Display> SweepTable<T> {
    /// CSV rendering: one row per point, bounds plus the upper-bound addends.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# {}\n", self.caveat));
        out.push_str(
            "param,value,lustre_lower_s,lustre_upper_s,sea_lower_s,sea_upper_s,\
             lustre_read_s,lustre_write_s,sea_pfs_s,sea_local_disk_s,sea_tmpfs_s\n",
        );
        for row in &self.rows {
            let lu = &row.lustre.upper_components;
            let su = &row.sea.upper_components;
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{}\n",
                row.param,
                row.value,
                row.lustre.lower,
                row.lustre.upper,
                row.sea.lower,
                row.sea.upper,
                lu[0].seconds,
                lu[1].seconds,
                su[0].seconds,
                su[1].seconds,
                su[2].seconds,
            ));
        }
        out
    }
}

/// Parses `a..b` (inclusive) or a comma list `v1,v2,v3` into sweep values.
pub fn parse_values(text: &str) -> Result<Vec<u64>, ModelError> {
    let bad = |t: &str| ModelError::UnknownParameter(format!("bad sweep values `{t}`"));
    if let Some((lo, hi)) = text.split_once("..") {
        let lo: u64 = lo.trim().parse().map_err(|_| bad(text))?;
        let hi: u64 = hi.trim().parse().map_err(|_| bad(text))?;
        if lo > hi {
            return Err(bad(text));
        }
        return Ok((lo..=hi).collect());
    }
    text.split(',')
        .map(|v| v.trim().parse().map_err(|_| bad(text)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario() -> Scenario {
        Scenario {
            cluster: ClusterSpec {
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
            },
            iterations: 10,
            chunks: 1000,
            chunk_bytes: 617.0,
        }
    }

    #[test]
    fn empty_value_list_gives_empty_table() {
        let table = sweep(SweepParam::ComputeNodes, &[], &scenario()).unwrap();
        assert!(table.rows.is_empty());
    }

    #[test]
    fn unknown_parameter_is_an_error() {
        assert!(matches!(
            "latency".parse::<SweepParam>(),
            Err(ModelError::UnknownParameter(_))
        ));
    }

    #[test]
    fn sea_upper_nonincreasing_in_local_disks() {
        let values: Vec<u64> = (1..=6).collect();
        let table = sweep(SweepParam::LocalDisks, &values, &scenario()).unwrap();
        for pair in table.rows.windows(2) {
            assert!(
                pair[1].sea.upper <= pair[0].sea.upper + 1e-9,
                "sea upper bound rose from {} to {} disks",
                pair[0].value,
                pair[1].value
            );
        }
    }

    #[test]
    fn value_range_parsing() {
        assert_eq!(parse_values("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_values("1,2,8").unwrap(), vec![1, 2, 8]);
        assert!(parse_values("8..1").is_err());
        assert!(parse_values("x").is_err());
    }

    #[test]
    fn csv_has_header_caveat_and_row_per_value() {
        let table = sweep(SweepParam::ComputeNodes, &[1, 2], &scenario()).unwrap();
        let csv = table.to_csv();
        let mut lines = csv.lines();
        assert!(lines.next().unwrap().starts_with('#'));
        assert!(lines.next().unwrap().starts_with("param,value,"));
        assert_eq!(lines.count(), 2);
    }
}
