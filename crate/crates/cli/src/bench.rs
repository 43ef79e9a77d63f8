//! Synthetic incrementation benchmark.
//!
//! Each worker owns a static share of the chunks (chunk i goes to worker
//! i mod p). A worker reads its chunk, then for every iteration adds one
//! to every byte (wrapping) and saves the result as a distinct file,
//! reading each iteration's output back as the next iteration's input.
//! Final-iteration outputs are verified against independently computed
//! checksums: n increments shift every byte by n mod 256.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rand::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use sea_core::config::SeaConfig;
use sea_core::lifecycle::{FinalReport, Flusher, RuleSet};
use sea_core::session::{Lease, Session};
use sea_core::throttle::{write_paced, Pacer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchMode {
    /// Flush and evict only the final iteration's files.
    InMemory,
    /// Flush every produced file to base, evict nothing.
    FlushAll,
    /// No interposition: write straight to the base directory, paced.
    Baseline,
}

impl std::str::FromStr for BenchMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "in_memory" => Ok(BenchMode::InMemory),
            "flush_all" => Ok(BenchMode::FlushAll),
            "baseline" => Ok(BenchMode::Baseline),
            other => Err(format!(
                "unknown mode `{other}` (in_memory, flush_all, baseline)"
            )),
        }
    }
}

impl BenchMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            BenchMode::InMemory => "in_memory",
            BenchMode::FlushAll => "flush_all",
            BenchMode::Baseline => "baseline",
        }
    }
}

/// Everything one benchmark run needs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunPlan {
    pub iterations: u32,
    pub chunks: u32,
    pub chunk_bytes: u64,
    pub procs: u32,
    pub mode: BenchMode,
    /// Root under which fast/, base/, mnt, and the config live.
    pub workdir: PathBuf,
    pub seed: u64,
    /// Aggregate pacing of base-tier writes, bytes per second.
    pub base_throttle_write: Option<u64>,
    pub flush_interval_ms: u64,
}

impl RunPlan {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.chunks == 0 || self.procs == 0 {
            bail!("iterations, chunks, and procs must all be >= 1");
        }
        if self.chunk_bytes == 0 {
            bail!("chunk size must be > 0");
        }
        Ok(())
    }

    pub fn fast_root(&self) -> PathBuf {
        self.workdir.join("fast")
    }
    pub fn base_root(&self) -> PathBuf {
        self.workdir.join("base")
    }
    pub fn mountpoint(&self) -> PathBuf {
        self.workdir.join("mnt")
    }
    pub fn config_path(&self) -> PathBuf {
        self.workdir.join("sea.ini")
    }
    pub fn input_dir_physical(&self) -> PathBuf {
        self.base_root().join("inputs")
    }

    fn final_iter_pattern(&self) -> String {
        format!("iter_{:04}/*", self.iterations)
    }

    /// The generated configuration for the interposed modes.
    pub fn to_config_text(&self) -> String {
        let throttle = match self.base_throttle_write {
            Some(rate) => format!("throttle_write = {rate}\n"),
            None => String::new(),
        };
        format!(
            "[sea]\n\
             mount = {}\n\
             max_file_size = {}\n\
             n_processes = {}\n\
             flushlist = {}\n\
             evictlist = {}\n\
             flush_interval = {}ms\n\
             \n\
             [tier:fast]\n\
             root = {}\n\
             class = memory\n\
             \n\
             [tier:base]\n\
             root = {}\n\
             class = base\n\
             {throttle}",
            self.mountpoint().display(),
            self.chunk_bytes,
            self.procs,
            self.workdir.join(".sea_flushlist").display(),
            self.workdir.join(".sea_evictlist").display(),
            self.flush_interval_ms,
            self.fast_root().display(),
            self.base_root().display(),
        )
    }

    fn rule_lists(&self) -> (String, String) {
        match self.mode {
            BenchMode::InMemory => (
                format!("{}\n", self.final_iter_pattern()),
                format!("{}\n", self.final_iter_pattern()),
            ),
            BenchMode::FlushAll => ("*\n".to_string(), String::new()),
            BenchMode::Baseline => (String::new(), String::new()),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputManifest {
    pub seed: u64,
    pub chunk_bytes: u64,
    pub files: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub name: String,
    pub size: u64,
    pub sha256: String,
}

pub fn chunk_name(idx: u32) -> String {
    format!("chunk_{idx:05}.dat")
}

pub fn iter_dir(iter: u32) -> String {
    format!("iter_{iter:04}")
}

fn hex(bytes: &[u8]) -> String {
    ::hex::encode(bytes)
}

/// Deterministic pseudorandom chunk contents: same seed, same bytes.
fn chunk_bytes_for(seed: u64, idx: u32, len: u64) -> Vec<u8> {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ (idx as u64).wrapping_mul(0x9E37));
    let mut data = vec![0u8; len as usize];
    rng.fill_bytes(&mut data);
    data
}

/// Writes the input chunks and their checksum manifest.
pub fn generate_input(
    chunks: u32,
    chunk_bytes: u64,
    seed: u64,
    dir: &Path,
) -> Result<InputManifest> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files = Vec::with_capacity(chunks as usize);
    for idx in 0..chunks {
        let data = chunk_bytes_for(seed, idx, chunk_bytes);
        let name = chunk_name(idx);
        std::fs::write(dir.join(&name), &data)
            .with_context(|| format!("writing chunk {idx} (is there space?)"))?;
        files.push(ManifestEntry {
            name,
            size: chunk_bytes,
            sha256: hex(&Sha256::digest(&data)),
        });
    }
    Ok(InputManifest {
        seed,
        chunk_bytes,
        files,
    })
}

/// Expected digest of a chunk after `iterations` byte-wise increments.
pub fn expected_final_sha256(seed: u64, idx: u32, len: u64, iterations: u32) -> String {
    let mut data = chunk_bytes_for(seed, idx, len);
    let add = (iterations % 256) as u8;
    for b in data.iter_mut() {
        *b = b.wrapping_add(add);
    }
    hex(&Sha256::digest(&data))
}

/// The worker body; runs inside the (possibly interposed) worker process.
pub fn run_worker(
    input_dir: &Path,
    target_root: &Path,
    iterations: u32,
    chunks: u32,
    workers: u32,
    worker_idx: u32,
    throttle_write: Option<u64>,
) -> Result<()> {
    for idx in (0..chunks).filter(|i| i % workers == worker_idx) {
        let mut data = std::fs::read(input_dir.join(chunk_name(idx)))
            .with_context(|| format!("reading input chunk {idx}"))?;
        for iter in 1..=iterations {
            for b in data.iter_mut() {
                *b = b.wrapping_add(1);
            }
            let dir = target_root.join(iter_dir(iter));
            std::fs::create_dir_all(&dir)?;
            let path = dir.join(chunk_name(idx));
            let mut pacer = Pacer::new(throttle_write);
            let mut out = std::fs::File::create(&path)
                .with_context(|| format!("creating {}", path.display()))?;
            write_paced(&mut out, &data, &mut pacer)?;
            drop(out);
            if iter < iterations {
                // Re-read what was just saved; intermediate reads are part
                // of the workload's I/O volume.
                let mut back = Vec::with_capacity(data.len());
                std::fs::File::open(&path)?.read_to_end(&mut back)?;
                data = back;
            }
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PhaseTimings {
    pub generate_s: f64,
    pub workers_s: f64,
    pub finalize_s: f64,
}

/// Everything measured and verified for one run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub run_id: String,
    pub mode: BenchMode,
    pub iterations: u32,
    pub chunks: u32,
    pub chunk_bytes: u64,
    pub procs: u32,
    /// Workers start to finalize complete, wall clock.
    pub makespan_s: f64,
    pub phases: PhaseTimings,
    pub bytes_written_by_workers: u64,
    pub bytes_flushed_to_base: u64,
    pub final_files_on_base: u64,
    pub output_files_on_base: u64,
    pub checksums_ok: bool,
    pub final_checksums: Vec<ManifestEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub finalize: Option<FinalReport>,
    pub config_snapshot: String,
}

fn spawn_workers(plan: &RunPlan, exe: &Path, shim: Option<&Path>) -> Result<Vec<std::process::Child>> {
    let (input_dir, target_root) = match plan.mode {
        BenchMode::Baseline => (plan.input_dir_physical(), plan.base_root()),
        _ => (plan.mountpoint().join("inputs"), plan.mountpoint()),
    };
    let per_worker_throttle = match (plan.mode, plan.base_throttle_write) {
        (BenchMode::Baseline, Some(rate)) => Some((rate / plan.procs as u64).max(1)),
        _ => None,
    };
    let mut children = Vec::with_capacity(plan.procs as usize);
    for worker_idx in 0..plan.procs {
        let mut cmd = Command::new(exe);
        cmd.arg("bench-worker")
            .arg("--input-dir")
            .arg(&input_dir)
            .arg("--target-root")
            .arg(&target_root)
            .arg("--iters")
            .arg(plan.iterations.to_string())
            .arg("--chunks")
            .arg(plan.chunks.to_string())
            .arg("--workers")
            .arg(plan.procs.to_string())
            .arg("--worker")
            .arg(worker_idx.to_string());
        if let Some(rate) = per_worker_throttle {
            cmd.arg("--throttle-write").arg(rate.to_string());
        }
        if let Some(shim) = shim {
            for (k, v) in crate::shimloc::preload_env(shim, &plan.config_path()) {
                cmd.env(k, v);
            }
        }
        children.push(
            cmd.spawn()
                .with_context(|| format!("spawning worker {worker_idx}"))?,
        );
    }
    Ok(children)
}

fn count_output_files(base: &Path) -> (u64, u64, u64) {
    // (all output files under iter_*, files in the last iter dir, max iter seen)
    let mut total = 0u64;
    let mut max_iter = 0u32;
    let mut per_iter: std::collections::HashMap<u32, u64> = std::collections::HashMap::new();
    if let Ok(entries) = std::fs::read_dir(base) {
        for entry in entries.flatten() {
            let name = entry.file_name().to_string_lossy().into_owned();
            if let Some(num) = name.strip_prefix("iter_").and_then(|s| s.parse::<u32>().ok()) {
                let files = std::fs::read_dir(entry.path())
                    .map(|d| d.flatten().count() as u64)
                    .unwrap_or(0);
                total += files;
                max_iter = max_iter.max(num);
                per_iter.insert(num, files);
            }
        }
    }
    let last = per_iter.get(&max_iter).copied().unwrap_or(0);
    (total, last, max_iter as u64)
}

/// Runs the full benchmark: input generation, workers (with the background
/// flusher in the interposed modes), finalize, verification.
pub fn run_incrementation(plan: &RunPlan, exe: &Path, shim: Option<&Path>) -> Result<RunReport> {
    plan.validate()?;
    if matches!(plan.mode, BenchMode::InMemory | BenchMode::FlushAll) && shim.is_none() {
        bail!("interposition object not found; set SEA_SHIM or build it first");
    }
    std::fs::create_dir_all(plan.workdir.join("fast"))?;
    std::fs::create_dir_all(plan.base_root())?;

    let t0 = Instant::now();
    let manifest = generate_input(
        plan.chunks,
        plan.chunk_bytes,
        plan.seed,
        &plan.input_dir_physical(),
    )?;
    std::fs::write(
        plan.workdir.join("input_manifest.json"),
        serde_json::to_vec_pretty(&manifest)?,
    )?;
    let generate_s = t0.elapsed().as_secs_f64();

    let interposed = !matches!(plan.mode, BenchMode::Baseline);
    let run_id = format!("bench-{}-{}", plan.mode.as_str(), std::process::id());
    let mut cfg: Option<SeaConfig> = None;
    if interposed {
        let (flush, evict) = plan.rule_lists();
        std::fs::write(plan.workdir.join(".sea_flushlist"), flush)?;
        std::fs::write(plan.workdir.join(".sea_evictlist"), evict)?;
        std::fs::write(plan.config_path(), plan.to_config_text())?;
        cfg = Some(SeaConfig::load(&plan.config_path()).context("generated config is invalid")?);
    }

    // Makespan covers workers plus the drain to base, matching how a
    // pipeline user experiences the run.
    let run_start = Instant::now();
    let mut flusher_thread: Option<crate::launcher::FlusherHandle> = None;
    if let Some(cfg) = &cfg {
        let rules = RuleSet::load(
            cfg.flushlist_path.as_ref(),
            cfg.evictlist_path.as_ref(),
            cfg.prefetchlist_path.as_ref(),
        )?;
        let session = Session::open(cfg, &run_id)?;
        let lease = Lease::acquire(&session)?;
        let flusher = Flusher::new(cfg.clone(), rules, session)?;
        flusher_thread = Some(crate::launcher::FlusherHandle::spawn(
            flusher,
            lease,
            std::time::Duration::from_millis(plan.flush_interval_ms),
        ));
    }

    let children = spawn_workers(plan, exe, if interposed { shim } else { None })?;
    let mut worker_failure = None;
    for (idx, mut child) in children.into_iter().enumerate() {
        let status = child.wait()?;
        if !status.success() && worker_failure.is_none() {
            worker_failure = Some(format!("worker {idx} exited with {status}"));
        }
    }
    let workers_s = run_start.elapsed().as_secs_f64();

    let fin_start = Instant::now();
    let mut finalize_report = None;
    if let Some(handle) = flusher_thread {
        let mut flusher = handle.stop()?;
        if worker_failure.is_none() {
            finalize_report = Some(flusher.finalize()?);
        }
    }
    let finalize_s = fin_start.elapsed().as_secs_f64();
    let makespan_s = run_start.elapsed().as_secs_f64();

    if let Some(failure) = worker_failure {
        bail!("benchmark aborted: {failure}");
    }

    // Verify final outputs on base against independently derived digests.
    let base = plan.base_root();
    let final_dir = base.join(iter_dir(plan.iterations));
    let mut checksums_ok = true;
    let mut final_checksums = Vec::with_capacity(plan.chunks as usize);
    for idx in 0..plan.chunks {
        let path = final_dir.join(chunk_name(idx));
        let actual = match std::fs::read(&path) {
            Ok(data) => hex(&Sha256::digest(&data)),
            Err(_) => {
                checksums_ok = false;
                String::from("missing")
            }
        };
        let expected = expected_final_sha256(plan.seed, idx, plan.chunk_bytes, plan.iterations);
        if actual != expected {
            checksums_ok = false;
        }
        final_checksums.push(ManifestEntry {
            name: format!("{}/{}", iter_dir(plan.iterations), chunk_name(idx)),
            size: plan.chunk_bytes,
            sha256: actual,
        });
    }

    let (output_total, final_count, _) = count_output_files(&base);
    let report = RunReport {
        run_id: run_id.clone(),
        mode: plan.mode,
        iterations: plan.iterations,
        chunks: plan.chunks,
        chunk_bytes: plan.chunk_bytes,
        procs: plan.procs,
        makespan_s,
        phases: PhaseTimings {
            generate_s,
            workers_s,
            finalize_s,
        },
        bytes_written_by_workers: plan.iterations as u64
            * plan.chunks as u64
            * plan.chunk_bytes,
        bytes_flushed_to_base: finalize_report
            .as_ref()
            .map(|r| r.bytes_flushed)
            .unwrap_or(0),
        final_files_on_base: final_count,
        output_files_on_base: output_total,
        checksums_ok,
        final_checksums,
        finalize: finalize_report,
        config_snapshot: if interposed {
            plan.to_config_text()
        } else {
            String::new()
        },
    };

    if let Some(cfg) = &cfg {
        let session = Session::open(cfg, &run_id)?;
        session.append_report("bench_report", &report)?;
    }
    Ok(report)
}
