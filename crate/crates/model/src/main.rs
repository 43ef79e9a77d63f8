//! `sea-model`: evaluate makespan bounds for tiered storage runs.

use std::path::PathBuf;
use std::str::FromStr;

use clap::Parser;
use sea_model::calib::{self, parse_rate};
use sea_model::sweep::{self, Scenario, SweepParam, LATENCY_CAVEAT};
use sea_model::{derive_workload, ClusterSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

impl FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            other => Err(format!("unknown format `{other}` (expected csv or json)")),
        }
    }
}

/// Predict makespan bounds for a parallel file system and a tiered
/// storage hierarchy, from measured bandwidths and cluster geometry.
#[derive(Debug, Parser)]
#[command(name = "sea-model", version)]
struct Args {
    /// Calibration file: INI ([cluster] + [bandwidth]) or CSV bandwidth
    /// table (layer,action,bandwidth_mib). Defaults are built in.
    #[arg(long)]
    cluster: Option<PathBuf>,

    /// Workload as `iterations,chunks,chunk_size`, e.g. `10,1000,617MiB`.
    #[arg(long, default_value = "10,1000,617MiB")]
    workload: String,

    /// Sweep one parameter: `name=a..b` or `name=v1,v2,...`
    /// (names: nodes, disks, procs, iterations, chunks, osts).
    #[arg(long)]
    sweep: Option<String>,

    /// Output format.
    #[arg(long, default_value = "csv")]
    format: Format,

    /// Write output to a file instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn parse_workload(text: &str) -> Result<(u32, u64, f64), String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(format!(
            "workload must be `iterations,chunks,chunk_size`, got `{text}`"
        ));
    }
    let iterations: u32 = parts[0]
        .parse()
        .map_err(|_| format!("bad iteration count `{}`", parts[0]))?;
    let chunks: u64 = parts[1]
        .parse()
        .map_err(|_| format!("bad chunk count `{}`", parts[1]))?;
    let chunk_bytes = parse_rate(parts[2])?;
    Ok((iterations, chunks, chunk_bytes))
}

fn single_point_csv(scenario: &Scenario) -> String {
    let (lustre, sea) = scenario.evaluate();
    let mut out = String::new();
    out.push_str(&format!("# {}\n", LATENCY_CAVEAT));
    out.push_str("system,lower_s,upper_s,components\n");
    for (name, bounds) in [("lustre", &lustre), ("sea", &sea)] {
        let parts: Vec<String> = bounds
            .upper_components
            .iter()
            .map(|c| format!("{}={:.6}", c.label, c.seconds))
            .collect();
        out.push_str(&format!(
            "{},{},{},{}\n",
            name,
            bounds.lower,
            bounds.upper,
            parts.join(" ")
        ));
    }
    out
}

fn single_point_json(scenario: &Scenario) -> serde_json::Value {
    let (lustre, sea) = scenario.evaluate();
    serde_json::json!({
        "caveat": LATENCY_CAVEAT,
        "lustre": lustre,
        "sea": sea,
    })
}

fn run(args: &Args) -> Result<String, String> {
    let cluster: ClusterSpec<f64> = match &args.cluster {
        Some(path) => calib::load(path).map_err(|e| e.to_string())?.resolve(),
        None => calib::default_calibration().resolve(),
    };
    cluster.validate().map_err(|e| e.to_string())?;
    let (iterations, chunks, chunk_bytes) = parse_workload(&args.workload)?;
    derive_workload(iterations, chunks, chunk_bytes)
        .validate()
        .map_err(|e| e.to_string())?;
    let scenario = Scenario {
        cluster,
        iterations,
        chunks,
        chunk_bytes,
    };

    match &args.sweep {
        Some(text) => {
            let (name, values) = text
                .split_once('=')
                .ok_or_else(|| format!("sweep must be `param=values`, got `{text}`"))?;
            let param: SweepParam = name.trim().parse().map_err(|e| format!("{e}"))?;
            let values = sweep::parse_values(values).map_err(|e| format!("{e}"))?;
            let table = sweep::sweep(param, &values, &scenario).map_err(|e| format!("{e}"))?;
            Ok(match args.format {
                Format::Csv => table.to_csv(),
                Format::Json => serde_json::to_string_pretty(&table).unwrap(),
            })
        }
        None => Ok(match args.format {
            Format::Csv => single_point_csv(&scenario),
            Format::Json => serde_json::to_string_pretty(&single_point_json(&scenario)).unwrap(),
        }),
    }
}

fn main() {
    let args = Args::parse();
    match run(&args) {
        Ok(text) => match &args.output {
            Some(path) => {
                if let Err(e) = std::fs::write(path, text) {
                    eprintln!("sea: cannot write {}: {e}", path.display());
                    std::process::exit(1);
                }
            }
            None => print!("{text}"),
        },
        Err(message) => {
            eprintln!("sea: {message}");
            std::process::exit(2);
        }
    }
}
