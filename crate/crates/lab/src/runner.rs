//! Replica scheduling and result persistence.
//!
//! Replicas are dispatched to a bounded worker pool; each replica's work is a
//! pure function of (configuration, replica index), and results are collected
//! in replica order, so every emitted number is independent of worker count.

use crate::config::ResolvedConfig;
use crate::error::{LabError, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// One built-in verdict: a named statistic compared against a requirement.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub observed: String,
    pub requirement: String,
}

impl Check {
    pub fn new(
        name: impl Into<String>,
        passed: bool,
        observed: impl Into<String>,
        requirement: impl Into<String>,
    ) -> Self {
        Check {
            name: name.into(),
            passed,
            observed: observed.into(),
            requirement: requirement.into(),
        }
    }
}

/// What an experiment hands back to the runner: aggregate statistics as JSON,
/// built-in check verdicts, CSV bodies to persist, and collected warnings.
pub struct ExperimentOutput {
    pub aggregate: serde_json::Value,
    pub checks: Vec<Check>,
    /// `(file suffix, CSV body including header row)`.
    pub csv: Vec<(String, String)>,
    pub warnings: Vec<String>,
}

/// Run metadata that does not affect results.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunMetadata {
    pub master_seed: u64,
    pub worker_count: usize,
    pub warnings: Vec<String>,
    pub runtime_seconds: f64,
    pub timestamp_unix: u64,
}

/// The persisted outcome of one experiment run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ResultRecord {
    pub config_hash: String,
    pub experiment: String,
    pub aggregate: serde_json::Value,
    pub checks: Vec<Check>,
    pub metadata: RunMetadata,
    /// Files written next to the record (per-replica CSV outputs).
    pub outputs: Vec<String>,
}

impl ResultRecord {
    pub fn all_checks_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

/// Map replica indices through `job` on a pool of `worker_count` threads,
/// returning results in replica order (deterministic merge).
pub fn parallel_map<T: Send>(
    worker_count: usize,
    replicas: usize,
    job: impl Fn(usize) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    if worker_count <= 1 {
        return (0..replicas).map(job).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(worker_count)
        .build()
        .map_err(|e| LabError::Config(format!("cannot build worker pool: {e}")))?;
    pool.install(|| {
        use rayon::prelude::*;
        (0..replicas).into_par_iter().map(&job).collect()
    })
}

/// Format one CSV row; floats use the shortest round-trip representation,
/// which is deterministic across runs and worker counts.
pub fn csv_row(fields: &[String]) -> String {
    let mut line = fields.join(",");
    line.push('\n');
    line
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Execute the experiment named by `cfg`, persist its outputs under
/// `cfg.output_dir`, and return the record. Files are named by experiment and
/// config hash, so identical configs overwrite their previous results.
pub fn execute(cfg: &ResolvedConfig) -> Result<ResultRecord> {
    let started = std::time::Instant::now();
    let out = crate::experiments::run(cfg)?;
    validate_finite(&out.aggregate)?;

    let dir = PathBuf::from(&cfg.output_dir);
    std::fs::create_dir_all(&dir)
        .map_err(|e| LabError::Config(format!("cannot create {}: {e}", dir.display())))?;

    let hash = cfg.hash();
    let stem = format!("{}-{}", cfg.experiment.name(), hash);
    let mut outputs = Vec::new();
    for (suffix, body) in &out.csv {
        let name = format!("{stem}-{suffix}.csv");
        std::fs::write(dir.join(&name), body)?;
        outputs.push(name);
    }

    let mut warnings = out.warnings;
    warnings.sort();
    warnings.dedup();

    let record = ResultRecord {
        config_hash: hash,
        experiment: cfg.experiment.name().to_string(),
        aggregate: out.aggregate,
        checks: out.checks,
        metadata: RunMetadata {
            master_seed: cfg.master_seed,
            worker_count: cfg.worker_count,
            warnings,
            runtime_seconds: (started.elapsed().as_millis() as f64) / 1000.0,
            timestamp_unix: std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        },
        outputs,
    };
    let json = serde_json::to_string_pretty(&record)
        .map_err(|e| LabError::Numerical(format!("cannot serialize record: {e}")))?;
    std::fs::write(dir.join(format!("{stem}.json")), json + "\n")?;
    Ok(record)
}

/// Reject aggregates containing non-finite numbers (serde_json encodes NaN
/// and infinities as null, so nulls are rejected too).
fn validate_finite(v: &serde_json::Value) -> Result<()> {
    match v {
        serde_json::Value::Null => Err(LabError::Numerical(
            "aggregate contains a null (NaN or infinity)".to_string(),
        )),
        serde_json::Value::Number(n) => {
            if n.as_f64().map(|x| x.is_finite()).unwrap_or(true) {
                Ok(())
            } else {
                Err(LabError::Numerical("aggregate contains a non-finite number".to_string()))
            }
        }
        serde_json::Value::Array(items) => items.iter().try_for_each(validate_finite),
        serde_json::Value::Object(map) => map.values().try_for_each(validate_finite),
        _ => Ok(()),
    }
}

/// Load every result record in a directory, sorted by file name.
pub fn load_records(dir: &Path) -> Result<Vec<ResultRecord>> {
    let mut names: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| LabError::Config(format!("cannot read {}: {e}", dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().map(|e| e == "json").unwrap_or(false))
        .collect();
    names.sort();
    let mut records = Vec::new();
    for path in names {
        let text = std::fs::read_to_string(&path)?;
        match serde_json::from_str::<ResultRecord>(&text) {
            Ok(r) => records.push(r),
            Err(_) => continue, // unrelated JSON files are skipped
        }
    }
    if records.is_empty() {
        return Err(LabError::Config(format!(
            "no result records found in {}",
            dir.display()
        )));
    }
    Ok(records)
}
