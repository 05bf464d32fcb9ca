//! Executes a manifest cell by cell with resume.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Instant;

use sha2::{Digest, Sha256};

use lerw_core::calibration::Calibration;
use lerw_core::rng::derive_seed;

use crate::error::{CliError, CliResult};
use crate::exec::execute;
use crate::manifest::{Cell, Manifest};
use crate::records::{
    load_records, write_summary, JsonlAppender, ResultRecord, TimingRecord, CODE_VERSION, RECORDS_FILE, SUMMARY_FILE,
    TIMINGS_FILE,
};

pub const CALIBRATION_FILE: &str = "calibration.json";

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub workers: usize,
    /// Print one line per cell to stderr.
    pub verbose: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub manifest_hash: String,
    pub executed: usize,
    pub skipped: usize,
    pub records: Vec<ResultRecord>,
}

/// Seed of the cell's random streams. Cells draw from distinct keys, so
/// results do not depend on the order or presence of other cells.
pub fn cell_seed(experiment_seed: u64, cell_key: &str) -> u64 {
    let digest = Sha256::digest(cell_key.as_bytes());
    let label = u64::from_le_bytes(digest[..8].try_into().expect("8 bytes"));
    derive_seed(experiment_seed, label)
}

/// β for estimators that need one: the manifest value, else its calibration
/// file, else `calibration.json` in the output directory.
pub fn resolve_beta(manifest: &Manifest, out: &Path) -> CliResult<Option<f64>> {
    if !manifest.estimator.needs_beta() {
        return Ok(manifest.beta);
    }
    if let Some(b) = manifest.beta {
        return Ok(Some(b));
    }
    let path = manifest.calibration.clone().unwrap_or_else(|| out.join(CALIBRATION_FILE));
    if !path.exists() {
        return Err(CliError::Manifest(format!(
            "estimator {} needs beta: set `beta`, `calibration`, or run calibrate-beta into {}",
            manifest.estimator.name(),
            out.display()
        )));
    }
    let cal = Calibration::load(&path).map_err(|e| CliError::Manifest(e.to_string()))?;
    Ok(Some(cal.beta))
}

fn thread_pool(workers: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Analysis(format!("cannot start {workers} workers: {e}")))
}

/// Checks every cell's preconditions before any sampling.
pub fn validate_cells(cells: &[Cell], beta: Option<f64>) -> CliResult<()> {
    for cell in cells {
        execute(&cell.spec, 0, 0, beta).map_err(|source| CliError::Precondition { cell: cell.key.clone(), source })?;
    }
    Ok(())
}

pub fn run(manifest: &Manifest, opts: &RunOptions) -> CliResult<RunSummary> {
    let hash = manifest.hash();
    let beta = resolve_beta(manifest, &opts.out)?;
    let cells = manifest.cells();
    validate_cells(&cells, beta)?;
    std::fs::create_dir_all(&opts.out)?;

    let existing = load_records(&opts.out)?;
    let done: BTreeSet<&str> =
        existing.iter().filter(|r| r.manifest_hash == hash).map(|r| r.cell_key.as_str()).collect();
    let pool = thread_pool(opts.workers)?;
    let mut records = JsonlAppender::open(&opts.out.join(RECORDS_FILE))?;
    let mut timings = JsonlAppender::open(&opts.out.join(TIMINGS_FILE))?;

    let mut fresh = Vec::new();
    let mut skipped = 0;
    for cell in &cells {
        if done.contains(cell.key.as_str()) {
            skipped += 1;
            continue;
        }
        let seed = cell_seed(manifest.seed, &cell.key);
        let started = chrono::Utc::now();
        let clock = Instant::now();
        let est = pool
            .install(|| execute(&cell.spec, manifest.grid.trials, seed, beta))
            .map_err(|source| CliError::Precondition { cell: cell.key.clone(), source })?;
        let wall = clock.elapsed().as_secs_f64();
        let rec = ResultRecord {
            manifest_hash: hash.clone(),
            cell_key: cell.key.clone(),
            estimator: manifest.estimator.name().to_string(),
            descriptor: est.descriptor,
            params: cell.params.clone(),
            mean: est.mean,
            stderr: est.stderr,
            n_trials: est.n_trials,
            seed: manifest.seed,
            cell_seed: seed,
            code_version: CODE_VERSION.to_string(),
        };
        records.append(&rec)?;
        timings.append(&TimingRecord {
            manifest_hash: hash.clone(),
            cell_key: cell.key.clone(),
            wall_time_s: wall,
            started: started.to_rfc3339(),
            finished: chrono::Utc::now().to_rfc3339(),
        })?;
        if opts.verbose {
            eprintln!("{}  mean={} stderr={} ({wall:.1}s)", rec.cell_key, rec.mean, rec.stderr);
        }
        fresh.push(rec);
    }

    let all = load_records(&opts.out)?;
    let keys: BTreeSet<&str> = cells.iter().map(|c| c.key.as_str()).collect();
    let mine: Vec<&ResultRecord> =
        all.iter().filter(|r| r.manifest_hash == hash && keys.contains(r.cell_key.as_str())).collect();
    write_summary(&opts.out.join(SUMMARY_FILE), &mine)?;
    let mut out_records: Vec<ResultRecord> = mine.into_iter().cloned().collect();
    out_records.sort_by(|a, b| a.cell_key.cmp(&b.cell_key));
    Ok(RunSummary { manifest_hash: hash, executed: fresh.len(), skipped, records: out_records })
}
