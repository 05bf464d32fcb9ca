//! On-disk result records.
//!
//! `records.jsonl` holds one JSON object per completed cell and contains no
//! wall-clock data, so it is a pure function of the manifest. Timings go to
//! `timings.jsonl`. Both files are append-only.

use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;

use lerw_core::Estimate;

use crate::error::CliResult;

pub const RECORDS_FILE: &str = "records.jsonl";
pub const TIMINGS_FILE: &str = "timings.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Non-finite values are stored as `null`.
mod nullable {
    use super::*;

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() { s.serialize_f64(*v) } else { s.serialize_none() }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub manifest_hash: String,
    pub cell_key: String,
    pub estimator: String,
    pub descriptor: String,
    pub params: BTreeMap<String, Value>,
    #[serde(with = "nullable")]
    pub mean: f64,
    #[serde(with = "nullable")]
    pub stderr: f64,
    pub n_trials: u64,
    /// Experiment seed from the manifest.
    pub seed: u64,
    /// Seed of the cell's own streams, derived from `seed` and `cell_key`.
    pub cell_seed: u64,
    pub code_version: String,
}

impl ResultRecord {
    pub fn estimate(&self) -> Estimate {
        Estimate {
            mean: self.mean,
            stderr: self.stderr,
            n_trials: self.n_trials,
            experiment_seed: self.cell_seed,
            descriptor: self.descriptor.clone(),
        }
    }

    pub fn scale(&self) -> Option<f64> {
        self.params.get("m").and_then(Value::as_f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimingRecord {
    pub manifest_hash: String,
    pub cell_key: String,
    pub wall_time_s: f64,
    pub started: String,
    pub finished: String,
}

/// Reads all complete records; a torn final line is ignored.
pub fn load_records(dir: &Path) -> CliResult<Vec<ResultRecord>> {
    let path = dir.join(RECORDS_FILE);
    if !path.exists() {
        return Ok(Vec::new());
    }
    let mut out = Vec::new();
    for (i, line) in BufReader::new(File::open(&path)?).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(r) => out.push(r),
            Err(e) => eprintln!("warning: skipping unreadable line {} of {}: {e}", i + 1, path.display()),
        }
    }
    Ok(out)
}

/// Drops a partially written last line left by an interrupted run.
fn repair_tail(file: &mut File) -> std::io::Result<()> {
    let len = file.seek(SeekFrom::End(0))?;
    if len == 0 {
        return Ok(());
    }
    let mut contents = Vec::with_capacity(len as usize);
    file.seek(SeekFrom::Start(0))?;
    file.read_to_end(&mut contents)?;
    if contents.last() != Some(&b'\n') {
        let keep = contents.iter().rposition(|b| *b == b'\n').map_or(0, |i| i + 1);
        file.set_len(keep as u64)?;
    }
    file.seek(SeekFrom::End(0))?;
    Ok(())
}

/// Append-only JSON Lines writer that syncs after every line.
pub struct JsonlAppender {
    file: File,
}

impl JsonlAppender {
    pub fn open(path: &Path) -> CliResult<Self> {
        let mut file = OpenOptions::new().create(true).read(true).append(true).open(path)?;
        repair_tail(&mut file)?;
        Ok(JsonlAppender { file })
    }

    pub fn append<T: Serialize>(&mut self, value: &T) -> CliResult<()> {
        let mut line = serde_json::to_vec(value).expect("record serializes");
        line.push(b'\n');
        self.file.write_all(&line)?;
        self.file.sync_data()?;
        Ok(())
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) { format!("\"{}\"", s.replace('"', "\"\"")) } else { s.to_string() }
}

/// `cell_key,estimator,m,mean,stderr,n_trials` for the given records, sorted by key.
pub fn write_summary(path: &Path, records: &[&ResultRecord]) -> CliResult<()> {
    let mut rows: Vec<&&ResultRecord> = records.iter().collect();
    rows.sort_by(|a, b| a.cell_key.cmp(&b.cell_key));
    let mut out = String::from("cell_key,estimator,m,mean,stderr,n_trials\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            csv_field(&r.cell_key),
            r.estimator,
            r.scale().map_or(String::new(), |m| m.to_string()),
            r.mean,
            r.stderr,
            r.n_trials
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}
