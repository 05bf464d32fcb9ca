//! Growth-exponent calibration from a length-scaling manifest.

use lerw_core::calibration::{check_bounds, Calibration, Verdict};
use lerw_core::scaling::{beta_from_lengths, PowerLawFit};

use crate::error::{CliError, CliResult};
use crate::manifest::{EstimatorKind, Manifest};
use crate::records::ResultRecord;
use crate::runner::{run, RunOptions, CALIBRATION_FILE};

#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOutcome {
    pub calibration: Calibration,
    pub fit: PowerLawFit,
    pub warning: Option<String>,
}

/// Fits β to length records and applies the bound policy: a point estimate
/// outside `(1, 5/3]` is rejected, an interval reaching outside only warns.
pub fn calibrate_from_records(records: &[ResultRecord], manifest_hash: &str, date: &str) -> CliResult<CalibrationOutcome> {
    let pts: Vec<_> = records
        .iter()
        .filter(|r| r.manifest_hash == manifest_hash && r.estimator == EstimatorKind::Length.name())
        .filter_map(|r| r.scale().map(|m| (m, r.estimate())))
        .collect();
    let fit = beta_from_lengths(&pts).map_err(|e| CliError::Analysis(e.to_string()))?;
    let warning = match check_bounds(&fit) {
        Verdict::Rejected(msg) => return Err(CliError::CalibrationBound(msg)),
        Verdict::AcceptedWithWarning(msg) => Some(msg),
        Verdict::Accepted => None,
    };
    let calibration = Calibration {
        beta: fit.exponent,
        ci: fit.exponent_ci,
        manifest_hash: manifest_hash.to_string(),
        date: date.to_string(),
    };
    Ok(CalibrationOutcome { calibration, fit, warning })
}

/// Runs (or resumes) the manifest, fits β and writes `calibration.json`
/// into the output directory.
pub fn calibrate_beta(manifest: &Manifest, opts: &RunOptions) -> CliResult<CalibrationOutcome> {
    if manifest.estimator != EstimatorKind::Length {
        return Err(CliError::Manifest(format!(
            "calibrate-beta needs estimator \"length\", got \"{}\"",
            manifest.estimator.name()
        )));
    }
    if manifest.grid.scales.len() < 4 {
        return Err(CliError::Manifest(format!("calibrate-beta needs at least 4 scales, got {}", manifest.grid.scales.len())));
    }
    let summary = run(manifest, opts)?;
    let outcome = calibrate_from_records(&summary.records, &summary.manifest_hash, &chrono::Utc::now().to_rfc3339())?;
    outcome
        .calibration
        .save(&opts.out.join(CALIBRATION_FILE))
        .map_err(|e| CliError::Analysis(e.to_string()))?;
    Ok(outcome)
}
