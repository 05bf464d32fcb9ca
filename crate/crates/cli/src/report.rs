//! Post-processing of result records into fits and ratio tests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use lerw_core::scaling::{asymptotic_constant_fit, fit_power_law_with, funceq_ratios, AsymptoticFit, AsymptoticMode, PowerLawFit, RatioTestReport, BOOTSTRAP_RESAMPLES};
use lerw_core::Estimate;

use crate::error::{CliError, CliResult};
use crate::records::{load_records, ResultRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerLawSpec {
    pub name: String,
    pub estimator: String,
    /// Parameter holding the regression variable.
    #[serde(default = "default_axis")]
    pub axis: String,
    /// Values of `axis` that must be present.
    #[serde(default)]
    pub scales: Vec<f64>,
    #[serde(default)]
    pub filter: BTreeMap<String, Value>,
    #[serde(default)]
    pub manifest_hash: Option<String>,
    /// Exponent whose membership in the fitted interval is reported.
    #[serde(default)]
    pub expected: Option<f64>,
    #[serde(default)]
    pub seed: u64,
}

fn default_axis() -> String {
    "m".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FuncEqSpec {
    pub name: String,
    #[serde(default = "default_one_point")]
    pub estimator: String,
    pub n: Vec<f64>,
    pub r: Vec<f64>,
    #[serde(default)]
    pub filter: BTreeMap<String, Value>,
    #[serde(default)]
    pub manifest_hash: Option<String>,
}

fn default_one_point() -> String {
    "one_point".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeSpec {
    Origin,
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsymptoticSpec {
    pub name: String,
    #[serde(default = "default_one_point")]
    pub estimator: String,
    pub m: f64,
    pub mode: ModeSpec,
    #[serde(default)]
    pub beta: Option<f64>,
    #[serde(default)]
    pub manifest_hash: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisSpec {
    #[serde(default)]
    pub power_law: Vec<PowerLawSpec>,
    #[serde(default)]
    pub funceq: Vec<FuncEqSpec>,
    #[serde(default)]
    pub asymptotic: Vec<AsymptoticSpec>,
}

impl AnalysisSpec {
    pub fn from_path(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Manifest(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Manifest(format!("{}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawResult {
    pub name: String,
    pub points: Vec<(f64, Estimate)>,
    pub fit: PowerLawFit,
    pub expected: Option<f64>,
    pub expected_in_ci: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuncEqResult {
    pub name: String,
    pub report: RatioTestReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticResult {
    pub name: String,
    pub beta: f64,
    pub fit: AsymptoticFit,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Report {
    pub power_law: Vec<PowerLawResult>,
    pub funceq: Vec<FuncEqResult>,
    pub asymptotic: Vec<AsymptoticResult>,
}

fn values_match(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => x.as_f64() == y.as_f64(),
        (Value::Array(x), Value::Array(y)) => x.len() == y.len() && x.iter().zip(y).all(|(a, b)| values_match(a, b)),
        _ => a == b,
    }
}

fn select<'a>(
    records: &'a [ResultRecord],
    estimator: &str,
    filter: &BTreeMap<String, Value>,
    hash: &Option<String>,
) -> Vec<&'a ResultRecord> {
    records
        .iter()
        .filter(|r| r.estimator == estimator)
        .filter(|r| hash.as_ref().is_none_or(|h| &r.manifest_hash == h))
        .filter(|r| filter.iter().all(|(k, v)| r.params.get(k).is_some_and(|p| values_match(p, v))))
        .collect()
}

fn same_scale(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

/// Groups records by the value of `axis`, rejecting ambiguous matches.
fn by_axis(name: &str, recs: &[&ResultRecord], axis: &str) -> CliResult<Vec<(f64, Estimate)>> {
    let mut pts: Vec<(f64, Estimate)> = Vec::new();
    for r in recs {
        let Some(x) = r.params.get(axis).and_then(Value::as_f64) else { continue };
        if pts.iter().any(|(y, _)| same_scale(x, *y)) {
            return Err(CliError::Analysis(format!(
                "{name}: several records match {axis} = {x}; add a filter or manifest_hash"
            )));
        }
        pts.push((x, r.estimate()));
    }
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(pts)
}

fn fit_error(name: &str, e: lerw_core::Error) -> CliError {
    CliError::Analysis(format!("{name}: {e}"))
}

pub fn analyze(records: &[ResultRecord], spec: &AnalysisSpec, default_beta: Option<f64>) -> CliResult<Report> {
    let mut gaps = Vec::new();
    let mut report = Report::default();

    for pl in &spec.power_law {
        let recs = select(records, &pl.estimator, &pl.filter, &pl.manifest_hash);
        let pts = by_axis(&pl.name, &recs, &pl.axis)?;
        let missing: Vec<f64> = pl.scales.iter().copied().filter(|s| !pts.iter().any(|(x, _)| same_scale(*x, *s))).collect();
        if !missing.is_empty() || pts.is_empty() {
            gaps.push(format!("power_law {}: {} {} at {}={missing:?}", pl.name, pl.estimator, if pts.is_empty() { "has no records" } else { "missing" }, pl.axis));
            continue;
        }
        let fit = fit_power_law_with(&pts, BOOTSTRAP_RESAMPLES, pl.seed).map_err(|e| fit_error(&pl.name, e))?;
        let expected_in_ci = pl.expected.map(|e| fit.ci_contains(e));
        report.power_law.push(PowerLawResult { name: pl.name.clone(), points: pts, fit, expected: pl.expected, expected_in_ci });
    }

    for fe in &spec.funceq {
        let recs = select(records, &fe.estimator, &fe.filter, &fe.manifest_hash);
        let pts = by_axis(&fe.name, &recs, "m")?;
        let mut missing = Vec::new();
        let result = funceq_ratios(&fe.n, &fe.r, |t| {
            let m = t.exp2();
            match pts.iter().find(|(x, _)| same_scale(*x, m)) {
                Some((_, e)) => Ok(e.clone()),
                None => {
                    missing.push(m);
                    Ok(Estimate::exact(1.0, 0, 0, "placeholder"))
                }
            }
        });
        if !missing.is_empty() {
            gaps.push(format!("funceq {}: {} missing at m={missing:?}", fe.name, fe.estimator));
            continue;
        }
        let rep = result.map_err(|e| fit_error(&fe.name, e))?;
        report.funceq.push(FuncEqResult { name: fe.name.clone(), report: rep });
    }

    for asy in &spec.asymptotic {
        let beta = asy.beta.or(default_beta).ok_or_else(|| {
            CliError::Manifest(format!("asymptotic {}: beta not given and no calibration found", asy.name))
        })?;
        let recs = select(records, &asy.estimator, &BTreeMap::new(), &asy.manifest_hash);
        let mut g: Vec<([f64; 3], Estimate)> = Vec::new();
        for r in recs.iter().filter(|r| r.scale().is_some_and(|m| same_scale(m, asy.m))) {
            let Some(x) = r.params.get("x").and_then(|v| serde_json::from_value::<[f64; 3]>(v.clone()).ok()) else { continue };
            let f = asy.m.powf(3.0 - beta);
            let mut e = r.estimate();
            e.mean *= f;
            e.stderr *= f;
            g.push((x, e));
        }
        if g.len() < 3 {
            gaps.push(format!("asymptotic {}: {} has {} points at m={} (need 3)", asy.name, asy.estimator, g.len(), asy.m));
            continue;
        }
        let mode = match asy.mode {
            ModeSpec::Origin => AsymptoticMode::Origin,
            ModeSpec::Boundary => AsymptoticMode::Boundary,
        };
        let fit = asymptotic_constant_fit(&g, beta, mode).map_err(|e| fit_error(&asy.name, e))?;
        report.asymptotic.push(AsymptoticResult { name: asy.name.clone(), beta, fit });
    }

    if !gaps.is_empty() {
        return Err(CliError::MissingData(gaps));
    }
    Ok(report)
}

/// Writes `report.json` and one `<name>.csv` per power law into `dir`.
pub fn write_report(dir: &Path, report: &Report) -> CliResult<Vec<PathBuf>> {
    let mut written = Vec::new();
    let path = dir.join("report.json");
    std::fs::write(&path, serde_json::to_string_pretty(report).expect("report serializes") + "\n")?;
    written.push(path);
    for pl in &report.power_law {
        let mut csv = String::from("scale,mean,stderr,fit\n");
        for (x, e) in &pl.points {
            csv.push_str(&format!("{x},{},{},{}\n", e.mean, e.stderr, pl.fit.predict(*x)));
        }
        let path = dir.join(format!("{}.csv", pl.name));
        std::fs::write(&path, csv)?;
        written.push(path);
    }
    Ok(written)
}

/// Loads the records under `results` and analyzes them.
pub fn report_dir(results: &Path, spec: &AnalysisSpec, default_beta: Option<f64>) -> CliResult<Report> {
    let records = load_records(results)?;
    analyze(&records, spec, default_beta)
}
