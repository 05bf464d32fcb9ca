//! The growth-exponent calibration file consumed by β-dependent estimators.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scaling::PowerLawFit;

/// Lower (exclusive) and upper (inclusive) bounds on β.
pub const BETA_BOUNDS: (f64, f64) = (1.0, 5.0 / 3.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub beta: f64,
    pub ci: (f64, f64),
    pub manifest_hash: String,
    pub date: String,
}

impl Calibration {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Precondition(format!("reading calibration {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| Error::Precondition(format!("parsing calibration {}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("calibration serializes");
        std::fs::write(path, text + "\n").map_err(|e| Error::Precondition(format!("writing {}: {e}", path.display())))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Accepted,
    /// Point estimate inside the bounds but the interval is not.
    AcceptedWithWarning(String),
    Rejected(String),
}

pub fn in_bounds(beta: f64) -> bool {
    beta > BETA_BOUNDS.0 && beta <= BETA_BOUNDS.1
}

/// A fit is rejected only when its point estimate leaves `(1, 5/3]`.
pub fn check_bounds(fit: &PowerLawFit) -> Verdict {
    let (lo, hi) = fit.exponent_ci;
    if !in_bounds(fit.exponent) {
        Verdict::Rejected(format!("beta = {} outside (1, 5/3]", fit.exponent))
    } else if !(in_bounds(lo) && in_bounds(hi)) {
        Verdict::AcceptedWithWarning(format!("95% interval ({lo}, {hi}) is not contained in (1, 5/3]"))
    } else {
        Verdict::Accepted
    }
}
