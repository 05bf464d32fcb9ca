//! Experiment manifests: TOML files naming an estimator, a parameter grid
//! and a seed. A manifest and its seed determine every result bit for bit.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use lerw_core::estimators::{Shape, TwoPointMode};
use lerw_core::DyadicBox;

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimatorKind {
    Length,
    OnePoint,
    BallHit,
    TwoPoint,
    Es,
    Decoupling,
    Minkowski,
    Occupation,
    IlerwOnePoint,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Length => "length",
            EstimatorKind::OnePoint => "one_point",
            EstimatorKind::BallHit => "ball_hit",
            EstimatorKind::TwoPoint => "two_point",
            EstimatorKind::Es => "es",
            EstimatorKind::Decoupling => "decoupling",
            EstimatorKind::Minkowski => "minkowski",
            EstimatorKind::Occupation => "occupation",
            EstimatorKind::IlerwOnePoint => "ilerw_one_point",
        }
    }

    pub fn needs_beta(self) -> bool {
        matches!(self, EstimatorKind::Minkowski | EstimatorKind::Occupation)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PairMode {
    #[default]
    Points,
    Balls,
}

/// Parameter axes. Cells are the cartesian product of the axes the
/// estimator uses; unused axes must be empty.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default)]
    pub scales: Vec<f64>,
    #[serde(default)]
    pub points: Vec<[f64; 3]>,
    #[serde(default)]
    pub pairs: Vec<[[f64; 3]; 2]>,
    #[serde(default)]
    pub radii: Vec<f64>,
    /// `[scale, i, j, k]` per dyadic box.
    #[serde(default)]
    pub boxes: Vec<[i64; 4]>,
    /// Minkowski resolution exponents `s`.
    #[serde(default)]
    pub resolutions: Vec<u32>,
    #[serde(default)]
    pub trials: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<PairMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subdivisions: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub schema_version: u32,
    pub name: String,
    pub estimator: EstimatorKind,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibration: Option<PathBuf>,
    #[serde(default)]
    pub grid: Grid,
}

/// What one grid cell computes.
#[derive(Debug, Clone, PartialEq)]
pub enum CellSpec {
    Length { m: f64 },
    OnePoint { m: f64, x: [f64; 3] },
    BallHit { m: f64, x: [f64; 3], r: f64 },
    TwoPoint { m: f64, z: [f64; 3], w: [f64; 3], mode: TwoPointMode },
    Es { m: u64 },
    Decoupling { m: f64, shape: Shape },
    Minkowski { m: f64, v: DyadicBox, s: u32, subdivisions: u32 },
    Occupation { m: f64, v: DyadicBox },
    IlerwOnePoint { m: f64, x: [f64; 3], truncation: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    /// Stable identifier built from the estimator and its parameters.
    pub key: String,
    pub params: BTreeMap<String, Value>,
    pub spec: CellSpec,
}

impl Cell {
    pub fn scale(&self) -> f64 {
        self.params["m"].as_f64().expect("every cell has a scale")
    }
}

impl Manifest {
    pub fn parse(text: &str) -> CliResult<Self> {
        let m: Manifest = toml::from_str(text).map_err(|e| CliError::Manifest(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn from_path(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Manifest(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            CliError::Manifest(msg) => CliError::Manifest(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    fn validate(&self) -> CliResult<()> {
        let bad = |msg: String| Err(CliError::Manifest(msg));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        if self.name.trim().is_empty() {
            return bad("name must not be empty".into());
        }
        let g = &self.grid;
        use EstimatorKind::*;
        let uses = |axis: &str| -> bool {
            match axis {
                "points" => matches!(self.estimator, OnePoint | BallHit | IlerwOnePoint),
                "pairs" => self.estimator == TwoPoint,
                "radii" => matches!(self.estimator, BallHit | Decoupling) || (self.estimator == TwoPoint && g.mode == Some(PairMode::Balls)),
                "boxes" => matches!(self.estimator, Minkowski | Occupation),
                "resolutions" => self.estimator == Minkowski,
                "truncation" => self.estimator == IlerwOnePoint,
                "mode" => self.estimator == TwoPoint,
                "subdivisions" => self.estimator == Minkowski,
                _ => true,
            }
        };
        let present = [
            ("points", !g.points.is_empty()),
            ("pairs", !g.pairs.is_empty()),
            ("radii", !g.radii.is_empty()),
            ("boxes", !g.boxes.is_empty()),
            ("resolutions", !g.resolutions.is_empty()),
            ("truncation", g.truncation.is_some()),
            ("mode", g.mode.is_some()),
            ("subdivisions", g.subdivisions.is_some()),
        ];
        for (axis, set) in present {
            if set && !uses(axis) {
                return bad(format!("grid.{axis} is not used by estimator {}", self.estimator.name()));
            }
        }
        if let Some(i) = g.scales.iter().position(|m| !(m.is_finite() && *m > 0.0)) {
            return bad(format!("grid.scales[{i}] must be positive"));
        }
        if self.estimator == Es {
            if let Some(i) = g.scales.iter().position(|m| m.fract() != 0.0) {
                return bad(format!("grid.scales[{i}] must be an integer radius for estimator es"));
            }
        }
        if let Some(i) = g.boxes.iter().position(|b| b[0] < 0 || b[0] > 30) {
            return bad(format!("grid.boxes[{i}] has scale outside 0..=30"));
        }
        if g.trials == 0 && !self.cells().is_empty() {
            return bad("grid.trials must be at least 1".into());
        }
        if let Some(b) = self.beta {
            if !(b.is_finite() && b > 0.0 && b < 3.0) {
                return bad(format!("beta = {b} must lie in (0, 3)"));
            }
        }
        if self.workers == Some(0) {
            return bad("workers must be at least 1".into());
        }
        Ok(())
    }

    /// SHA-256 of the manifest in canonical JSON form, ignoring the fields
    /// that cannot change results (`workers`, `out`).
    pub fn hash(&self) -> String {
        let mut m = self.clone();
        m.workers = None;
        m.out = None;
        let canonical = serde_json::to_vec(&m).expect("manifest serializes");
        let digest = Sha256::digest(&canonical);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// The grid cells in a fixed order.
    pub fn cells(&self) -> Vec<Cell> {
        let g = &self.grid;
        let est = self.estimator;
        let mut out = Vec::new();
        let mut push = |params: Vec<(&str, Value)>, spec: CellSpec| {
            let params: BTreeMap<String, Value> = params.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
            let key = std::iter::once(est.name().to_string())
                .chain(params.iter().map(|(k, v)| format!("{k}={v}")))
                .collect::<Vec<_>>()
                .join("|");
            out.push(Cell { key, params, spec });
        };
        let boxes: Vec<DyadicBox> = g.boxes.iter().map(|b| DyadicBox::new(b[0] as u32, [b[1], b[2], b[3]])).collect();
        let box_json = |v: &DyadicBox| json!([v.scale, v.index[0], v.index[1], v.index[2]]);
        for &m in &g.scales {
            match est {
                EstimatorKind::Length => push(vec![("m", json!(m))], CellSpec::Length { m }),
                EstimatorKind::Es => push(vec![("m", json!(m))], CellSpec::Es { m: m as u64 }),
                EstimatorKind::OnePoint => {
                    for &x in &g.points {
                        push(vec![("m", json!(m)), ("x", json!(x))], CellSpec::OnePoint { m, x });
                    }
                }
                EstimatorKind::IlerwOnePoint => {
                    let k = g.truncation.unwrap_or(lerw_core::loop_erasure::ILERW_TRUNCATION_DEFAULT);
                    for &x in &g.points {
                        push(
                            vec![("m", json!(m)), ("x", json!(x)), ("truncation", json!(k))],
                            CellSpec::IlerwOnePoint { m, x, truncation: k },
                        );
                    }
                }
                EstimatorKind::BallHit => {
                    for &x in &g.points {
                        for &r in &g.radii {
                            push(vec![("m", json!(m)), ("x", json!(x)), ("r", json!(r))], CellSpec::BallHit { m, x, r });
                        }
                    }
                }
                EstimatorKind::TwoPoint => {
                    for &[z, w] in &g.pairs {
                        match g.mode.unwrap_or_default() {
                            PairMode::Points => push(
                                vec![("m", json!(m)), ("z", json!(z)), ("w", json!(w)), ("mode", json!("points"))],
                                CellSpec::TwoPoint { m, z, w, mode: TwoPointMode::Points },
                            ),
                            PairMode::Balls => {
                                for &r in &g.radii {
                                    push(
                                        vec![("m", json!(m)), ("z", json!(z)), ("w", json!(w)), ("mode", json!("balls")), ("r", json!(r))],
                                        CellSpec::TwoPoint { m, z, w, mode: TwoPointMode::Balls { r, r_prime: r } },
                                    );
                                }
                            }
                        }
                    }
                }
                EstimatorKind::Decoupling => {
                    for &r in &g.radii {
                        let shape = if r == 0.0 { Shape::Point } else { Shape::Ball(r) };
                        push(vec![("m", json!(m)), ("r", json!(r))], CellSpec::Decoupling { m, shape });
                    }
                }
                EstimatorKind::Minkowski => {
                    let subdivisions = g.subdivisions.unwrap_or(lerw_core::minkowski::DEFAULT_SUBDIVISIONS);
                    for v in &boxes {
                        for &s in &g.resolutions {
                            push(
                                vec![("m", json!(m)), ("box", box_json(v)), ("s", json!(s)), ("subdivisions", json!(subdivisions))],
                                CellSpec::Minkowski { m, v: *v, s, subdivisions },
                            );
                        }
                    }
                }
                EstimatorKind::Occupation => {
                    for v in &boxes {
                        push(vec![("m", json!(m)), ("box", box_json(v))], CellSpec::Occupation { m, v: *v });
                    }
                }
            }
        }
        out
    }
}
