//! Export of single sampled paths in the binary path format.

use std::path::Path;

use lerw_core::pathio::{decode_path, encode_path};
use lerw_core::{ilerw_sample, lerw_sample, BallDomain, LatticePoint, SeedSpec};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum PathKind {
    /// Simple random walk from the origin stopped on leaving the ball.
    Srw,
    /// Its loop-erasure.
    Lerw,
    /// Truncated infinite loop-erased walk.
    Ilerw,
}

/// Samples trial `trial` of experiment `seed` and writes it to `output`.
pub fn dump_path(kind: PathKind, m: f64, seed: u64, trial: u64, truncation: f64, output: &Path) -> CliResult<usize> {
    let spec = SeedSpec::new(seed, trial);
    let (points, erased) = match kind {
        PathKind::Srw => {
            let walk = lerw_core::walk::srw_until_exit(&BallDomain::unit_ball(m), LatticePoint::ORIGIN, spec)
                .map_err(|e| CliError::Analysis(e.to_string()))?;
            (walk.points, false)
        }
        PathKind::Lerw => (lerw_sample(&BallDomain::unit_ball(m), spec).points, true),
        PathKind::Ilerw => {
            if truncation < 2.0 {
                return Err(CliError::Manifest("truncation must be at least 2".into()));
            }
            (ilerw_sample(m, truncation, spec).points, true)
        }
    };
    let bytes = encode_path(&points, m, erased).map_err(|e| CliError::Analysis(e.to_string()))?;
    std::fs::write(output, bytes)?;
    Ok(points.len())
}

/// Decodes a path file into `x,y,z` lines preceded by a comment header.
pub fn decode_to_text(input: &Path) -> CliResult<String> {
    let bytes = std::fs::read(input)?;
    let p = decode_path(&bytes).map_err(|e| CliError::Analysis(e.to_string()))?;
    let mut out = format!("# mesh={} loop_erased={} steps={}\nx,y,z\n", p.mesh, p.loop_erased, p.points.len().saturating_sub(1));
    for q in &p.points {
        out.push_str(&format!("{},{},{}\n", q.x, q.y, q.z));
    }
    Ok(out)
}
