//! Discretized Minkowski content of sampled paths.
//!
//! `J_s(V) = 2^{(3-β)s} · vol{y ∈ V : dist(y, η) ≤ 2^{-s}}`, with the volume
//! computed by a midpoint rule on a grid of pitch `2^{-s} / subdivisions`.
//! Path points are hashed into cells of side `2^{-s}`, so each grid point is
//! only compared with points in its own and the 26 surrounding cells.

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{nearest_lattice_point, AxisBox, DyadicBox, LatticePoint, REFERENCE_POINT};

/// Grid points per neighborhood radius along each axis.
pub const DEFAULT_SUBDIVISIONS: u32 = 8;

type Cell = [i64; 3];

fn cell_of(p: [f64; 3], side: f64) -> Cell {
    [(p[0] / side).floor() as i64, (p[1] / side).floor() as i64, (p[2] / side).floor() as i64]
}

/// Per-axis grid index range `[lo, hi)` whose midpoints fall in cell `c`.
fn grid_range(c: i64, side: f64, lower: f64, pitch: f64, n: i64) -> (i64, i64) {
    let first = |c: i64| (((c as f64) * side - lower) / pitch - 0.5).ceil() as i64;
    (first(c).clamp(0, n), first(c + 1).clamp(0, n))
}

/// Volume of `{y ∈ region : dist(y, points) ≤ r}` by the midpoint rule on a
/// grid whose pitch is at most `pitch`.
pub fn neighborhood_volume(points: &[[f64; 3]], region: &AxisBox, r: f64, pitch: f64) -> f64 {
    let near: Vec<[f64; 3]> = points.iter().copied().filter(|p| region.distance_to(*p) <= r).collect();
    if near.is_empty() {
        return 0.0;
    }
    let mut hash: FxHashMap<Cell, Vec<[f64; 3]>> = FxHashMap::default();
    for p in &near {
        hash.entry(cell_of(*p, r)).or_default().push(*p);
    }

    let mut n = [0i64; 3];
    let mut step = [0f64; 3];
    for i in 0..3 {
        let side = region.upper[i] - region.lower[i];
        n[i] = ((side / pitch).ceil() as i64).max(1);
        step[i] = side / n[i] as f64;
    }
    let lo_cell = cell_of(region.lower, r);
    let hi_cell = cell_of(region.upper, r);
    let r2 = r * r;

    let mut candidates: Vec<[f64; 3]> = Vec::new();
    let mut covered: u64 = 0;
    for cx in lo_cell[0]..=hi_cell[0] {
        let (x0, x1) = grid_range(cx, r, region.lower[0], step[0], n[0]);
        if x0 >= x1 {
            continue;
        }
        for cy in lo_cell[1]..=hi_cell[1] {
            let (y0, y1) = grid_range(cy, r, region.lower[1], step[1], n[1]);
            if y0 >= y1 {
                continue;
            }
            for cz in lo_cell[2]..=hi_cell[2] {
                let (z0, z1) = grid_range(cz, r, region.lower[2], step[2], n[2]);
                if z0 >= z1 {
                    continue;
                }
                candidates.clear();
                for dx in -1..=1 {
                    for dy in -1..=1 {
                        for dz in -1..=1 {
                            if let Some(v) = hash.get(&[cx + dx, cy + dy, cz + dz]) {
                                candidates.extend_from_slice(v);
                            }
                        }
                    }
                }
                if candidates.is_empty() {
                    continue;
                }
                for jx in x0..x1 {
                    let qx = region.lower[0] + (jx as f64 + 0.5) * step[0];
                    for jy in y0..y1 {
                        let qy = region.lower[1] + (jy as f64 + 0.5) * step[1];
                        for jz in z0..z1 {
                            let qz = region.lower[2] + (jz as f64 + 0.5) * step[2];
                            let hit = candidates.iter().any(|c| {
                                let d = [c[0] - qx, c[1] - qy, c[2] - qz];
                                d[0] * d[0] + d[1] * d[1] + d[2] * d[2] <= r2
                            });
                            covered += hit as u64;
                        }
                    }
                }
            }
        }
    }
    covered as f64 * step[0] * step[1] * step[2]
}

fn physical(path: &[LatticePoint], m: f64) -> Vec<[f64; 3]> {
    path.iter().map(|p| p.to_physical(m)).collect()
}

fn check_resolution(m: f64, s: u32) -> Result<f64> {
    let r = (-(s as f64)).exp2();
    if r < 4.0 / m {
        return Err(Error::MeshTooCoarse(format!("2^-{s} = {r} is below 4/m = {}", 4.0 / m)));
    }
    Ok(r)
}

/// One evaluation of `J_s(V)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinkowskiSample {
    pub s: u32,
    pub v: DyadicBox,
    pub value: f64,
    pub beta: f64,
}

/// `J_s(V)` for a path of mesh `1/m` and an admissible dyadic box `V`.
pub fn minkowski_content(
    path: &[LatticePoint],
    m: f64,
    v: &DyadicBox,
    s: u32,
    beta: f64,
    subdivisions: u32,
) -> Result<MinkowskiSample> {
    let r = check_resolution(m, s)?;
    if !v.is_admissible() {
        return Err(Error::Precondition(format!("box {v:?} is not admissible")));
    }
    let vol = neighborhood_volume(&physical(path, m), &v.as_axis_box(), r, r / subdivisions.max(1) as f64);
    Ok(MinkowskiSample { s, v: *v, value: ((3.0 - beta) * s as f64).exp2() * vol, beta })
}

/// `J_s` over the lattice cell of side `1/m` centered at the site nearest the
/// reference point.
pub fn reference_cell_content(path: &[LatticePoint], m: f64, s: u32, beta: f64, subdivisions: u32) -> Result<f64> {
    let r = check_resolution(m, s)?;
    let cell = AxisBox::cube(nearest_lattice_point(REFERENCE_POINT, m).to_physical(m), 1.0 / m);
    let pitch = (r / subdivisions.max(1) as f64).min(1.0 / (m * subdivisions.max(1) as f64));
    let vol = neighborhood_volume(&physical(path, m), &cell, r, pitch);
    Ok(((3.0 - beta) * s as f64).exp2() * vol)
}
