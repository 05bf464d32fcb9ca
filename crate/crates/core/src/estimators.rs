//! Monte Carlo estimators for hitting probabilities, non-intersection
//! probabilities and occupation measures of the loop-erased walk.
//!
//! Every estimator is a pure function of its arguments: trial `t` of an
//! experiment with seed `s` always sees the stream `SeedSpec(s, t)`.
//! Estimators that report several events evaluate them on the same sampled
//! paths, so nested events give ordered counts trial by trial.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{Estimate, MomentsAccumulator, PairAccumulator};
use crate::geometry::{nearest_lattice_point, norm3, BallDomain, DyadicBox, LatticePoint, REFERENCE_POINT};
use crate::loop_erasure::LerwSampler;
use crate::trials::run_trials;

fn fmt_point(x: [f64; 3]) -> String {
    format!("({},{},{})", x[0], x[1], x[2])
}

/// Minimum over path vertices of the squared lattice distance to `m * x`.
#[inline]
fn min_dist_sq(path: &[LatticePoint], m: f64, x: [f64; 3]) -> f64 {
    let c = [m * x[0], m * x[1], m * x[2]];
    path.iter()
        .map(|p| {
            let d = [p.x as f64 - c[0], p.y as f64 - c[1], p.z as f64 - c[2]];
            d[0] * d[0] + d[1] * d[1] + d[2] * d[2]
        })
        .fold(f64::INFINITY, f64::min)
}

/// Whether the path has a vertex within physical distance `r` of `x`.
#[inline]
pub fn path_hits_ball(path: &[LatticePoint], m: f64, x: [f64; 3], r: f64) -> bool {
    min_dist_sq(path, m, x) <= (m * r) * (m * r)
}

fn check_in_ball(x: [f64; 3], what: &str) -> Result<()> {
    if norm3(x) >= 1.0 {
        return Err(Error::Precondition(format!("{what} {} lies outside the unit ball", fmt_point(x))));
    }
    Ok(())
}

/// `P(x_m ∈ η_m)`: fraction of LERW samples on the unit ball of mesh `1/m`
/// that pass through the lattice point nearest to `x`.
pub fn estimate_one_point(x: [f64; 3], m: f64, trials: u64, seed: u64) -> Result<Estimate> {
    check_in_ball(x, "point")?;
    let domain = BallDomain::unit_ball(m);
    let site = nearest_lattice_point(x, m);
    let acc = run_trials(trials, seed, |spec, s: &mut LerwSampler| {
        let path = s.sample_lerw(&domain, &mut spec.rng());
        MomentsAccumulator::indicator(path.contains(&site))
    });
    Ok(acc.to_estimate(seed, format!("one_point x={} m={m}", fmt_point(x))))
}

/// Mean number of steps of the LERW on the unit ball of mesh `1/m`.
pub fn estimate_length(m: f64, trials: u64, seed: u64) -> Estimate {
    let domain = BallDomain::unit_ball(m);
    let acc = run_trials(trials, seed, |spec, s: &mut LerwSampler| {
        let path = s.sample_lerw(&domain, &mut spec.rng());
        MomentsAccumulator::single((path.len() - 1) as f64)
    });
    acc.to_estimate(seed, format!("length m={m}"))
}

fn check_ball_hit(x: [f64; 3], r: f64, m: f64) -> Result<()> {
    check_in_ball(x, "center")?;
    let d = norm3(x).min(1.0 - norm3(x));
    if !(r > 0.0 && r < d / 2.0) {
        return Err(Error::Precondition(format!(
            "radius {r} must lie in (0, min(|x|, 1-|x|)/2) = (0, {})",
            d / 2.0
        )));
    }
    if m * r < 4.0 {
        return Err(Error::MeshTooCoarse(format!("m*r = {} < 4", m * r)));
    }
    Ok(())
}

/// `P(η_m ∩ B(x, r) ≠ ∅)` with distances measured from path vertices.
pub fn estimate_ball_hit(x: [f64; 3], r: f64, m: f64, trials: u64, seed: u64) -> Result<Estimate> {
    Ok(estimate_ball_hits(x, &[r], m, trials, seed)?.remove(0))
}

/// Ball-hitting probabilities for several radii on shared samples.
pub fn estimate_ball_hits(x: [f64; 3], radii: &[f64], m: f64, trials: u64, seed: u64) -> Result<Vec<Estimate>> {
    for &r in radii {
        check_ball_hit(x, r, m)?;
    }
    let domain = BallDomain::unit_ball(m);
    let mut acc: Vec<MomentsAccumulator> = run_trials(trials, seed, |spec, s: &mut LerwSampler| {
        let path = s.sample_lerw(&domain, &mut spec.rng());
        let d2 = min_dist_sq(path, m, x);
        radii.iter().map(|&r| MomentsAccumulator::indicator(d2 <= (m * r) * (m * r))).collect()
    });
    // zero trials merge to an empty vector
    acc.resize_with(radii.len(), Default::default);
    Ok(acc
        .iter()
        .zip(radii)
        .map(|(a, r)| a.to_estimate(seed, format!("ball_hit x={} r={r} m={m}", fmt_point(x))))
        .collect())
}

/// Event pairs for the two-point function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum TwoPointMode {
    /// Both nearest lattice points lie on the path.
    Points,
    /// The path meets both `B(z, r)` and `B(w, r_prime)`.
    Balls { r: f64, r_prime: f64 },
}

/// Joint estimate of the two-point event and the two marginal events on
/// shared samples: `[joint, marginal z, marginal w]`.
pub fn estimate_two_point_with_marginals(
    z: [f64; 3],
    w: [f64; 3],
    mode: TwoPointMode,
    m: f64,
    trials: u64,
    seed: u64,
) -> Result<[Estimate; 3]> {
    check_in_ball(z, "point")?;
    check_in_ball(w, "point")?;
    let sep = norm3([z[0] - w[0], z[1] - w[1], z[2] - w[2]]);
    let domain = BallDomain::unit_ball(m);
    let (zs, ws) = (nearest_lattice_point(z, m), nearest_lattice_point(w, m));
    match mode {
        TwoPointMode::Points => {
            if zs == ws {
                return Err(Error::Precondition(format!(
                    "{} and {} share the lattice point {zs}",
                    fmt_point(z),
                    fmt_point(w)
                )));
            }
        }
        TwoPointMode::Balls { r, r_prime } => {
            if norm3(z) == 0.0 || norm3(w) == 0.0 {
                return Err(Error::Precondition("ball centers must differ from the origin".into()));
            }
            if !(r > 0.0 && r_prime > 0.0 && r < sep / 2.0 && r_prime < sep / 2.0) {
                return Err(Error::Precondition(format!("radii must lie in (0, |z-w|/2) = (0, {})", sep / 2.0)));
            }
        }
    }
    let mut acc: Vec<MomentsAccumulator> = run_trials(trials, seed, |spec, s: &mut LerwSampler| {
        let path = s.sample_lerw(&domain, &mut spec.rng());
        let (a, b) = match mode {
            TwoPointMode::Points => (path.contains(&zs), path.contains(&ws)),
            TwoPointMode::Balls { r, r_prime } => (path_hits_ball(path, m, z, r), path_hits_ball(path, m, w, r_prime)),
        };
        vec![
            MomentsAccumulator::indicator(a && b),
            MomentsAccumulator::indicator(a),
            MomentsAccumulator::indicator(b),
        ]
    });
    acc.resize_with(3, Default::default);
    let label = format!("z={} w={} mode={mode:?} m={m}", fmt_point(z), fmt_point(w));
    Ok([
        acc[0].to_estimate(seed, format!("two_point {label}")),
        acc[1].to_estimate(seed, format!("two_point_marginal_z {label}")),
        acc[2].to_estimate(seed, format!("two_point_marginal_w {label}")),
    ])
}

/// Two-point hitting probability.
pub fn estimate_two_point(
    z: [f64; 3],
    w: [f64; 3],
    mode: TwoPointMode,
    m: f64,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    let [joint, _, _] = estimate_two_point_with_marginals(z, w, mode, m, trials, seed)?;
    Ok(joint)
}

/// `Es(m)`: probability that the loop-erasure of a walk from the origin run
/// to radius `m` and an independent walk from the origin run to radius `m`
/// do not meet after time zero.
pub fn estimate_es(m_lattice: u64, trials: u64, seed: u64) -> Result<Estimate> {
    if m_lattice < 1 {
        return Err(Error::Precondition("Es radius must be at least 1".into()));
    }
    let domain = BallDomain::new(m_lattice as f64);
    let acc = run_trials(trials, seed, |spec, s: &mut LerwSampler| {
        s.sample_lerw(&domain, &mut spec.lane(0));
        s.eraser.mark(&s.path);
        s.walk.srw_until_exit(&domain, LatticePoint::ORIGIN, &mut spec.lane(1));
        let avoided = s.walk.points[1..].iter().all(|p| !s.eraser.is_marked(*p));
        MomentsAccumulator::indicator(avoided)
    });
    Ok(acc.to_estimate(seed, format!("es m={m_lattice}")))
}

/// `P(x_m ∈ η^∞_m)` for the truncated infinite loop-erased walk.
pub fn estimate_ilerw_one_point(x: [f64; 3], m: f64, truncation: f64, trials: u64, seed: u64) -> Result<Estimate> {
    check_in_ball(x, "point")?;
    if truncation < 2.0 {
        return Err(Error::Precondition("truncation factor must be at least 2".into()));
    }
    let site = nearest_lattice_point(x, m);
    let acc = run_trials(trials, seed, |spec, s: &mut LerwSampler| {
        let path = s.sample_ilerw(m, truncation, &mut spec.rng());
        MomentsAccumulator::indicator(path.contains(&site))
    });
    Ok(acc.to_estimate(seed, format!("ilerw_one_point x={} m={m} K={truncation}", fmt_point(x))))
}

/// Shapes placed at the reference point for the decoupling ratio.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Shape {
    /// The single lattice point nearest to the reference point.
    Point,
    /// Closed ball of the given physical radius.
    Ball(f64),
}

/// `a_m(S) = P(S(x̂) ∩ η_m ≠ ∅) / P(x̂_m ∈ η_m)`, both on the same samples.
pub fn decoupling_ratio(shape: Shape, m: f64, trials: u64, seed: u64) -> Result<Estimate> {
    if let Shape::Ball(r) = shape {
        if !(r > 0.0 && r < 0.25) {
            return Err(Error::Precondition(format!("ball radius {r} must lie in (0, 1/4)")));
        }
    }
    let domain = BallDomain::unit_ball(m);
    let site = nearest_lattice_point(REFERENCE_POINT, m);
    let acc = run_trials(trials, seed, |spec, s: &mut LerwSampler| {
        let path = s.sample_lerw(&domain, &mut spec.rng());
        let point = path.contains(&site);
        let shape_hit = match shape {
            Shape::Point => point,
            Shape::Ball(r) => path_hits_ball(path, m, REFERENCE_POINT, r),
        };
        PairAccumulator::single(shape_hit as u8 as f64, point as u8 as f64)
    });
    Ok(acc.ratio_estimate(seed, format!("decoupling shape={shape:?} m={m}")))
}

/// `P(B(z,r) ∩ η ≠ ∅, B(w,r) ∩ η ≠ ∅) / P(z_m, w_m ∈ η)` on shared samples.
pub fn two_ball_to_two_point_ratio(z: [f64; 3], w: [f64; 3], r: f64, m: f64, trials: u64, seed: u64) -> Result<Estimate> {
    check_in_ball(z, "point")?;
    check_in_ball(w, "point")?;
    let sep = norm3([z[0] - w[0], z[1] - w[1], z[2] - w[2]]);
    if !(r > 0.0 && r < sep / 2.0) {
        return Err(Error::Precondition(format!("radius must lie in (0, |z-w|/2) = (0, {})", sep / 2.0)));
    }
    let domain = BallDomain::unit_ball(m);
    let (zs, ws) = (nearest_lattice_point(z, m), nearest_lattice_point(w, m));
    let acc = run_trials(trials, seed, |spec, s: &mut LerwSampler| {
        let path = s.sample_lerw(&domain, &mut spec.rng());
        let balls = path_hits_ball(path, m, z, r) && path_hits_ball(path, m, w, r);
        let points = path.contains(&zs) && path.contains(&ws);
        PairAccumulator::single(balls as u8 as f64, points as u8 as f64)
    });
    Ok(acc.ratio_estimate(seed, format!("two_ball_over_two_point z={} w={} r={r} m={m}", fmt_point(z), fmt_point(w))))
}

/// How an occupation measure is normalized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Normalization {
    /// Divide counts by the reference scaling factor `f_m = m^3 P(x̂_m ∈ η_m)`.
    Reference { f_m: f64 },
    /// Multiply counts by `m^{-β}`.
    Explicit { beta: f64 },
}

/// `f_m = m^3 P(x̂_m ∈ η_m)` from a one-point estimate at the reference point.
pub fn reference_scaling_factor(one_point_at_reference: &Estimate, m: f64) -> f64 {
    m.powi(3) * one_point_at_reference.mean
}

/// Per-box counts of path sites inside the open unit ball.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupationMeasure {
    pub mesh: f64,
    pub box_scale: u32,
    pub counts: BTreeMap<DyadicBox, u64>,
    pub normalization: Normalization,
}

impl OccupationMeasure {
    /// Mass carried by one path site.
    pub fn unit_mass(&self) -> f64 {
        match self.normalization {
            Normalization::Reference { f_m } => 1.0 / f_m,
            Normalization::Explicit { beta } => self.mesh.powf(-beta),
        }
    }

    pub fn total_count(&self) -> u64 {
        self.counts.values().sum()
    }

    /// Raw site count in `v`, which may be of any scale up to `box_scale`.
    pub fn count_in(&self, v: &DyadicBox) -> u64 {
        if v.scale > self.box_scale {
            return 0;
        }
        let shift = 1i64 << (self.box_scale - v.scale);
        self.counts
            .iter()
            .filter(|(b, _)| (0..3).all(|i| b.index[i].div_euclid(shift) == v.index[i]))
            .map(|(_, c)| *c)
            .sum()
    }

    /// Normalized mass of `v`.
    pub fn mass(&self, v: &DyadicBox) -> f64 {
        self.count_in(v) as f64 * self.unit_mass()
    }
}

/// Occupation measure of `path` (mesh `1/m`) binned in dyadic boxes of scale `box_scale`.
pub fn occupation_measure(path: &[LatticePoint], m: f64, box_scale: u32, normalization: Normalization) -> OccupationMeasure {
    let m2 = m * m;
    let mut counts = BTreeMap::new();
    for p in path.iter().filter(|p| (p.norm_sq() as f64) < m2) {
        *counts.entry(DyadicBox::containing_lattice(*p, m, box_scale)).or_insert(0) += 1;
    }
    OccupationMeasure { mesh: m, box_scale, counts, normalization }
}
