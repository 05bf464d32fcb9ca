//! Fixtures shared by the criterion benches in `benches/`.

use lerw_core::geometry::{BallDomain, LatticePoint};
use lerw_core::walk::WalkScratch;
use lerw_core::{lerw_sample, SeedSpec};

/// Simple random walk from the origin stopped on leaving the ball of
/// radius `radius`.
pub fn exit_walk(radius: f64, seed: u64) -> Vec<LatticePoint> {
    let mut w = WalkScratch::default();
    w.srw_until_exit(&BallDomain::new(radius), LatticePoint::ORIGIN, &mut SeedSpec::new(seed, 0).rng());
    w.points
}

/// Physical coordinates of one LERW sample on the unit ball of mesh `1/m`.
pub fn lerw_points(m: f64, seed: u64) -> Vec<[f64; 3]> {
    lerw_sample(&BallDomain::unit_ball(m), SeedSpec::new(seed, 0)).points.iter().map(|p| p.to_physical(m)).collect()
}
