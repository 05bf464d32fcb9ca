//! Simple random walks on Z^3: stopped on exiting a ball, stopped on hitting a
//! target, conditioned through a Doob h-transform, and transient walks
//! truncated at a large radius.

use rand::Rng;

use crate::error::{Error, Result};
use crate::geometry::{BallDomain, LatticePoint};
use crate::harmonic::ScalarField;
use crate::rng::{SeedSpec, TrialRng};

/// An ordered nearest-neighbor walk in lattice units.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticePath {
    pub points: Vec<LatticePoint>,
    /// Lattice spacing is `1 / mesh` in physical units.
    pub mesh: f64,
}

impl LatticePath {
    pub fn new(points: Vec<LatticePoint>, mesh: f64) -> Self {
        LatticePath { points, mesh }
    }

    /// Number of steps.
    pub fn len(&self) -> usize {
        self.points.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.points.len() <= 1
    }

    pub fn first(&self) -> LatticePoint {
        self.points[0]
    }

    pub fn last(&self) -> LatticePoint {
        *self.points.last().expect("path has at least one point")
    }

    /// Whether consecutive points are lattice neighbors.
    pub fn is_nearest_neighbor(&self) -> bool {
        self.points.windows(2).all(|w| w[0].is_neighbor(w[1]))
    }
}

/// Reusable point buffer for walk sampling.
#[derive(Debug, Default)]
pub struct WalkScratch {
    pub points: Vec<LatticePoint>,
}

#[inline]
fn random_step<R: Rng>(p: LatticePoint, rng: &mut R) -> LatticePoint {
    p.step(rng.random_range(0..6usize))
}

impl WalkScratch {
    /// Walk from `start` until the first point outside `domain` (inclusive).
    pub fn srw_until_exit<R: Rng>(&mut self, domain: &BallDomain, start: LatticePoint, rng: &mut R) {
        let r2 = domain.radius * domain.radius;
        let c = domain.center;
        self.points.clear();
        let mut p = start;
        self.points.push(p);
        while (((p - c).norm_sq()) as f64) < r2 {
            p = random_step(p, rng);
            self.points.push(p);
        }
    }

    /// Walk from `start` until it reaches `target` or leaves `domain`.
    /// Returns whether the target was reached.
    pub fn srw_until_hit_or_exit<R: Rng>(
        &mut self,
        domain: &BallDomain,
        start: LatticePoint,
        target: LatticePoint,
        rng: &mut R,
    ) -> bool {
        self.points.clear();
        let mut p = start;
        self.points.push(p);
        loop {
            if p == target {
                return true;
            }
            if !domain.contains(p) {
                return false;
            }
            p = random_step(p, rng);
            self.points.push(p);
        }
    }

    /// Unconstrained walk from `start` stopped on first reaching norm `>= stop_radius`.
    pub fn srw_transient<R: Rng>(&mut self, start: LatticePoint, stop_radius: f64, rng: &mut R) {
        self.srw_until_exit(&BallDomain::new(stop_radius), start, rng);
    }
}

fn check_start(domain: &BallDomain, start: LatticePoint) -> Result<()> {
    if domain.contains(start) {
        Ok(())
    } else {
        Err(Error::StartOutsideDomain(start.as_array()))
    }
}

/// Simple random walk from `start` stopped at its first exit of `domain`.
pub fn srw_until_exit(domain: &BallDomain, start: LatticePoint, seed: SeedSpec) -> Result<LatticePath> {
    check_start(domain, start)?;
    let mut s = WalkScratch::default();
    s.srw_until_exit(domain, start, &mut seed.rng());
    Ok(LatticePath::new(s.points, 1.0))
}

/// Simple random walk stopped at the first of hitting `target` or exiting.
pub fn srw_until_hit_or_exit(
    domain: &BallDomain,
    start: LatticePoint,
    target: LatticePoint,
    seed: SeedSpec,
) -> Result<(LatticePath, bool)> {
    check_start(domain, start)?;
    if !domain.contains(target) {
        return Err(Error::TargetOutsideDomain(target.as_array()));
    }
    let mut s = WalkScratch::default();
    let hit = s.srw_until_hit_or_exit(domain, start, target, &mut seed.rng());
    Ok((LatticePath::new(s.points, 1.0), hit))
}

/// Truncation surrogate for the infinite walk: stop on leaving radius `stop_radius`.
pub fn srw_transient(start: LatticePoint, stop_radius: f64, seed: SeedSpec) -> LatticePath {
    assert!(stop_radius > start.norm(), "stop radius must exceed |start|");
    let mut s = WalkScratch::default();
    s.srw_transient(start, stop_radius, &mut seed.rng());
    LatticePath::new(s.points, 1.0)
}

/// Transition tables of the walk conditioned to hit `target` before leaving
/// the domain: from `y` it moves to neighbor `z` with probability
/// `h(z) / (6 h(y))`, where `h` is the hitting field of `target`.
///
/// Rows are normalized by the neighbor sum, which equals `6 h(y)` up to the
/// solver residual.
#[derive(Debug, Clone)]
pub struct ConditionedKernel {
    field: ScalarField,
    target: LatticePoint,
    cdf: Vec<[f64; 6]>,
}

impl ConditionedKernel {
    pub fn new(h: &ScalarField, target: LatticePoint) -> Result<Self> {
        let index = h.index();
        if index.index(target).is_none() {
            return Err(Error::TargetOutsideDomain(target.as_array()));
        }
        let vals = h.values();
        let cdf = (0..index.len())
            .map(|i| {
                let w = index.neighbors(i).map(|j| j.map_or(0.0, |j| vals[j].max(0.0)));
                let total: f64 = w.iter().sum();
                let mut row = [1.0; 6];
                if total > 0.0 {
                    let last = w.iter().rposition(|&v| v > 0.0).unwrap_or(5);
                    let mut acc = 0.0;
                    for k in 0..last {
                        acc += w[k];
                        row[k] = acc / total;
                    }
                }
                row
            })
            .collect();
        Ok(ConditionedKernel { field: h.clone(), target, cdf })
    }

    pub fn target(&self) -> LatticePoint {
        self.target
    }

    /// Conditional transition probability from `y` to neighbor direction `dir`.
    pub fn transition(&self, y: LatticePoint, dir: usize) -> f64 {
        let i = self.field.index().index(y).expect("site in domain");
        let row = &self.cdf[i];
        if dir == 0 { row[0] } else { row[dir] - row[dir - 1] }
    }

    /// Sample a conditioned path from `start` into `out`; it ends at the target.
    pub fn sample_into(&self, start: LatticePoint, rng: &mut TrialRng, out: &mut Vec<LatticePoint>) {
        let index = self.field.index();
        out.clear();
        let mut p = start;
        out.push(p);
        while p != self.target {
            let i = index.index(p).expect("conditioned walk stays in the domain");
            let u: f64 = rng.random();
            let row = &self.cdf[i];
            let dir = row.iter().position(|&c| u < c).unwrap_or(5);
            p = p.step(dir);
            out.push(p);
        }
    }

    pub fn sample(&self, start: LatticePoint, seed: SeedSpec) -> Result<LatticePath> {
        let v = self.field.value(start);
        if v <= 0.0 {
            return Err(Error::UnreachableConditioning(start.as_array()));
        }
        let mut out = Vec::new();
        self.sample_into(start, &mut seed.rng(), &mut out);
        Ok(LatticePath::new(out, 1.0))
    }
}

/// Walk from `start` conditioned (via the h-transform of `h`) to hit `target`
/// before leaving the domain.
pub fn conditioned_walk(
    domain: &BallDomain,
    start: LatticePoint,
    target: LatticePoint,
    h: &ScalarField,
    seed: SeedSpec,
) -> Result<LatticePath> {
    check_start(domain, start)?;
    if h.value(start) <= 0.0 {
        return Err(Error::UnreachableConditioning(start.as_array()));
    }
    ConditionedKernel::new(h, target)?.sample(start, seed)
}
