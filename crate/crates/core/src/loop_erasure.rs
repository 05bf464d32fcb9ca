//! Chronological loop-erasure and the loop-erased walk samplers built on it.

use rustc_hash::{FxHashMap, FxHashSet};

use crate::geometry::{BallDomain, LatticePoint};
use crate::rng::{SeedSpec, TrialRng};
use crate::walk::{LatticePath, WalkScratch};

/// A nearest-neighbor path without repeated sites.
#[derive(Debug, Clone, PartialEq)]
pub struct SelfAvoidingPath {
    pub points: Vec<LatticePoint>,
    pub mesh: f64,
}

impl SelfAvoidingPath {
    /// Number of steps.
    pub fn len(&self) -> usize {
        self.points.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.points.len() <= 1
    }

    pub fn contains(&self, p: LatticePoint) -> bool {
        self.points.contains(&p)
    }

    pub fn is_self_avoiding(&self) -> bool {
        let set: FxHashSet<_> = self.points.iter().collect();
        set.len() == self.points.len()
    }

    pub fn into_walk(self) -> LatticePath {
        LatticePath::new(self.points, self.mesh)
    }
}

/// Reusable tables for loop erasure and for membership tests against an
/// erased path.
#[derive(Debug, Default)]
pub struct LoopEraser {
    last_visit: FxHashMap<LatticePoint, u32>,
    marked: FxHashSet<LatticePoint>,
}

impl LoopEraser {
    /// Chronological loop-erasure of `walk` into `out`.
    ///
    /// One pass records the last visit time of every site; the erased path
    /// is then `λ(s_0), λ(s_1), …` with `s_0` the last visit to `λ(0)` and
    /// `s_i` the last visit to `λ(s_{i-1} + 1)`.
    pub fn erase_into(&mut self, walk: &[LatticePoint], out: &mut Vec<LatticePoint>) {
        out.clear();
        if walk.is_empty() {
            return;
        }
        self.last_visit.clear();
        for (t, p) in walk.iter().enumerate() {
            self.last_visit.insert(*p, t as u32);
        }
        let end = walk.len() - 1;
        let mut s = self.last_visit[&walk[0]] as usize;
        out.push(walk[s]);
        while s < end {
            s = self.last_visit[&walk[s + 1]] as usize;
            out.push(walk[s]);
        }
    }

    /// Replace the marked set by the sites of `path`.
    pub fn mark(&mut self, path: &[LatticePoint]) {
        self.marked.clear();
        self.marked.extend(path.iter().copied());
    }

    #[inline]
    pub fn is_marked(&self, p: LatticePoint) -> bool {
        self.marked.contains(&p)
    }
}

/// Chronological loop-erasure of a nonempty walk.
pub fn loop_erase(walk: &LatticePath) -> SelfAvoidingPath {
    assert!(!walk.points.is_empty(), "cannot loop-erase an empty walk");
    let mut out = Vec::new();
    LoopEraser::default().erase_into(&walk.points, &mut out);
    SelfAvoidingPath { points: out, mesh: walk.mesh }
}

/// Loop-erasure by the forward stack method: push each new site, and on a
/// revisit pop back to the earlier occurrence.
pub fn loop_erase_stack(walk: &[LatticePoint]) -> Vec<LatticePoint> {
    let mut out: Vec<LatticePoint> = Vec::new();
    let mut position: FxHashMap<LatticePoint, usize> = FxHashMap::default();
    for &p in walk {
        if let Some(&i) = position.get(&p) {
            for q in out.drain(i + 1..) {
                position.remove(&q);
            }
        } else {
            position.insert(p, out.len());
            out.push(p);
        }
    }
    out
}

/// Scratch state for repeated LERW sampling on one worker.
#[derive(Debug, Default)]
pub struct LerwSampler {
    pub walk: WalkScratch,
    pub eraser: LoopEraser,
    pub path: Vec<LatticePoint>,
}

impl LerwSampler {
    /// Loop-erasure of the walk from the domain center stopped on exit.
    pub fn sample_lerw(&mut self, domain: &BallDomain, rng: &mut TrialRng) -> &[LatticePoint] {
        self.walk.srw_until_exit(domain, domain.center, rng);
        self.eraser.erase_into(&self.walk.points, &mut self.path);
        &self.path
    }

    /// Loop-erasure of a walk from the origin stopped at radius `truncation * m`,
    /// cut after its first point of norm `>= m`.
    pub fn sample_ilerw(&mut self, m: f64, truncation: f64, rng: &mut TrialRng) -> &[LatticePoint] {
        self.walk.srw_transient(LatticePoint::ORIGIN, truncation * m, rng);
        self.eraser.erase_into(&self.walk.points, &mut self.path);
        let m2 = m * m;
        if let Some(i) = self.path.iter().position(|p| p.norm_sq() as f64 >= m2) {
            self.path.truncate(i + 1);
        }
        &self.path
    }
}

/// LERW on the domain: loop-erasure of the walk from the center stopped at
/// its first exit. The mesh is taken to be the domain radius.
pub fn lerw_sample(domain: &BallDomain, seed: SeedSpec) -> SelfAvoidingPath {
    let mut s = LerwSampler::default();
    let points = s.sample_lerw(domain, &mut seed.rng()).to_vec();
    SelfAvoidingPath { points, mesh: domain.radius }
}

/// Default truncation factor for the infinite loop-erased walk.
pub const ILERW_TRUNCATION_DEFAULT: f64 = 8.0;

/// Portion of the infinite loop-erased walk up to its first exit of radius
/// `m`, approximated by erasing a walk stopped at radius `truncation * m`.
pub fn ilerw_sample(m: f64, truncation: f64, seed: SeedSpec) -> SelfAvoidingPath {
    assert!(truncation >= 2.0, "truncation factor must be at least 2");
    let mut s = LerwSampler::default();
    let points = s.sample_ilerw(m, truncation, &mut seed.rng()).to_vec();
    SelfAvoidingPath { points, mesh: m }
}
