//! Discrete potential theory on ball domains: hitting probabilities, Green's
//! functions and expected exit times of the simple random walk killed on
//! leaving the domain.
//!
//! All three are solutions of `(I - P) u = f` on the domain sites with
//! `u = 0` off the domain, where `P` is the nearest-neighbor averaging
//! operator. The restriction of `I - P` to the domain is symmetric positive
//! definite, so the systems are solved matrix-free with conjugate gradients
//! on the 7-point stencil.

use std::io::{self, Write};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::estimate::{Estimate, MomentsAccumulator};
use crate::geometry::{BallDomain, LatticePoint};
use crate::loop_erasure::LoopEraser;
use crate::rng::SeedSpec;
use crate::trials::run_trials;
use crate::walk::{ConditionedKernel, WalkScratch};

const OUTSIDE: u32 = u32::MAX;

/// Dense enumeration of the sites of a [`BallDomain`] with a precomputed
/// neighbor table.
#[derive(Debug)]
pub struct DomainIndex {
    domain: BallDomain,
    extent: i64,
    side: usize,
    lookup: Vec<u32>,
    sites: Vec<LatticePoint>,
    neighbors: Vec<[u32; 6]>,
}

impl DomainIndex {
    pub fn new(domain: BallDomain) -> Self {
        let extent = domain.extent() + 1;
        let side = (2 * extent + 1) as usize;
        let mut lookup = vec![OUTSIDE; side * side * side];
        let sites = domain.points();
        let c = domain.center;
        let slot = |p: LatticePoint| -> usize {
            let d = p - c;
            (((d.x + extent) as usize * side) + (d.y + extent) as usize) * side + (d.z + extent) as usize
        };
        for (i, p) in sites.iter().enumerate() {
            lookup[slot(*p)] = i as u32;
        }
        let neighbors = sites
            .iter()
            .map(|p| p.neighbors().map(|q| lookup[slot(q)]))
            .collect();
        DomainIndex { domain, extent, side, lookup, sites, neighbors }
    }

    pub fn domain(&self) -> &BallDomain {
        &self.domain
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[LatticePoint] {
        &self.sites
    }

    /// Neighbor indices of site `i` in unit-step order; `None` means off-domain.
    pub fn neighbors(&self, i: usize) -> [Option<usize>; 6] {
        self.neighbors[i].map(|j| if j == OUTSIDE { None } else { Some(j as usize) })
    }

    pub(crate) fn raw_neighbors(&self, i: usize) -> &[u32; 6] {
        &self.neighbors[i]
    }

    #[inline]
    pub fn index(&self, p: LatticePoint) -> Option<usize> {
        let d = p - self.domain.center;
        let e = self.extent;
        if d.x.abs() > e || d.y.abs() > e || d.z.abs() > e {
            return None;
        }
        let s = self.side;
        let k = (((d.x + e) as usize * s) + (d.y + e) as usize) * s + (d.z + e) as usize;
        match self.lookup[k] {
            OUTSIDE => None,
            i => Some(i as usize),
        }
    }
}

/// One real value per domain site; identically zero off the domain.
#[derive(Debug, Clone)]
pub struct ScalarField {
    index: Arc<DomainIndex>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(index: Arc<DomainIndex>, values: Vec<f64>) -> Self {
        assert_eq!(index.len(), values.len());
        ScalarField { index, values }
    }

    pub fn domain(&self) -> &BallDomain {
        self.index.domain()
    }

    pub fn index(&self) -> &Arc<DomainIndex> {
        &self.index
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Field value at `p`, zero off the domain.
    #[inline]
    pub fn value(&self, p: LatticePoint) -> f64 {
        self.index.index(p).map_or(0.0, |i| self.values[i])
    }

    /// `(I - P) u` evaluated at every domain site.
    pub fn apply_generator(&self) -> Vec<f64> {
        apply_generator(&self.index, &self.values, None)
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }

    /// Write `x,y,z,value` rows (lattice units) with a header line.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x,y,z,value")?;
        for (p, v) in self.index.sites().iter().zip(&self.values) {
            writeln!(w, "{},{},{},{:e}", p.x, p.y, p.z, v)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    /// Max-norm residual bound, relative to `max(1, |u|_inf)`.
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tolerance: 1e-12, max_iterations: 1_000_000 }
    }
}

fn apply_generator(index: &DomainIndex, u: &[f64], pinned: Option<usize>) -> Vec<f64> {
    let mut out = vec![0.0; u.len()];
    apply_generator_into(index, u, pinned, &mut out);
    out
}

/// `out = (I - P) u` restricted to the free sites; pinned sites are treated
/// as absent (their row and column are zero).
fn apply_generator_into(index: &DomainIndex, u: &[f64], pinned: Option<usize>, out: &mut [f64]) {
    for i in 0..u.len() {
        if Some(i) == pinned {
            out[i] = 0.0;
            continue;
        }
        let mut acc = 0.0;
        for &j in index.raw_neighbors(i) {
            if j != OUTSIDE && Some(j as usize) != pinned {
                acc += u[j as usize];
            }
        }
        out[i] = u[i] - acc / 6.0;
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Solve `(I - P) u = rhs` on the free sites with conjugate gradients.
/// A pinned site is excluded from the unknowns (its contribution must already
/// be folded into `rhs`) and comes back with value zero.
fn conjugate_gradient(
    index: &DomainIndex,
    rhs: &[f64],
    pinned: Option<usize>,
    opts: SolverOptions,
) -> Result<Vec<f64>> {
    let n = rhs.len();
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    if let Some(p) = pinned {
        r[p] = 0.0;
    }
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    let converged = |x: &[f64], r: &[f64]| max_abs(r) <= opts.tolerance * max_abs(x).max(1.0);
    let mut iterations = 0;
    loop {
        if converged(&x, &r) {
            // confirm against the true residual before accepting
            let mut true_r = apply_generator(index, &x, pinned);
            for i in 0..n {
                true_r[i] = if Some(i) == pinned { 0.0 } else { rhs[i] - true_r[i] };
            }
            if converged(&x, &true_r) {
                return Ok(x);
            }
            r = true_r;
            p.copy_from_slice(&r);
            rr = dot(&r, &r);
        }
        if iterations >= opts.max_iterations {
            return Err(Error::NonConvergence { iterations, residual: max_abs(&r) });
        }
        apply_generator_into(index, &p, pinned, &mut ap);
        let alpha = rr / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_next = dot(&r, &r);
        let beta = rr_next / rr;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
        rr = rr_next;
        iterations += 1;
    }
}

/// `h(y) = P^y(hit target before exiting)`: harmonic off the target,
/// one at the target, zero off the domain.
pub fn hitting_field(domain: &BallDomain, target: LatticePoint) -> Result<ScalarField> {
    hitting_field_with(Arc::new(DomainIndex::new(*domain)), target, SolverOptions::default())
}

pub fn hitting_field_with(
    index: Arc<DomainIndex>,
    target: LatticePoint,
    opts: SolverOptions,
) -> Result<ScalarField> {
    let t = index.index(target).ok_or(Error::TargetOutsideDomain(target.as_array()))?;
    let mut rhs = vec![0.0; index.len()];
    for j in index.neighbors(t).into_iter().flatten() {
        rhs[j] += 1.0 / 6.0;
    }
    let mut u = conjugate_gradient(&index, &rhs, Some(t), opts)?;
    u[t] = 1.0;
    Ok(ScalarField::new(index, u))
}

/// `G(source, y)`: expected number of visits to `y` by the walk from
/// `source` killed on exiting the domain.
pub fn green_function(domain: &BallDomain, source: LatticePoint) -> Result<ScalarField> {
    green_function_with(Arc::new(DomainIndex::new(*domain)), source, SolverOptions::default())
}

pub fn green_function_with(
    index: Arc<DomainIndex>,
    source: LatticePoint,
    opts: SolverOptions,
) -> Result<ScalarField> {
    let s = index.index(source).ok_or(Error::StartOutsideDomain(source.as_array()))?;
    let mut rhs = vec![0.0; index.len()];
    rhs[s] = 1.0;
    let u = conjugate_gradient(&index, &rhs, None, opts)?;
    Ok(ScalarField::new(index, u))
}

/// Field of expected exit times `E^y[T]`, `T` the first step leaving the domain.
pub fn exit_time_field(domain: &BallDomain) -> Result<ScalarField> {
    let index = Arc::new(DomainIndex::new(*domain));
    let rhs = vec![1.0; index.len()];
    let u = conjugate_gradient(&index, &rhs, None, SolverOptions::default())?;
    Ok(ScalarField::new(index, u))
}

pub fn expected_exit_time(domain: &BallDomain, start: LatticePoint) -> Result<f64> {
    if !domain.contains(start) {
        return Err(Error::StartOutsideDomain(start.as_array()));
    }
    Ok(exit_time_field(domain)?.value(start))
}

/// Estimate `P(x ∈ LERW)` through the Green's-function decomposition
/// `G(0, x) · P(LE(X) ∩ Y[1, T] = ∅)`, where `X` is the walk from `x`
/// conditioned to hit the origin before exiting and `Y` an independent walk
/// from `x` killed on exiting.
///
/// `h` must be the hitting field of the origin and `green` the Green's
/// function from the origin, both on `domain`.
pub fn decompose_one_point(
    domain: &BallDomain,
    x: LatticePoint,
    h: &ScalarField,
    green: &ScalarField,
    trials: u64,
    seed: u64,
) -> Result<Estimate> {
    let descriptor = format!("decomposed_one_point x={x} radius={}", domain.radius);
    if !domain.contains(x) {
        return Err(Error::Precondition(format!("{x} is not a domain site")));
    }
    if x == LatticePoint::ORIGIN {
        return Ok(Estimate::exact(1.0, trials, seed, descriptor));
    }
    let kernel = ConditionedKernel::new(h, LatticePoint::ORIGIN)?;
    let g0x = green.value(x);
    let acc = run_trials(trials, seed, |spec: SeedSpec, scratch: &mut (WalkScratch, LoopEraser, Vec<LatticePoint>)| {
        let (walk, eraser, erased) = scratch;
        let mut rng_x = spec.lane(0);
        kernel.sample_into(x, &mut rng_x, &mut walk.points);
        eraser.erase_into(&walk.points, erased);
        eraser.mark(erased);
        let mut rng_y = spec.lane(1);
        walk.srw_until_exit(domain, x, &mut rng_y);
        let avoided = walk.points[1..].iter().all(|p| !eraser.is_marked(*p));
        MomentsAccumulator::indicator(avoided)
    });
    let probability = acc.to_estimate(seed, String::new());
    Ok(Estimate {
        mean: g0x * probability.mean,
        stderr: g0x * probability.stderr,
        n_trials: probability.n_trials,
        experiment_seed: seed,
        descriptor,
    })
}
