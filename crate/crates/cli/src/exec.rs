//! Evaluation of a single grid cell.

use lerw_core::estimate::MomentsAccumulator;
use lerw_core::estimators::{
    decoupling_ratio, estimate_ball_hit, estimate_es, estimate_ilerw_one_point, estimate_length, estimate_one_point,
    estimate_two_point, occupation_measure, Normalization,
};
use lerw_core::minkowski::minkowski_content;
use lerw_core::trials::run_trials;
use lerw_core::{BallDomain, Error, Estimate, LatticePoint, LerwSampler, Result};

use crate::manifest::CellSpec;

/// Runs `trials` trials of the cell with the given seed. With `trials = 0`
/// only the preconditions are checked.
pub fn execute(spec: &CellSpec, trials: u64, seed: u64, beta: Option<f64>) -> Result<Estimate> {
    let need_beta = || beta.ok_or_else(|| Error::Precondition("a growth exponent is required".into()));
    match *spec {
        CellSpec::Length { m } => Ok(estimate_length(m, trials, seed)),
        CellSpec::OnePoint { m, x } => estimate_one_point(x, m, trials, seed),
        CellSpec::BallHit { m, x, r } => estimate_ball_hit(x, r, m, trials, seed),
        CellSpec::TwoPoint { m, z, w, mode } => estimate_two_point(z, w, mode, m, trials, seed),
        CellSpec::Es { m } => estimate_es(m, trials, seed),
        CellSpec::Decoupling { m, shape } => decoupling_ratio(shape, m, trials, seed),
        CellSpec::IlerwOnePoint { m, x, truncation } => estimate_ilerw_one_point(x, m, truncation, trials, seed),
        CellSpec::Minkowski { m, v, s, subdivisions } => {
            let beta = need_beta()?;
            minkowski_content(&[LatticePoint::ORIGIN], m, &v, s, beta, subdivisions)?;
            let domain = BallDomain::unit_ball(m);
            let acc = run_trials(trials, seed, |spec, smp: &mut LerwSampler| {
                let path = smp.sample_lerw(&domain, &mut spec.rng());
                let j = minkowski_content(path, m, &v, s, beta, subdivisions).map_or(0.0, |x| x.value);
                MomentsAccumulator::single(j)
            });
            Ok(acc.to_estimate(seed, format!("minkowski V={v:?} s={s} m={m} beta={beta}")))
        }
        CellSpec::Occupation { m, v } => {
            let beta = need_beta()?;
            if !v.is_admissible() {
                return Err(Error::Precondition(format!("box {v:?} is not admissible")));
            }
            let domain = BallDomain::unit_ball(m);
            let acc = run_trials(trials, seed, |spec, smp: &mut LerwSampler| {
                let path = smp.sample_lerw(&domain, &mut spec.rng());
                let mu = occupation_measure(path, m, v.scale, Normalization::Explicit { beta });
                MomentsAccumulator::single(mu.mass(&v))
            });
            Ok(acc.to_estimate(seed, format!("occupation V={v:?} m={m} beta={beta}")))
        }
    }
}
