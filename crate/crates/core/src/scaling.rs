//! Exponent regression, ratio tests and proportionality tests over estimates.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimate::{Estimate, PairAccumulator};
use crate::estimators::estimate_one_point;
use crate::geometry::{nearest_lattice_point, norm3, BallDomain, DyadicBox, REFERENCE_POINT};
use crate::loop_erasure::LerwSampler;
use crate::minkowski::{minkowski_content, reference_cell_content};
use crate::rng::{derive_seed, SeedSpec};
use crate::trials::run_trials;

/// Parametric bootstrap resamples used by [`fit_power_law`].
pub const BOOTSTRAP_RESAMPLES: usize = 10_000;
/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;
/// Default ceiling for the cross-box coefficient of variation.
pub const CV_THRESHOLD: f64 = 0.15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    /// Weighted residual sum of squares.
    pub chi2: f64,
    pub dof: usize,
    /// `(ln y - fit) / rel_se` per point; raw residuals when weights are uniform.
    pub residuals: Vec<f64>,
    pub weighted: bool,
}

/// `mean ≈ amplitude · scale^exponent`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub amplitude: f64,
    /// Percentile bootstrap interval at 95%.
    pub exponent_ci: (f64, f64),
    pub exponent_se: f64,
    pub diagnostics: FitDiagnostics,
}

impl PowerLawFit {
    pub fn predict(&self, scale: f64) -> f64 {
        self.amplitude * scale.powf(self.exponent)
    }

    pub fn ci_contains(&self, value: f64) -> bool {
        self.exponent_ci.0 <= value && value <= self.exponent_ci.1
    }

    pub fn ci_half_width(&self) -> f64 {
        (self.exponent_ci.1 - self.exponent_ci.0) / 2.0
    }
}

/// Weighted least squares line `y = a + b x`; returns `(a, b, var_b)`.
fn wls(x: &[f64], y: &[f64], w: &[f64]) -> (f64, f64, f64) {
    let sw: f64 = w.iter().sum();
    let xm = x.iter().zip(w).map(|(x, w)| x * w).sum::<f64>() / sw;
    let ym = y.iter().zip(w).map(|(y, w)| y * w).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(w).map(|(x, w)| w * (x - xm) * (x - xm)).sum();
    let sxy: f64 = x.iter().zip(y).zip(w).map(|((x, y), w)| w * (x - xm) * (y - ym)).sum();
    let b = sxy / sxx;
    (ym - b * xm, b, 1.0 / sxx)
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Power-law fit with the default bootstrap size and seed 0.
pub fn fit_power_law(points: &[(f64, Estimate)]) -> Result<PowerLawFit> {
    fit_power_law_with(points, BOOTSTRAP_RESAMPLES, 0)
}

/// Weighted least squares of `ln mean` against `ln scale` with weights
/// `1/rel_se²`. The exponent interval comes from a parametric bootstrap that
/// redraws each `ln mean` from a normal law with its relative error as
/// standard deviation. If any point has zero error, weights are uniform.
pub fn fit_power_law_with(points: &[(f64, Estimate)], resamples: usize, seed: u64) -> Result<PowerLawFit> {
    let mut scales: Vec<f64> = points.iter().map(|p| p.0).collect();
    scales.sort_by(f64::total_cmp);
    scales.dedup();
    if scales.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 distinct scales, got {}", scales.len())));
    }
    if let Some((s, e)) = points.iter().find(|(s, e)| e.mean.is_nan() || e.mean <= 0.0 || s.is_nan() || *s <= 0.0) {
        return Err(Error::Fit(format!("nonpositive value at scale {s}: mean {}", e.mean)));
    }
    let x: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let y: Vec<f64> = points.iter().map(|p| p.1.mean.ln()).collect();
    let sd: Vec<f64> = points.iter().map(|p| p.1.relative_stderr()).collect();
    let weighted = sd.iter().all(|s| *s > 0.0 && s.is_finite());
    let w: Vec<f64> = if weighted { sd.iter().map(|s| 1.0 / (s * s)).collect() } else { vec![1.0; x.len()] };
    let (a, b, var_b) = wls(&x, &y, &w);

    let residuals: Vec<f64> = x
        .iter()
        .zip(&y)
        .zip(&sd)
        .map(|((x, y), s)| {
            let r = y - (a + b * x);
            if weighted { r / s } else { r }
        })
        .collect();
    let chi2 = residuals.iter().map(|r| r * r).sum();

    let mut rng = SeedSpec::new(seed, 0).lane(7);
    let mut slopes = Vec::with_capacity(resamples);
    let mut yb = vec![0.0; y.len()];
    for _ in 0..resamples {
        for i in 0..y.len() {
            let z: f64 = StandardNormal.sample(&mut rng);
            yb[i] = y[i] + sd[i] * z;
        }
        slopes.push(wls(&x, &yb, &w).1);
    }
    let exponent_ci = if slopes.is_empty() {
        (b, b)
    } else {
        slopes.sort_by(f64::total_cmp);
        (percentile(&slopes, 0.025), percentile(&slopes, 0.975))
    };
    let exponent_se = if weighted { var_b.sqrt() } else { 0.0 };
    Ok(PowerLawFit {
        exponent: b,
        amplitude: a.exp(),
        exponent_ci,
        exponent_se,
        diagnostics: FitDiagnostics { chi2, dof: x.len() - 2, residuals, weighted },
    })
}

/// Growth-exponent estimate from mean LERW lengths.
pub fn beta_from_lengths(points: &[(f64, Estimate)]) -> Result<PowerLawFit> {
    if points.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 scales, got {}", points.len())));
    }
    fit_power_law(points)
}

/// Samples the mean LERW length at each `m` (independent seeds per scale)
/// and fits its growth exponent.
pub fn estimate_beta(m_list: &[f64], trials: u64, seed: u64) -> Result<PowerLawFit> {
    if m_list.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 scales, got {}", m_list.len())));
    }
    let pts: Vec<(f64, Estimate)> = m_list
        .iter()
        .map(|&m| (m, crate::estimators::estimate_length(m, trials, derive_seed(seed, m.to_bits()))))
        .collect();
    beta_from_lengths(&pts)
}

/// One four-term ratio `z(r+s+n) z(n) / (z(r+n) z(s+n))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub n: f64,
    pub r: f64,
    pub s: f64,
    pub ratio: f64,
    pub stderr: f64,
    pub ci: (f64, f64),
    pub covers_one: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioTestReport {
    pub ratios: Vec<RatioEstimate>,
    /// The values of `z` used, keyed by exponent.
    pub terms: Vec<(f64, Estimate)>,
    pub pass: bool,
}

fn exponent_key(t: f64) -> i64 {
    (t * 1e9).round() as i64
}

/// Ratio test over all `n ∈ n_list` and `r, s ∈ r_grid`, with `z(t)`
/// evaluated once per distinct exponent. The log-ratio error is the
/// first-order delta method over independent terms, after merging terms that
/// share an exponent.
pub fn funceq_ratios<F>(n_list: &[f64], r_grid: &[f64], mut z: F) -> Result<RatioTestReport>
where
    F: FnMut(f64) -> Result<Estimate>,
{
    let mut terms: Vec<(f64, Estimate)> = Vec::new();
    let mut lookup = |t: f64, terms: &mut Vec<(f64, Estimate)>| -> Result<usize> {
        if let Some(i) = terms.iter().position(|(u, _)| exponent_key(*u) == exponent_key(t)) {
            return Ok(i);
        }
        let e = z(t)?;
        if e.mean.is_nan() || e.mean <= 0.0 {
            return Err(Error::Fit(format!("z({t}) = {} is not positive", e.mean)));
        }
        terms.push((t, e));
        Ok(terms.len() - 1)
    };
    let mut ratios = Vec::new();
    for &n in n_list {
        for (i, &r) in r_grid.iter().enumerate() {
            for &s in &r_grid[i..] {
                let idx = [
                    (lookup(n + r + s, &mut terms)?, 1i32),
                    (lookup(n, &mut terms)?, 1),
                    (lookup(n + r, &mut terms)?, -1),
                    (lookup(n + s, &mut terms)?, -1),
                ];
                let mut coeff: Vec<(usize, i32)> = Vec::new();
                for (k, c) in idx {
                    match coeff.iter_mut().find(|(j, _)| *j == k) {
                        Some(e) => e.1 += c,
                        None => coeff.push((k, c)),
                    }
                }
                let log_ratio: f64 = coeff.iter().map(|&(k, c)| c as f64 * terms[k].1.mean.ln()).sum();
                let var: f64 = coeff
                    .iter()
                    .map(|&(k, c)| (c * c) as f64 * terms[k].1.relative_stderr().powi(2))
                    .sum();
                let ratio = log_ratio.exp();
                let stderr = ratio * var.sqrt();
                let ci = (ratio - Z95 * stderr, ratio + Z95 * stderr);
                ratios.push(RatioEstimate { n, r, s, ratio, stderr, ci, covers_one: ci.0 <= 1.0 && 1.0 <= ci.1 });
            }
        }
    }
    let pass = ratios.iter().all(|r| r.covers_one);
    Ok(RatioTestReport { ratios, terms, pass })
}

/// Monte Carlo ratio test with `z(t) = P(x_{2^t} ∈ η_{2^t})`, each term
/// drawn from its own seed.
pub fn funceq_check(x: [f64; 3], n_list: &[f64], r_grid: &[f64], trials: u64, seed: u64) -> Result<RatioTestReport> {
    funceq_ratios(n_list, r_grid, |t| estimate_one_point(x, t.exp2(), trials, derive_seed(seed, t.to_bits())))
}

/// Ratio `E[J_s(V)] / E[μ̄(V)]` for one box and resolution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRatio {
    pub v: DyadicBox,
    pub s: u32,
    pub mean_j: f64,
    pub mean_mu: f64,
    pub ratio: Estimate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinkowskiOccupationReport {
    pub m: f64,
    pub beta: f64,
    pub boxes: Vec<BoxRatio>,
    /// Cross-box coefficient of variation of the ratio, per resolution.
    pub cv: Vec<(u32, f64)>,
    /// Box-averaged ratio per resolution.
    pub pooled: Vec<(u32, Estimate)>,
    /// Whether every pair of pooled ratios agrees within the 95% level.
    pub s_stable: bool,
    /// `E[J_s(x̂ + □)] · m^β / P(x̂ ∈ η)` per resolution.
    pub c0: Vec<(u32, Estimate)>,
    pub cv_threshold: f64,
    pub pass: bool,
}

/// Accumulated `(J, μ̄)` pairs for one box and resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSamples {
    pub v: DyadicBox,
    pub s: u32,
    pub pairs: PairAccumulator,
}

fn coefficient_of_variation(v: &[f64]) -> f64 {
    if v.len() < 2 {
        return 0.0;
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    var.sqrt() / mean.abs()
}

/// Builds the report from accumulated samples. `c0_pairs` holds, per
/// resolution, pairs `(J_s(x̂ + □) · m^β, 1{x̂ ∈ η})`.
pub fn summarize_minkowski_occupation(
    m: f64,
    beta: f64,
    samples: &[BoxSamples],
    c0_pairs: &[(u32, PairAccumulator)],
    seed: u64,
    cv_threshold: f64,
) -> MinkowskiOccupationReport {
    let boxes: Vec<BoxRatio> = samples
        .iter()
        .map(|b| BoxRatio {
            v: b.v,
            s: b.s,
            mean_j: b.pairs.x.mean(),
            mean_mu: b.pairs.y.mean(),
            ratio: b.pairs.ratio_estimate(seed, format!("minkowski_over_occupation V={:?} s={}", b.v, b.s)),
        })
        .collect();
    let mut s_values: Vec<u32> = boxes.iter().map(|b| b.s).collect();
    s_values.sort_unstable();
    s_values.dedup();
    let mut cv = Vec::new();
    let mut pooled = Vec::new();
    for &s in &s_values {
        let rs: Vec<&BoxRatio> = boxes.iter().filter(|b| b.s == s && b.ratio.mean.is_finite()).collect();
        let vals: Vec<f64> = rs.iter().map(|b| b.ratio.mean).collect();
        cv.push((s, coefficient_of_variation(&vals)));
        let k = rs.len().max(1) as f64;
        let mean = vals.iter().sum::<f64>() / k;
        let se = rs.iter().map(|b| b.ratio.stderr.powi(2)).sum::<f64>().sqrt() / k;
        pooled.push((
            s,
            Estimate { mean, stderr: se, n_trials: rs.first().map_or(0, |b| b.ratio.n_trials), experiment_seed: seed, descriptor: format!("pooled_ratio s={s}") },
        ));
    }
    let s_stable = pooled.iter().enumerate().all(|(i, (_, a))| {
        pooled[i + 1..]
            .iter()
            .all(|(_, b)| crate::estimate::consistent(a.mean, a.stderr, b.mean, b.stderr, Z95))
    });
    let c0 = c0_pairs
        .iter()
        .map(|(s, p)| (*s, p.ratio_estimate(seed, format!("c0 s={s} m={m}"))))
        .collect();
    let pass = s_stable && cv.iter().all(|(_, c)| *c <= cv_threshold);
    MinkowskiOccupationReport { m, beta, boxes, cv, pooled, s_stable, c0, cv_threshold, pass }
}

/// Samples LERW paths at mesh `1/m` and compares the Minkowski functional
/// with the explicit occupation measure on each box, all on shared samples.
pub fn minkowski_occupation_test(
    v_list: &[DyadicBox],
    m: f64,
    s_list: &[u32],
    beta: f64,
    trials: u64,
    seed: u64,
    subdivisions: u32,
) -> Result<MinkowskiOccupationReport> {
    let probe = [crate::geometry::LatticePoint::ORIGIN];
    for v in v_list {
        for &s in s_list {
            minkowski_content(&probe, m, v, s, beta, subdivisions)?;
        }
    }
    let domain = BallDomain::unit_ball(m);
    let site = nearest_lattice_point(REFERENCE_POINT, m);
    let m_beta = m.powf(beta);
    let unit = m.powf(-beta);
    let cells = v_list.len() * s_list.len();
    let mut acc: Vec<PairAccumulator> = run_trials(trials, seed, |spec, smp: &mut LerwSampler| {
        let path = smp.sample_lerw(&domain, &mut spec.rng());
        let mut out = Vec::with_capacity(cells + s_list.len());
        for v in v_list {
            let count = path.iter().filter(|p| v.contains(p.to_physical(m)) && (p.norm_sq() as f64) < m * m).count();
            let mu = count as f64 * unit;
            for &s in s_list {
                let j = minkowski_content(path, m, v, s, beta, subdivisions).map_or(0.0, |x| x.value);
                out.push(PairAccumulator::single(j, mu));
            }
        }
        let hit = path.contains(&site);
        for &s in s_list {
            let j = reference_cell_content(path, m, s, beta, subdivisions).unwrap_or(0.0);
            out.push(PairAccumulator::single(j * m_beta, hit as u8 as f64));
        }
        out
    });
    acc.resize_with(cells + s_list.len(), Default::default);
    let mut samples = Vec::with_capacity(cells);
    let mut k = 0;
    for v in v_list {
        for &s in s_list {
            samples.push(BoxSamples { v: *v, s, pairs: acc[k] });
            k += 1;
        }
    }
    let c0_pairs: Vec<(u32, PairAccumulator)> = s_list.iter().enumerate().map(|(i, s)| (*s, acc[cells + i])).collect();
    Ok(summarize_minkowski_occupation(m, beta, &samples, &c0_pairs, seed, CV_THRESHOLD))
}

/// Which limit an asymptotic constant is taken in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AsymptoticMode {
    /// `g(x) ≈ b₁ |x|^{β-3}` as `x → 0`.
    Origin,
    /// `g(x) ≈ b₂ (1-|x|)^e` as `|x| → 1`, with `e` fitted.
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsymptoticFit {
    pub mode: AsymptoticMode,
    /// Fit of `g` against the distance to the origin or to the boundary.
    pub fit: PowerLawFit,
    /// Exponent used to normalize: `β - 3` at the origin, the fitted one at the boundary.
    pub reference_exponent: f64,
    /// Weighted mean of `g · d^{-reference_exponent}`.
    pub constant: Estimate,
    /// Chi-square of the normalized values about their weighted mean.
    pub flatness_chi2: f64,
    /// Whether the fitted exponent's interval contains `β - 3` (origin mode only).
    pub trend_consistent: Option<bool>,
}

/// Fits `g` at points along a ray and extracts the asymptotic constant.
pub fn asymptotic_constant_fit(g: &[([f64; 3], Estimate)], beta: f64, mode: AsymptoticMode) -> Result<AsymptoticFit> {
    if g.len() < 3 {
        return Err(Error::Fit(format!("need at least 3 radii, got {}", g.len())));
    }
    let dist = |x: [f64; 3]| match mode {
        AsymptoticMode::Origin => norm3(x),
        AsymptoticMode::Boundary => 1.0 - norm3(x),
    };
    let pts: Vec<(f64, Estimate)> = g.iter().map(|(x, e)| (dist(*x), e.clone())).collect();
    let fit = fit_power_law(&pts)?;
    let reference_exponent = match mode {
        AsymptoticMode::Origin => beta - 3.0,
        AsymptoticMode::Boundary => fit.exponent,
    };
    let normalized: Vec<(f64, f64)> = pts
        .iter()
        .map(|(d, e)| {
            let f = d.powf(-reference_exponent);
            (e.mean * f, e.stderr * f)
        })
        .collect();
    let weighted = normalized.iter().all(|(_, s)| *s > 0.0);
    let w: Vec<f64> = normalized.iter().map(|(_, s)| if weighted { 1.0 / (s * s) } else { 1.0 }).collect();
    let sw: f64 = w.iter().sum();
    let mean = normalized.iter().zip(&w).map(|((v, _), w)| v * w).sum::<f64>() / sw;
    let stderr = if weighted { (1.0 / sw).sqrt() } else { 0.0 };
    let flatness_chi2 = normalized.iter().zip(&w).map(|((v, _), w)| w * (v - mean) * (v - mean)).sum();
    let trend_consistent = match mode {
        AsymptoticMode::Origin => Some(fit.ci_contains(beta - 3.0)),
        AsymptoticMode::Boundary => None,
    };
    Ok(AsymptoticFit {
        mode,
        fit,
        reference_exponent,
        constant: Estimate {
            mean,
            stderr,
            n_trials: g.iter().map(|(_, e)| e.n_trials).sum(),
            experiment_seed: g[0].1.experiment_seed,
            descriptor: format!("asymptotic_constant mode={mode:?}"),
        },
        flatness_chi2,
        trend_consistent,
    })
}
