//! Moishezon and bigness criteria on the catalog.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::{build_catalog_orbifold, validate_weights, CatalogSpec};
use crate::cohomology::{binomial, cohomology_table, CohomologyTable};
use crate::curvature::{curvature_spectrum, normalized_determinant, Signature};
use crate::error::{Error, Result};
use crate::linalg::{c, CMat, C64};
use crate::orbifold::{AtlasPatch, ChartDomain, ChartPoint, ChartedOrbifold, EquivariantLineBundle};

/// Randomized sample points added to the quadrature nodes.
pub const RANDOM_SAMPLES: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "moishezon-by-(i)")]
    MoishezonByI,
    #[serde(rename = "moishezon-by-(ii)")]
    MoishezonByII,
    #[serde(rename = "inconclusive")]
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriterionVerdict {
    /// `∫_{M(≤1)} (i R^L / 2π)^n`.
    pub integral: f64,
    /// Smallest curvature eigenvalue is `≥ -tol` at every sampled point.
    pub semipositive: bool,
    /// Some sampled point has all eigenvalues above `tol`.
    pub positive_somewhere: bool,
    pub verdict: Verdict,
    /// Criterion (ii) holds on its own.
    pub integral_positive: bool,
    /// Quadrature-weight fraction of `M(1)`.
    pub m1_fraction: f64,
    pub degenerate_fraction: f64,
    pub samples: usize,
}

struct PointSummary {
    min: f64,
    positive: bool,
}

fn summarize(bundle: &EquivariantLineBundle, orb: &ChartedOrbifold, p: &ChartPoint, tol: f64) -> Result<(PointSummary, Signature, f64)> {
    let s = curvature_spectrum(bundle, orb, p, tol)?;
    let min = s.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok((PointSummary { min, positive: min > tol }, s.signature, normalized_determinant(&s.eigenvalues)))
}

/// Seeded uniform points in the integration domain of each patch. Point `i`
/// uses its own stream, so the sample does not depend on thread layout.
pub fn random_points(orb: &ChartedOrbifold, count: usize, seed: u64) -> Vec<ChartPoint> {
    let patches = orb.patches();
    (0..count)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            let chart = i % patches.len();
            ChartPoint::new(chart, sample_in(&patches[chart], &mut rng))
        })
        .collect()
}

fn sample_in(patch: &AtlasPatch, rng: &mut ChaCha8Rng) -> Vec<C64> {
    match &patch.domain {
        ChartDomain::Polydisc { radii } => radii
            .iter()
            .map(|&r| C64::from_polar(r * rng.random::<f64>().sqrt(), 2.0 * PI * rng.random::<f64>()))
            .collect(),
        ChartDomain::TorusCell { periods } => periods
            .iter()
            .map(|&(lx, ly)| c(lx * rng.random::<f64>(), ly * rng.random::<f64>()))
            .collect(),
    }
}

pub fn moishezon_check(
    orb: &ChartedOrbifold,
    bundle: &EquivariantLineBundle,
    resolution: usize,
    tol: f64,
    quad_tol: f64,
    seed: u64,
) -> Result<CriterionVerdict> {
    if !(tol > 0.0 && quad_tol > 0.0) {
        return Err(Error::Config("tolerances must be positive".into()));
    }
    let n = orb.dimension();
    let nodes = orb.quadrature_nodes(resolution)?;
    let at_nodes: Vec<Result<(PointSummary, Signature, f64)>> =
        nodes.par_iter().with_min_len(256).map(|(p, _)| summarize(bundle, orb, p, tol)).collect();
    let extra = random_points(orb, RANDOM_SAMPLES, seed);
    let at_random: Vec<Result<(PointSummary, Signature, f64)>> =
        extra.par_iter().map(|p| summarize(bundle, orb, p, tol)).collect();
    let mut integral = 0.0;
    let mut total_weight = 0.0;
    let mut m1_weight = 0.0;
    let mut degenerate = 0usize;
    let mut semipositive = true;
    let mut positive_somewhere = false;
    for ((_, w), item) in nodes.iter().zip(at_nodes) {
        let (summary, signature, det) = item?;
        total_weight += w;
        match signature {
            Signature::Index(q) if q <= 1 => {
                integral += w * det;
                if q == 1 {
                    m1_weight += w;
                }
            }
            Signature::Degenerate => degenerate += 1,
            _ => {}
        }
        semipositive &= summary.min >= -tol;
        positive_somewhere |= summary.positive;
    }
    for item in at_random {
        let (summary, _, _) = item?;
        semipositive &= summary.min >= -tol;
        positive_somewhere |= summary.positive;
    }
    let fact: f64 = (1..=n).map(|k| k as f64).product();
    let integral = integral * fact;
    let integral_positive = integral > quad_tol;
    let verdict = if semipositive && positive_somewhere {
        Verdict::MoishezonByI
    } else if integral_positive {
        Verdict::MoishezonByII
    } else {
        Verdict::Inconclusive
    };
    Ok(CriterionVerdict {
        integral,
        semipositive,
        positive_somewhere,
        verdict,
        integral_positive,
        m1_fraction: if total_weight > 0.0 { m1_weight / total_weight } else { 0.0 },
        degenerate_fraction: degenerate as f64 / nodes.len().max(1) as f64,
        samples: nodes.len() + extra.len(),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BignessEstimate {
    /// Running maximum of `p^{-n} h^0` over the top decade of `p`.
    pub estimate: f64,
    /// `1/p` at the start of the tail.
    pub noise: f64,
    pub tail_points: usize,
    pub big: bool,
}

/// Minimum number of powers in the top decade.
pub const MIN_TAIL_POINTS: usize = 10;

pub fn bigness_check(table: &CohomologyTable, n: usize) -> Result<BignessEstimate> {
    let p_max = table.p_values.iter().copied().max().ok_or_else(|| Error::Missing("empty table".into()))?;
    let tail: Vec<u64> = table.p_values.iter().copied().filter(|&p| p > 0 && 10 * p >= p_max).collect();
    if tail.len() < MIN_TAIL_POINTS {
        return Err(Error::Missing(format!(
            "bigness needs {MIN_TAIL_POINTS} powers in the top decade, found {}",
            tail.len()
        )));
    }
    let mut estimate: f64 = 0.0;
    for &p in &tail {
        estimate = estimate.max(table.get(p, 0)? as f64 / (p as f64).powi(n as i32));
    }
    let noise = 1.0 / *tail.iter().min().expect("non-empty tail") as f64;
    Ok(BignessEstimate { estimate, noise, tail_points: tail.len(), big: estimate > 10.0 * noise })
}

/// `m · binom(n+k, k)`.
pub fn siegel_bound(m: u64, n: u64, k: u64) -> Result<u64> {
    let overflow = || Error::Overflow(format!("siegel bound for m={m}, n={n}, k={k} exceeds u64"));
    let b = binomial(n.checked_add(k).ok_or_else(overflow)?, k).ok_or_else(overflow)?;
    m.checked_mul(b).ok_or_else(overflow)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KodairaRank {
    pub p: u64,
    pub rank: usize,
    pub sections: usize,
    pub samples: usize,
}

/// Holomorphic sections of `L^p` with their derivatives, evaluated on a
/// homogeneous lift. Rows are sections; column 0 is the value and the rest
/// are derivatives along the lift coordinates.
fn section_jet(spec: &CatalogSpec, p: u64, z: &[C64]) -> Result<CMat> {
    match spec {
        CatalogSpec::Wps { weights, degree, .. } => {
            validate_weights(weights)?;
            let d = degree * p as i64;
            let exps = monomial_exponents(weights, d);
            let n1 = weights.len();
            Ok(CMat::from_fn(exps.len(), n1 + 1, |r, col| {
                let m = &exps[r];
                let value: C64 = m.iter().zip(z).map(|(&e, &zi)| zi.powu(e as u32)).product();
                if col == 0 {
                    value
                } else {
                    // z_k ∂_k of a monomial is m_k times the monomial; the
                    // column scaling by z_k leaves the rank unchanged
                    value * m[col - 1] as f64
                }
            }))
        }
        CatalogSpec::Torus { degrees, k, ripple, .. } if *ripple == 0.0 => {
            if degrees.iter().any(|&d| d < 0) {
                return Ok(CMat::zeros(0, degrees.len() + 1));
            }
            let fluxes: Vec<u64> = degrees.iter().map(|&d| d as u64 * p).collect();
            let plus = theta_jet(&fluxes, z);
            if *k == 1 {
                return Ok(plus);
            }
            let minus_z: Vec<C64> = z.iter().map(|w| -w).collect();
            let minus = theta_jet(&fluxes, &minus_z);
            Ok(CMat::from_fn(plus.nrows(), plus.ncols(), |r, col| {
                if col == 0 {
                    plus[(r, 0)] + minus[(r, 0)]
                } else {
                    plus[(r, col)] - minus[(r, col)]
                }
            }))
        }
        _ => Err(Error::UnsupportedModel(format!("no section basis for {}", spec.id()))),
    }
}

fn monomial_exponents(weights: &[u64], d: i64) -> Vec<Vec<u64>> {
    fn go(weights: &[u64], rest: u64, prefix: &mut Vec<u64>, out: &mut Vec<Vec<u64>>) {
        match weights {
            [] => {
                if rest == 0 {
                    out.push(prefix.clone());
                }
            }
            [a, tail @ ..] => {
                for m in 0..=rest / a {
                    prefix.push(m);
                    go(tail, rest - m * a, prefix, out);
                    prefix.pop();
                }
            }
        }
    }
    let mut out = Vec::new();
    if d >= 0 {
        go(weights, d as u64, &mut Vec::new(), &mut out);
    }
    out
}

/// Theta functions `f_s(z) = Σ_m e^{2π k z - π k^2/N}`, `k = s + N m`, for
/// each factor, multiplied over factors. All values carry the common factor
/// `e^{-π N x^2}` per factor, which does not change the rank.
fn theta_jet(fluxes: &[u64], z: &[C64]) -> CMat {
    let n = fluxes.len();
    let factor: Vec<Vec<(C64, C64)>> = fluxes
        .iter()
        .zip(z)
        .map(|(&flux, &zj)| {
            if flux == 0 {
                return vec![(c(1.0, 0.0), c(0.0, 0.0))];
            }
            let nf = flux as f64;
            let (x, y) = (zj.re, zj.im);
            let width = (40.0 * nf / PI).sqrt() + 1.0;
            (0..flux)
                .map(|s| {
                    let centre = nf * x;
                    let lo = ((centre - width - s as f64) / nf).floor() as i64;
                    let hi = ((centre + width - s as f64) / nf).ceil() as i64;
                    let mut value = c(0.0, 0.0);
                    let mut deriv = c(0.0, 0.0);
                    for m in lo..=hi {
                        let k = s as f64 + nf * m as f64;
                        let term = C64::from_polar((-PI * (k - centre).powi(2) / nf).exp(), 2.0 * PI * k * y);
                        value += term;
                        deriv += term * (2.0 * PI * k);
                    }
                    (value, deriv)
                })
                .collect()
        })
        .collect();
    let sizes: Vec<usize> = factor.iter().map(|f| f.len()).collect();
    let total: usize = sizes.iter().product();
    let mut out = CMat::zeros(total, n + 1);
    for row in 0..total {
        let mut idx = vec![0usize; n];
        let mut r = row;
        for j in (0..n).rev() {
            idx[j] = r % sizes[j];
            r /= sizes[j];
        }
        let value: C64 = (0..n).map(|j| factor[j][idx[j]].0).product();
        out[(row, 0)] = value;
        for col in 0..n {
            out[(row, col + 1)] = (0..n)
                .map(|j| if j == col { factor[j][idx[j]].1 } else { factor[j][idx[j]].0 })
                .product();
        }
    }
    out
}

/// Rank of the Kodaira map of `L^p`: `rank [F | dF] - 1` for a homogeneous
/// lift `F` of the sections, maximized over seeded regular sample points.
pub fn kodaira_rank(spec: &CatalogSpec, p: u64, samples: usize, seed: u64) -> Result<KodairaRank> {
    let n = spec.dimension();
    let lift_dim = match spec {
        CatalogSpec::Wps { weights, .. } => weights.len(),
        _ => n,
    };
    let points: Vec<Vec<C64>> = (0..samples)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            (0..lift_dim)
                .map(|_| match spec {
                    CatalogSpec::Wps { .. } => {
                        C64::from_polar(0.5 + rng.random::<f64>(), 2.0 * PI * rng.random::<f64>())
                    }
                    _ => c(rng.random::<f64>(), rng.random::<f64>()),
                })
                .collect()
        })
        .collect();
    let mut best: Option<usize> = None;
    let mut sections = 0;
    for z in &points {
        let jet = section_jet(spec, p, z)?;
        sections = jet.nrows();
        if sections == 0 {
            return Err(Error::RankUndefined(format!("L^{p} has no holomorphic sections")));
        }
        let scale = (0..jet.nrows()).map(|r| jet[(r, 0)].norm()).fold(0.0, f64::max);
        if scale == 0.0 {
            continue;
        }
        // rows are normalized; a zero row is a section vanishing to first
        // order and carries no rank
        let mut normalized = jet.clone();
        for r in 0..normalized.nrows() {
            let row_norm = normalized.row(r).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            if row_norm > 0.0 {
                for col in 0..normalized.ncols() {
                    normalized[(r, col)] /= row_norm;
                }
            }
        }
        let sv = normalized.singular_values();
        let max = sv.iter().cloned().fold(0.0, f64::max);
        let rank = sv.iter().filter(|&&s| s > 1e-8 * max).count();
        let rho = rank.saturating_sub(1);
        best = Some(best.map_or(rho, |b: usize| b.max(rho)));
    }
    let rank = best.ok_or_else(|| Error::RankUndefined("every sample lies in the base locus".into()))?;
    Ok(KodairaRank { p, rank, sections, samples })
}

/// Bigness and maximal Kodaira rank for one catalog entry.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BignessAgreement {
    pub catalog_id: String,
    pub big: bool,
    pub max_rank: usize,
    pub agree: bool,
}

/// Compares `bigness_check` on `p = 1..=p_tail` with the largest Kodaira
/// rank over `p = 1..=p_rank`.
pub fn bigness_vs_rank(spec: &CatalogSpec, p_tail: u64, p_rank: u64, seed: u64) -> Result<BignessAgreement> {
    let n = spec.dimension();
    let p_values: Vec<u64> = (1..=p_tail).collect();
    let table = cohomology_table(spec, &p_values)?;
    let big = bigness_check(&table, n)?.big;
    let mut max_rank = 0;
    for p in 1..=p_rank {
        match kodaira_rank(spec, p, 4, seed) {
            Ok(r) => max_rank = max_rank.max(r.rank),
            Err(Error::RankUndefined(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(BignessAgreement { catalog_id: spec.id().to_string(), big, max_rank, agree: big == (max_rank == n) })
}

pub fn build_and_check(spec: &CatalogSpec, resolution: usize, tol: f64, quad_tol: f64, seed: u64) -> Result<CriterionVerdict> {
    let (orb, bundle) = build_catalog_orbifold(spec)?;
    moishezon_check(&orb, &bundle, resolution, tol, quad_tol, seed)
}
