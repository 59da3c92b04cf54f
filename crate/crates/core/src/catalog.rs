//! Built-in model orbifolds.
//!
//! Three families are available:
//!
//! * `wps`: weighted projective space `P(a_0, ..., a_n)` with pairwise
//!   coprime weights and the bundle `O(d)`;
//! * `torus`: the square flat torus `C^n / Z^{2n}`, optionally divided by
//!   `Z_2` acting as `-1`, with a constant-curvature bundle of multidegree
//!   `(d_1, ..., d_n)`;
//! * `local-model`: `C^n / Z_k` with a diagonal action and constant
//!   curvature `diag(a_1, ..., a_n)`.
//!
//! # Weighted projective spaces
//!
//! The Kähler potential on `C^{n+1} \ 0` is `log t(z)` where `t > 0` solves
//! `Σ_j |z_j|^2 t^{-a_j} = 1`. It is invariant under `|z_j| -> λ^{a_j}|z_j|`
//! up to `log λ^2`, so `i∂∂̄ log t` descends. The bundle `O(1)` carries the
//! metric `|σ|^2 = 1/t` on the tautological section and curvature
//! `∂∂̄ log t`. The metric on the orbifold is chosen equal to the curvature
//! form of `O(1)`, so the curvature endomorphism of `O(d)` is `d·Id`
//! everywhere and `∫ det(Ṙ/2π) dv = d^n / (n! Π a_j)`.
//!
//! Chart `i` sets `z_i = 1` and uses the coordinates `v_k = z_k / σ_i` with
//! `σ_i = sqrt(a_i/2)`, so the metric is the identity at the chart centre.
//! Its group is `μ_{a_i}` acting by `ζ^{a_k}` on `v_k`, and the lift to
//! `O(d)` is multiplication by `ζ^d`.
//!
//! The partition of unity is `ψ_i = χ(β_i) / Σ_j χ(β_j)` with
//! `β_j = |z_j|^2 t^{-a_j}` and `χ` a smooth step from `c_0 = 1/(2(n+1))` to
//! `1/(n+1)`.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, real_diag, CMat, C64};
use crate::orbifold::{
    norm, AtlasPatch, ChartDomain, ChartPoint, ChartedOrbifold, DistanceField, EquivariantLineBundle,
    GroupElement, MatrixField, OrbifoldChart, ScalarField,
};

/// Parameters of a catalog entry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id", deny_unknown_fields)]
pub enum CatalogSpec {
    #[serde(rename = "wps")]
    Wps {
        weights: Vec<u64>,
        #[serde(default = "one_i64")]
        degree: i64,
        #[serde(default = "one_usize")]
        rank: usize,
    },
    #[serde(rename = "torus")]
    Torus {
        degrees: Vec<i64>,
        #[serde(default = "one_u32")]
        k: u32,
        #[serde(default)]
        ripple: f64,
        #[serde(default = "one_usize")]
        rank: usize,
    },
    #[serde(rename = "local-model")]
    LocalModel {
        curvature: Vec<f64>,
        #[serde(default = "one_u32")]
        k: u32,
        #[serde(default)]
        action_weights: Option<Vec<i64>>,
        #[serde(default)]
        line_phase: f64,
        #[serde(default = "default_radius")]
        radius: f64,
        #[serde(default = "one_usize")]
        rank: usize,
    },
}

fn one_i64() -> i64 {
    1
}
fn one_u32() -> u32 {
    1
}
fn one_usize() -> usize {
    1
}
fn default_radius() -> f64 {
    2.0
}

pub const CATALOG_IDS: [&str; 3] = ["wps", "torus", "local-model"];

impl CatalogSpec {
    pub fn wps(weights: Vec<u64>) -> Self {
        CatalogSpec::Wps { weights, degree: 1, rank: 1 }
    }

    pub fn torus(degrees: Vec<i64>, k: u32) -> Self {
        CatalogSpec::Torus { degrees, k, ripple: 0.0, rank: 1 }
    }

    pub fn local_model(curvature: Vec<f64>, k: u32) -> Self {
        CatalogSpec::LocalModel {
            curvature,
            k,
            action_weights: None,
            line_phase: 0.0,
            radius: default_radius(),
            rank: 1,
        }
    }

    pub fn with_rank(mut self, r: usize) -> Self {
        match &mut self {
            CatalogSpec::Wps { rank, .. } | CatalogSpec::Torus { rank, .. } | CatalogSpec::LocalModel { rank, .. } => {
                *rank = r
            }
        }
        self
    }

    pub fn id(&self) -> &'static str {
        match self {
            CatalogSpec::Wps { .. } => "wps",
            CatalogSpec::Torus { .. } => "torus",
            CatalogSpec::LocalModel { .. } => "local-model",
        }
    }

    pub fn dimension(&self) -> usize {
        match self {
            CatalogSpec::Wps { weights, .. } => weights.len().saturating_sub(1),
            CatalogSpec::Torus { degrees, .. } => degrees.len(),
            CatalogSpec::LocalModel { curvature, .. } => curvature.len(),
        }
    }

    pub fn rank(&self) -> usize {
        match self {
            CatalogSpec::Wps { rank, .. } | CatalogSpec::Torus { rank, .. } | CatalogSpec::LocalModel { rank, .. } => {
                *rank
            }
        }
    }

    /// Builds a spec from a string id and a map of numeric parameters.
    pub fn from_params(id: &str, params: &BTreeMap<String, Vec<f64>>) -> Result<Self> {
        let known: &[&str] = match id {
            "wps" => &["weights", "degree", "rank"],
            "torus" => &["degrees", "k", "ripple", "rank"],
            "local-model" => &["curvature", "k", "action_weights", "line_phase", "radius", "rank"],
            other => {
                return Err(Error::Config(format!(
                    "unknown catalog id '{other}' (expected one of {})",
                    CATALOG_IDS.join(", ")
                )))
            }
        };
        if let Some(key) = params.keys().find(|k| !known.contains(&k.as_str())) {
            return Err(Error::Config(format!("unknown parameter '{key}' for catalog '{id}'")));
        }
        let rank = match params.get("rank") {
            Some(v) => scalar_usize(v, "rank")?,
            None => 1,
        };
        let spec = match id {
            "wps" => CatalogSpec::Wps {
                weights: required(params, "weights")?
                    .iter()
                    .map(|&w| to_integer(w, "weights").and_then(|w| nonneg(w, "weights")))
                    .collect::<Result<_>>()?,
                degree: match params.get("degree") {
                    Some(v) => to_integer(scalar(v, "degree")?, "degree")?,
                    None => 1,
                },
                rank,
            },
            "torus" => CatalogSpec::Torus {
                degrees: required(params, "degrees")?
                    .iter()
                    .map(|&d| to_integer(d, "degrees"))
                    .collect::<Result<_>>()?,
                k: match params.get("k") {
                    Some(v) => scalar_usize(v, "k")? as u32,
                    None => 1,
                },
                ripple: match params.get("ripple") {
                    Some(v) => scalar(v, "ripple")?,
                    None => 0.0,
                },
                rank,
            },
            _ => CatalogSpec::LocalModel {
                curvature: required(params, "curvature")?.clone(),
                k: match params.get("k") {
                    Some(v) => scalar_usize(v, "k")? as u32,
                    None => 1,
                },
                action_weights: match params.get("action_weights") {
                    Some(v) => Some(v.iter().map(|&w| to_integer(w, "action_weights")).collect::<Result<_>>()?),
                    None => None,
                },
                line_phase: match params.get("line_phase") {
                    Some(v) => scalar(v, "line_phase")?,
                    None => 0.0,
                },
                radius: match params.get("radius") {
                    Some(v) => scalar(v, "radius")?,
                    None => default_radius(),
                },
                rank,
            },
        };
        Ok(spec)
    }

    /// True when the model has constant curvature and the identity metric.
    pub fn is_flat(&self) -> bool {
        match self {
            CatalogSpec::Wps { .. } => false,
            CatalogSpec::Torus { ripple, .. } => *ripple == 0.0,
            CatalogSpec::LocalModel { .. } => true,
        }
    }
}

fn required<'a>(params: &'a BTreeMap<String, Vec<f64>>, key: &str) -> Result<&'a Vec<f64>> {
    params
        .get(key)
        .ok_or_else(|| Error::Config(format!("missing parameter '{key}'")))
}

fn scalar(v: &[f64], key: &str) -> Result<f64> {
    match v {
        [x] => Ok(*x),
        _ => Err(Error::Config(format!("parameter '{key}' must be a single number"))),
    }
}

fn scalar_usize(v: &[f64], key: &str) -> Result<usize> {
    let x = to_integer(scalar(v, key)?, key)?;
    Ok(nonneg(x, key)? as usize)
}

fn to_integer(x: f64, key: &str) -> Result<i64> {
    if x.fract() != 0.0 || !x.is_finite() || x.abs() > 1e15 {
        return Err(Error::Config(format!("parameter '{key}' must be an integer, got {x}")));
    }
    Ok(x as i64)
}

fn nonneg(x: i64, key: &str) -> Result<u64> {
    u64::try_from(x).map_err(|_| Error::Config(format!("parameter '{key}' must be non-negative, got {x}")))
}

pub fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Validates weighted projective weights: at least two, positive and
/// pairwise coprime.
pub fn validate_weights(weights: &[u64]) -> Result<()> {
    if weights.len() < 2 {
        return Err(Error::Config("weighted projective space needs at least two weights".into()));
    }
    if weights.iter().any(|&w| w == 0) {
        return Err(Error::Config("weights must be positive integers".into()));
    }
    for i in 0..weights.len() {
        for j in (i + 1)..weights.len() {
            if gcd(weights[i], weights[j]) != 1 {
                return Err(Error::Config(format!(
                    "weights {} and {} are not coprime; only pairwise coprime weights are supported",
                    weights[i], weights[j]
                )));
            }
        }
    }
    Ok(())
}

/// Builds the orbifold and line bundle of a catalog entry.
pub fn build_catalog_orbifold(spec: &CatalogSpec) -> Result<(ChartedOrbifold, EquivariantLineBundle)> {
    if spec.rank() == 0 {
        return Err(Error::Config("auxiliary bundle rank must be at least 1".into()));
    }
    let (orb, bundle) = match spec {
        CatalogSpec::Wps { weights, degree, rank } => build_wps(spec, weights, *degree, *rank)?,
        CatalogSpec::Torus { degrees, k, ripple, rank } => build_torus(spec, degrees, *k, *ripple, *rank)?,
        CatalogSpec::LocalModel { curvature, k, action_weights, line_phase, radius, rank } => build_local(
            spec,
            curvature,
            *k,
            action_weights.as_deref(),
            *line_phase,
            *radius,
            *rank,
        )?,
    };
    bundle.validate(&orb)?;
    Ok((orb, bundle))
}

// ---------------------------------------------------------------------------
// Weighted projective space

/// Geometry of `P(a_0, ..., a_n)` in homogeneous coordinates.
#[derive(Clone, Debug)]
pub struct WpsGeometry {
    weights: Vec<f64>,
}

impl WpsGeometry {
    pub fn new(weights: &[u64]) -> Result<Self> {
        validate_weights(weights)?;
        Ok(Self { weights: weights.iter().map(|&w| w as f64).collect() })
    }

    pub fn dimension(&self) -> usize {
        self.weights.len() - 1
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Solves `Σ |z_j|^2 t^{-a_j} = 1` by Newton's method in `s = log t`.
    pub fn log_t(&self, z: &[C64]) -> f64 {
        let m: Vec<f64> = z.iter().map(|w| w.norm_sqr()).collect();
        // f(s) = Σ m_j e^{-a_j s} - 1 is convex and decreasing; starting where
        // every term is at most one and one equals one, Newton increases
        // monotonically to the root.
        let mut s = m
            .iter()
            .zip(&self.weights)
            .filter(|(mj, _)| **mj > 0.0)
            .map(|(mj, a)| mj.ln() / a)
            .fold(f64::NEG_INFINITY, f64::max);
        for _ in 0..200 {
            let mut f = -1.0;
            let mut df = 0.0;
            for (mj, a) in m.iter().zip(&self.weights) {
                let e = mj * (-a * s).exp();
                f += e;
                df -= a * e;
            }
            let step = f / df;
            s -= step;
            if step.abs() <= 1e-15 * s.abs().max(1.0) {
                break;
            }
        }
        s
    }

    /// Moment coordinates `β_j = |z_j|^2 t^{-a_j}`; they sum to one.
    pub fn moments(&self, z: &[C64]) -> Vec<f64> {
        let s = self.log_t(z);
        z.iter()
            .zip(&self.weights)
            .map(|(w, a)| w.norm_sqr() * (-a * s).exp())
            .collect()
    }

    /// Matrix of `∂∂̄ log t` restricted to the coordinates listed in `idx`.
    pub fn potential_hessian(&self, z: &[C64], idx: &[usize]) -> CMat {
        let s = self.log_t(z);
        let tpow: Vec<f64> = self.weights.iter().map(|a| (-a * s).exp()).collect();
        let beta: Vec<f64> = z.iter().zip(&tpow).map(|(w, t)| w.norm_sqr() * t).collect();
        let a_sum: f64 = beta.iter().zip(&self.weights).map(|(b, a)| a * b).sum();
        let b_sum: f64 = beta.iter().zip(&self.weights).map(|(b, a)| a * a * b).sum();
        let v: Vec<C64> = z.iter().zip(&tpow).map(|(w, t)| w * t).collect();
        let m = idx.len();
        CMat::from_fn(m, m, |r, col| {
            let (k, l) = (idx[r], idx[col]);
            let mut val = v[k] * v[l].conj() * ((b_sum / a_sum - self.weights[k] - self.weights[l]) / (a_sum * a_sum));
            if k == l {
                val += c(tpow[k] / a_sum, 0.0);
            }
            val
        })
    }

    /// Coordinate scale of chart `i`: `z_k = σ_i v_k`.
    pub fn chart_scale(&self, i: usize) -> f64 {
        (self.weights[i] / 2.0).sqrt()
    }

    /// Homogeneous coordinates of a point of chart `i`.
    pub fn homogeneous(&self, i: usize, v: &[C64]) -> Vec<C64> {
        let sigma = self.chart_scale(i);
        let mut z = Vec::with_capacity(v.len() + 1);
        let mut it = v.iter();
        for j in 0..self.weights.len() {
            if j == i {
                z.push(c(1.0, 0.0));
            } else {
                z.push(it.next().expect("chart point has n coordinates") * sigma);
            }
        }
        z
    }

    /// Metric (equal to the curvature of `O(1)`) in the coordinates of chart `i`.
    pub fn chart_metric(&self, i: usize, v: &[C64]) -> CMat {
        let z = self.homogeneous(i, v);
        let idx: Vec<usize> = (0..self.weights.len()).filter(|&j| j != i).collect();
        self.potential_hessian(&z, &idx).scale(self.weights[i])
    }

    /// Lower and upper edge of the partition smooth step.
    pub fn cutoffs(&self) -> (f64, f64) {
        let n1 = self.weights.len() as f64;
        (1.0 / (2.0 * n1), 1.0 / n1)
    }

    pub fn partition(&self, i: usize, v: &[C64]) -> f64 {
        let z = self.homogeneous(i, v);
        let beta = self.moments(&z);
        let (lo, hi) = self.cutoffs();
        let chi: Vec<f64> = beta.iter().map(|&b| smooth_step((b - lo) / (hi - lo))).collect();
        chi[i] / chi.iter().sum::<f64>()
    }

    /// Polydisc in chart `i` containing the support of its partition function.
    pub fn support_radii(&self, i: usize) -> Vec<f64> {
        let (lo, _) = self.cutoffs();
        let sigma = self.chart_scale(i);
        (0..self.weights.len())
            .filter(|&k| k != i)
            .map(|k| lo.powf(-self.weights[k] / (2.0 * self.weights[i])) / sigma)
            .collect()
    }
}

/// `C^∞` step: 0 for `x <= 0`, 1 for `x >= 1`.
pub fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else if x >= 1.0 {
        1.0
    } else {
        let a = (-1.0 / x).exp();
        let b = (-1.0 / (1.0 - x)).exp();
        a / (a + b)
    }
}

fn build_wps(
    spec: &CatalogSpec,
    weights: &[u64],
    degree: i64,
    rank: usize,
) -> Result<(ChartedOrbifold, EquivariantLineBundle)> {
    let geom = Arc::new(WpsGeometry::new(weights)?);
    let n = geom.dimension();
    let mut patches = Vec::with_capacity(weights.len());
    let mut curvature: Vec<MatrixField> = Vec::with_capacity(weights.len());
    for (i, &ai) in weights.iter().enumerate() {
        let action: Vec<i64> = weights
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != i)
            .map(|(_, &w)| w as i64)
            .collect();
        let group: Vec<GroupElement> = (0..ai as i64)
            .map(|m| {
                let phase = 2.0 * PI * ((m * degree).rem_euclid(ai as i64)) as f64 / ai as f64;
                GroupElement::root_of_unity(ai as u32, m, &action, phase, rank)
            })
            .collect();
        let g = geom.clone();
        let metric: MatrixField = Arc::new(move |v: &[C64]| g.chart_metric(i, v));
        let radii = geom.support_radii(i);
        let radius = radii.iter().map(|r| r * r).sum::<f64>().sqrt() * 1.01;
        let chart = OrbifoldChart::new(n, group, metric, radius)?;
        let g = geom.clone();
        let partition: ScalarField = Arc::new(move |v: &[C64]| g.partition(i, v));
        patches.push(AtlasPatch { chart, domain: ChartDomain::Polydisc { radii }, partition });
        let g = geom.clone();
        let d = degree as f64;
        curvature.push(Arc::new(move |v: &[C64]| g.chart_metric(i, v).scale(d)));
    }
    let singular: Vec<bool> = weights.iter().map(|&w| w > 1).collect();
    let distance: DistanceField = Arc::new(move |p: &ChartPoint| {
        if singular.get(p.chart).copied().unwrap_or(false) {
            norm(&p.coords)
        } else {
            f64::INFINITY
        }
    });
    let orb = ChartedOrbifold::new(spec.clone(), patches, distance)?;
    let bundle = EquivariantLineBundle::new(curvature, rank)?;
    Ok((orb, bundle))
}

// ---------------------------------------------------------------------------
// Flat torus quotient

/// Curvature of a torus entry at a cover point: `2π d_j` on the diagonal plus
/// the optional ripple `-2π^2 c cos(2π x_1)` on the first coordinate.
pub fn torus_curvature(degrees: &[i64], ripple: f64, z: &[C64]) -> CMat {
    let mut diag: Vec<f64> = degrees.iter().map(|&d| 2.0 * PI * d as f64).collect();
    if ripple != 0.0 {
        diag[0] -= 2.0 * PI * PI * ripple * (2.0 * PI * z[0].re).cos();
    }
    real_diag(&diag)
}

/// Distance from a point to the nearest half-period point.
pub fn half_lattice_distance(z: &[C64]) -> f64 {
    let d = |x: f64| {
        let y = 2.0 * x;
        (y - y.round()).abs() / 2.0
    };
    z.iter().map(|w| d(w.re).powi(2) + d(w.im).powi(2)).sum::<f64>().sqrt()
}

fn build_torus(
    spec: &CatalogSpec,
    degrees: &[i64],
    k: u32,
    ripple: f64,
    rank: usize,
) -> Result<(ChartedOrbifold, EquivariantLineBundle)> {
    let n = degrees.len();
    if n == 0 {
        return Err(Error::Config("torus needs at least one degree".into()));
    }
    if !ripple.is_finite() {
        return Err(Error::Config("ripple must be finite".into()));
    }
    let group = match k {
        1 => vec![GroupElement::identity(n, rank)],
        2 => vec![GroupElement::identity(n, rank), GroupElement::root_of_unity(2, 1, &vec![1; n], 0.0, rank)],
        other => {
            return Err(Error::Config(format!(
                "k = {other} is not a symmetry supported by the square torus catalog (use k = 1 or 2)"
            )))
        }
    };
    let metric: MatrixField = Arc::new(move |_z: &[C64]| CMat::identity(n, n));
    let chart = OrbifoldChart::new(n, group, metric, f64::INFINITY)?;
    let partition: ScalarField = Arc::new(|_z: &[C64]| 1.0);
    let patch = AtlasPatch { chart, domain: ChartDomain::TorusCell { periods: vec![(1.0, 1.0); n] }, partition };
    let distance: DistanceField = if k == 2 {
        Arc::new(|p: &ChartPoint| half_lattice_distance(&p.coords))
    } else {
        Arc::new(|_p: &ChartPoint| f64::INFINITY)
    };
    let orb = ChartedOrbifold::new(spec.clone(), vec![patch], distance)?;
    let degrees = degrees.to_vec();
    let field: MatrixField = Arc::new(move |z: &[C64]| torus_curvature(&degrees, ripple, z));
    let bundle = EquivariantLineBundle::new(vec![field], rank)?;
    Ok((orb, bundle))
}

// ---------------------------------------------------------------------------
// Local model

fn build_local(
    spec: &CatalogSpec,
    curvature: &[f64],
    k: u32,
    action_weights: Option<&[i64]>,
    line_phase: f64,
    radius: f64,
    rank: usize,
) -> Result<(ChartedOrbifold, EquivariantLineBundle)> {
    let n = curvature.len();
    if n == 0 {
        return Err(Error::Config("local model needs at least one curvature eigenvalue".into()));
    }
    if curvature.iter().any(|a| !a.is_finite()) {
        return Err(Error::Config("curvature eigenvalues must be finite".into()));
    }
    if k == 0 {
        return Err(Error::Config("group order k must be at least 1".into()));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Config("radius must be positive".into()));
    }
    let weights: Vec<i64> = action_weights.map(|w| w.to_vec()).unwrap_or_else(|| vec![1; n]);
    if weights.len() != n {
        return Err(Error::Config("action_weights must have one entry per coordinate".into()));
    }
    let common = weights.iter().fold(k as u64, |g, &w| gcd(g, w.unsigned_abs()));
    if common != 1 {
        return Err(Error::Config(format!(
            "action weights {weights:?} do not generate an effective Z_{k} action"
        )));
    }
    let wrap = (k as f64 * line_phase / (2.0 * PI)).fract().abs();
    if wrap.min(1.0 - wrap) > 1e-9 {
        return Err(Error::Config("line_phase times k must be a multiple of 2π".into()));
    }
    let group: Vec<GroupElement> = (0..k as i64)
        .map(|m| GroupElement::root_of_unity(k, m, &weights, m as f64 * line_phase, rank))
        .collect();
    let metric: MatrixField = Arc::new(move |_z: &[C64]| CMat::identity(n, n));
    let chart = OrbifoldChart::new(n, group, metric, radius)?;
    let partition: ScalarField = Arc::new(|_z: &[C64]| 1.0);
    let radii = vec![radius / (n as f64).sqrt(); n];
    let patch = AtlasPatch { chart: chart.clone(), domain: ChartDomain::Polydisc { radii }, partition };
    let elements: Vec<GroupElement> = chart.group().to_vec();
    let distance: DistanceField = Arc::new(move |p: &ChartPoint| {
        elements
            .iter()
            .filter(|g| !g.acts_trivially(1e-12))
            .map(|g| norm(&g.split_fixed_normal(&p.coords).1))
            .fold(f64::INFINITY, f64::min)
    });
    let orb = ChartedOrbifold::new(spec.clone(), vec![patch], distance)?;
    let a = curvature.to_vec();
    let field: MatrixField = Arc::new(move |_z: &[C64]| real_diag(&a));
    let bundle = EquivariantLineBundle::new(vec![field], rank)?;
    Ok((orb, bundle))
}
