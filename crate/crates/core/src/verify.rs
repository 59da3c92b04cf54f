//! Both sides of the Morse inequalities and the heat-kernel asymptotics
//! checks on flat models.
//!
//! Kernels on quotients are realized by the method of images. On the local
//! model `C^n/Z_k` the diagonal is `Σ_g (g,1) K(g^{-1}x, x)` over the group;
//! on a torus quotient it is the lattice sum of the Landau-gauge kernel plus
//! its reflection. Image terms at large `p` are far below the smallest
//! double, so every sum is carried as `log|z|` and a phase.

use std::f64::consts::PI;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::catalog::{build_catalog_orbifold, CatalogSpec};
use crate::cohomology::{cohomology_table, CohomologyTable};
use crate::curvature::{morse_integral_table, MorseIntegralTable};
use crate::error::{Error, Result};
use crate::kernels::{
    gaussian_coefficient, gaussian_twist, kernel_exponent, lim_u, log_prefactor, prefactor, trace_q_exp_omega,
    twisted_form_trace, ModelPointData,
};
use crate::linalg::{c, C64};
use crate::orbifold::{norm, ChartPoint, GroupElement};

/// A complex number stored as `(ln|z|, arg z)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogComplex {
    pub log_modulus: f64,
    pub phase: f64,
}

impl LogComplex {
    pub const ZERO: LogComplex = LogComplex { log_modulus: f64::NEG_INFINITY, phase: 0.0 };

    pub fn new(log_modulus: f64, phase: f64) -> Self {
        Self { log_modulus, phase }
    }

    pub fn from_complex(z: C64) -> Self {
        if z == c(0.0, 0.0) {
            Self::ZERO
        } else {
            Self { log_modulus: z.norm().ln(), phase: z.arg() }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.log_modulus == f64::NEG_INFINITY
    }

    pub fn mul(self, other: LogComplex) -> Self {
        if self.is_zero() || other.is_zero() {
            return Self::ZERO;
        }
        Self { log_modulus: self.log_modulus + other.log_modulus, phase: self.phase + other.phase }
    }

    pub fn to_complex(self) -> C64 {
        if self.is_zero() {
            c(0.0, 0.0)
        } else {
            C64::from_polar(self.log_modulus.exp(), self.phase)
        }
    }

    /// Sum scaled by the largest modulus.
    pub fn sum(terms: &[LogComplex]) -> Self {
        let max = terms.iter().map(|t| t.log_modulus).fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        let s: C64 = terms
            .iter()
            .filter(|t| !t.is_zero())
            .map(|t| C64::from_polar((t.log_modulus - max).exp(), t.phase))
            .sum();
        if s.norm() == 0.0 {
            return Self::ZERO;
        }
        Self { log_modulus: max + s.norm().ln(), phase: s.arg() }
    }
}

// ---------------------------------------------------------------------------
// Strong Morse inequalities

/// Where the right side `(-1)^q ∫_{M(≤q)} det(Ṙ/2π) dv` comes from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum RightSide {
    /// Tensor-product quadrature at the given resolution.
    Quadrature { resolution: usize, tol: f64 },
    /// Closed form `d^n/(n! Π a)` for weighted projective spaces.
    Exact,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualPoint {
    pub p: u64,
    pub morse_sum: i128,
    pub lhs: f64,
    pub rhs: f64,
    pub rho: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// `ρ_p = p^{-n} Σ_{j≤q} (-1)^{q-j} h^j - rank · (-1)^q ∫_{M(≤q)} det(Ṙ/2π) dv`
/// along a list of powers. The inequality is `ρ_p ≤ o(1)` and equality holds
/// in the limit at `q = n`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MorseSeries {
    pub catalog_id: String,
    pub q: usize,
    pub dimension: usize,
    pub rhs: f64,
    pub points: Vec<ResidualPoint>,
    /// The largest `max(ρ_p, 0)` over the second half of the list does not
    /// exceed the largest over the first half. Residuals of quasi-polynomial
    /// counts oscillate, so termwise monotonicity is not required.
    pub tail_decreasing: bool,
    pub pass: bool,
}

/// Integrals `∫_{M(j)} det(Ṙ/2π) dv` per degree.
pub fn right_side_table(spec: &CatalogSpec, source: RightSide) -> Result<Vec<f64>> {
    let n = spec.dimension();
    match source {
        RightSide::Exact => match spec {
            CatalogSpec::Wps { weights, degree, .. } => {
                let fact: f64 = (1..=n).map(|k| k as f64).product();
                let value = (*degree as f64).powi(n as i32) / (fact * weights.iter().map(|&a| a as f64).product::<f64>());
                let mut by_degree = vec![0.0; n + 1];
                match degree.signum() {
                    1 => by_degree[0] = value,
                    -1 => by_degree[n] = value,
                    _ => {}
                }
                Ok(by_degree)
            }
            _ => Err(Error::UnsupportedModel("closed-form right side exists only for weighted projective spaces".into())),
        },
        RightSide::Quadrature { resolution, tol } => {
            let (orb, bundle) = build_catalog_orbifold(spec)?;
            Ok(morse_integral_table(&orb, &bundle, resolution, tol)?.by_degree)
        }
    }
}

/// Quadrature tolerance credited to the right side.
pub const RIGHT_SIDE_TOL: f64 = 1e-3;

pub fn verify_strong_morse(
    spec: &CatalogSpec,
    q: usize,
    p_values: &[u64],
    source: RightSide,
    tol_scale: f64,
) -> Result<MorseSeries> {
    let n = spec.dimension();
    if q > n {
        return Err(Error::DegreeOutOfRange { q, n });
    }
    let table = cohomology_table(spec, p_values)?;
    let by_degree = right_side_table(spec, source)?;
    strong_morse_from_tables(spec, q, &table, &by_degree, source, tol_scale)
}

pub fn strong_morse_from_tables(
    spec: &CatalogSpec,
    q: usize,
    table: &CohomologyTable,
    by_degree: &[f64],
    source: RightSide,
    tol_scale: f64,
) -> Result<MorseSeries> {
    let n = spec.dimension();
    let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
    let rhs = spec.rank() as f64 * sign * by_degree[..=q].iter().sum::<f64>();
    let quad_tol = match source {
        RightSide::Exact => 0.0,
        RightSide::Quadrature { .. } => RIGHT_SIDE_TOL,
    };
    let mut points = Vec::with_capacity(table.p_values.len());
    for &p in &table.p_values {
        let morse_sum = table.morse_sum(p, q)?;
        let lhs = morse_sum as f64 / (p as f64).powi(n as i32);
        let rho = lhs - rhs;
        let tolerance = tol_scale * n as f64 / p as f64 + quad_tol;
        let pass = if q == n { rho.abs() <= tolerance } else { rho <= tolerance };
        points.push(ResidualPoint { p, morse_sum, lhs, rhs, rho, tolerance, pass });
    }
    let positive_max = |pts: &[ResidualPoint]| pts.iter().map(|pt| pt.rho.max(0.0)).fold(0.0, f64::max);
    let (head, tail) = points.split_at(points.len() / 2);
    let tail_decreasing = head.is_empty() || positive_max(tail) <= positive_max(head) + 1e-15;
    let pass = points.iter().all(|pt| pt.pass) && tail_decreasing;
    Ok(MorseSeries { catalog_id: spec.id().to_string(), q, dimension: n, rhs, points, tail_decreasing, pass })
}

/// Largest violation of `R_q + R_{q-1} = (-1)^q ∫_{M(q)}` between the strong
/// right sides `R_q = (-1)^q ∫_{M(≤q)}`.
pub fn telescoping_residual(table: &MorseIntegralTable) -> f64 {
    let strong = |q: usize| if q % 2 == 0 { table.up_to(q) } else { -table.up_to(q) };
    (1..table.by_degree.len())
        .map(|q| {
            let weak = if q % 2 == 0 { table.by_degree[q] } else { -table.by_degree[q] };
            (strong(q) + strong(q - 1) - weak).abs()
        })
        .fold(0.0, f64::max)
}

/// Exact form of `ρ_p` for a weighted projective space with the closed-form
/// right side, as `(numerator, denominator)`.
pub fn exact_residual(weights: &[u64], degree: i64, q: usize, p: u64, morse_sum: i128) -> Result<(i128, i128)> {
    let n = weights.len() - 1;
    let overflow = || Error::Overflow("exact residual exceeds i128".into());
    let fact: i128 = (1..=n as i128).product();
    let prod: i128 = weights.iter().map(|&a| a as i128).product();
    let den_rhs = fact.checked_mul(prod).ok_or_else(overflow)?;
    let p_n = (p as i128).checked_pow(n as u32).ok_or_else(overflow)?;
    let signature_ok = match degree.signum() {
        1 => true,
        -1 => q == n,
        _ => false,
    };
    let rhs_num = if signature_ok {
        let dn = (degree as i128).checked_pow(n as u32).ok_or_else(overflow)?;
        if q % 2 == 0 { dn } else { -dn }
    } else {
        0
    };
    let num = morse_sum
        .checked_mul(den_rhs)
        .and_then(|a| rhs_num.checked_mul(p_n).and_then(|b| a.checked_sub(b)))
        .ok_or_else(overflow)?;
    Ok((num, p_n.checked_mul(den_rhs).ok_or_else(overflow)?))
}

// ---------------------------------------------------------------------------
// Image sums

struct LocalModel {
    curvature: Vec<f64>,
    rank: usize,
    group: Vec<GroupElement>,
}

fn local_model(spec: &CatalogSpec) -> Result<LocalModel> {
    match spec {
        CatalogSpec::LocalModel { curvature, rank, .. } => {
            let (orb, _) = build_catalog_orbifold(spec)?;
            Ok(LocalModel { curvature: curvature.clone(), rank: *rank, group: orb.chart(0)?.group().to_vec() })
        }
        _ => Err(Error::UnsupportedModel(format!("{} is not a local model", spec.id()))),
    }
}

/// `p^{-n} tr[(g,1) K_p(g^{-1}x, x)]` for one group element, via the scaling
/// identity `K_{pa,u/p}(x,y) = p^n K_{a,u}(√p x, √p y)`.
fn local_image_term(m: &LocalModel, g: &GroupElement, u: f64, p: u64, x: &[C64], q: usize) -> Result<LogComplex> {
    let sp = (p as f64).sqrt();
    let scaled: Vec<C64> = x.iter().map(|z| z * sp).collect();
    let w = g.act_inverse(&scaled);
    let form = twisted_form_trace(&m.curvature, u, g.matrix(), q)?;
    let aux = g.aux_action().trace();
    let exponent = kernel_exponent(&m.curvature, u, &w, &scaled);
    let coefficient = LogComplex::from_complex(form * aux);
    let line = LogComplex::new(0.0, p as f64 * g.line_phase());
    Ok(coefficient
        .mul(line)
        .mul(LogComplex::new(log_prefactor(&m.curvature, u) + exponent.re, exponent.im)))
}

/// `p^{-n}` times the diagonal heat kernel of `C^n/Z_k`, as a log-domain sum
/// over the group. With `skip_identity` the `g = 1` term is left out.
pub fn local_image_sum(spec: &CatalogSpec, u: f64, p: u64, x: &[C64], q: usize, skip_identity: bool) -> Result<LogComplex> {
    let m = local_model(spec)?;
    check_point(x, m.curvature.len())?;
    let terms = m
        .group
        .iter()
        .filter(|g| !(skip_identity && g.acts_trivially(1e-12)))
        .map(|g| local_image_term(&m, g, u, p, x, q))
        .collect::<Result<Vec<_>>>()?;
    Ok(LogComplex::sum(&terms))
}

fn check_point(x: &[C64], n: usize) -> Result<()> {
    if x.len() != n {
        return Err(Error::Inconsistent(format!("point has {} coordinates, model has {n}", x.len())));
    }
    Ok(())
}

/// Torus factor kernel `K_T(z, w) = Σ_γ K_L(z, w+γ) e^{iB m Im w}` with the
/// Landau-gauge kernel `K_L(z, w) = e^{iχ(z)} K(z, w) e^{-iχ(w)}`,
/// `χ = B Re z Im z / 2`, at time `t`. With `skip_origin` the `γ = 0` term is
/// left out.
pub fn torus_factor_kernel(b: f64, t: f64, z: C64, w: C64, skip_origin: bool) -> LogComplex {
    let kappa = 0.5 * gaussian_coefficient(b, t);
    let base = z - w;
    let radius = (0.5 + 60.0 / kappa).sqrt() + 1.0;
    let chi = |v: C64| 0.5 * b * v.re * v.im;
    let log_pref = log_prefactor(&[b], t);
    let (m_lo, m_hi) = ((base.re - radius).floor() as i64, (base.re + radius).ceil() as i64);
    let (l_lo, l_hi) = ((base.im - radius).floor() as i64, (base.im + radius).ceil() as i64);
    let mut terms = Vec::new();
    for m in m_lo..=m_hi {
        for l in l_lo..=l_hi {
            if skip_origin && m == 0 && l == 0 {
                continue;
            }
            let shifted = w + c(m as f64, l as f64);
            let e = kernel_exponent(&[b], t, &[z], &[shifted]);
            let phase = e.im + chi(z) - chi(shifted) + b * m as f64 * w.im;
            terms.push(LogComplex::new(log_pref + e.re, phase));
        }
    }
    LogComplex::sum(&terms)
}

struct TorusModel {
    degrees: Vec<i64>,
    k: u32,
    rank: usize,
}

fn torus_model(spec: &CatalogSpec) -> Result<TorusModel> {
    match spec {
        CatalogSpec::Torus { degrees, k, ripple, rank } => {
            if *ripple != 0.0 {
                return Err(Error::UnsupportedModel("the ripple torus has no image-sum kernel".into()));
            }
            build_catalog_orbifold(spec)?;
            Ok(TorusModel { degrees: degrees.clone(), k: *k, rank: *rank })
        }
        _ => Err(Error::UnsupportedModel(format!("{} is not a torus", spec.id()))),
    }
}

/// `p^{-n} tr K_p(x, x)` on a torus quotient, split as `(model, rest)` where
/// `model` is the `γ = 0` term of the identity image and `rest` everything
/// else.
fn torus_diagonal_parts(spec: &CatalogSpec, u: f64, p: u64, x: &[C64], q: usize) -> Result<(LogComplex, LogComplex)> {
    let m = torus_model(spec)?;
    let n = m.degrees.len();
    check_point(x, n)?;
    if q > n {
        return Err(Error::DegreeOutOfRange { q, n });
    }
    let t = u / p as f64;
    let fields: Vec<f64> = m.degrees.iter().map(|&d| 2.0 * PI * d as f64 * p as f64).collect();
    let mut origin = Vec::with_capacity(n);
    let mut rest = Vec::with_capacity(n);
    let mut reflected = LogComplex::new(0.0, 0.0);
    for (j, &b) in fields.iter().enumerate() {
        origin.push(LogComplex::new(log_prefactor(&[b], t), 0.0));
        rest.push(torus_factor_kernel(b, t, x[j], x[j], true));
        reflected = reflected.mul(torus_factor_kernel(b, t, -x[j], x[j], false));
    }
    // Π_j (T_j + R_j) - Π_j T_j expanded over the non-empty sets of R factors
    let mut expansion = Vec::new();
    for mask in 1u32..(1u32 << n) {
        let mut term = LogComplex::new(0.0, 0.0);
        for j in 0..n {
            term = term.mul(if mask & (1 << j) != 0 { rest[j] } else { origin[j] });
        }
        expansion.push(term);
    }
    if m.k == 2 {
        let sign = if q % 2 == 0 { 0.0 } else { PI };
        expansion.push(reflected.mul(LogComplex::new(0.0, sign)));
    }
    let forms = trace_q_exp_omega(&fields, t, q)?;
    let scale = LogComplex::new((m.rank as f64 * forms).ln() - n as f64 * (p as f64).ln(), 0.0);
    let model = origin.iter().fold(LogComplex::new(0.0, 0.0), |acc, o| acc.mul(*o)).mul(scale);
    Ok((model, LogComplex::sum(&expansion).mul(scale)))
}

/// Diagonal heat kernel `tr e^{-u□_p/p}(x, x)` of a flat torus quotient on
/// `Λ^{0,q}` from the image sum (not rescaled by `p^{-n}`).
pub fn torus_image_sum_diagonal(spec: &CatalogSpec, u: f64, p: u64, x: &[C64], q: usize) -> Result<f64> {
    let (model, rest) = torus_diagonal_parts(spec, u, p, x, q)?;
    let n = spec.dimension() as i32;
    Ok((model.to_complex() + rest.to_complex()).re * (p as f64).powi(n))
}

/// Model data at a point of a flat catalog model.
fn flat_model_data(spec: &CatalogSpec, u: f64) -> Result<ModelPointData> {
    match spec {
        CatalogSpec::LocalModel { curvature, rank, .. } => ModelPointData::new(curvature.clone(), *rank, u),
        CatalogSpec::Torus { degrees, rank, ripple, .. } if *ripple == 0.0 => {
            ModelPointData::new(degrees.iter().map(|&d| 2.0 * PI * d as f64).collect(), *rank, u)
        }
        _ => Err(Error::UnsupportedModel(format!("{} is not a flat model", spec.id()))),
    }
}

/// `p^{-n}` times the diagonal kernel minus `𝓛im_u`, in the log domain.
fn regular_error(spec: &CatalogSpec, u: f64, p: u64, x: &[C64], q: usize) -> Result<LogComplex> {
    match spec {
        CatalogSpec::LocalModel { .. } => local_image_sum(spec, u, p, x, q, true),
        _ => Ok(torus_diagonal_parts(spec, u, p, x, q)?.1),
    }
}

// ---------------------------------------------------------------------------
// Rate fits

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub reliable: bool,
    pub points: usize,
}

/// Least squares of `log_err` against `ln p`.
pub fn fit_rate(p_values: &[u64], log_err: &[f64]) -> Result<RateFit> {
    if p_values.len() != log_err.len() {
        return Err(Error::Inconsistent("fit inputs differ in length".into()));
    }
    let pts: Vec<(f64, f64)> = p_values
        .iter()
        .zip(log_err)
        .filter(|(_, e)| e.is_finite())
        .map(|(&p, &e)| ((p as f64).ln(), e))
        .collect();
    if pts.len() < 2 {
        return Err(Error::Missing("a rate fit needs at least two finite errors".into()));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("all powers are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Ok(RateFit { slope, intercept, r_squared, reliable: r_squared >= 0.9, points: pts.len() })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct KernelRecord {
    pub point: Vec<[f64; 2]>,
    pub u: f64,
    pub p: u64,
    pub q: usize,
    /// `ln err(p)`; finite even when `err` underflows.
    pub log_error: f64,
    pub error: f64,
    /// `ln(C p^{-1/2})` with `C` fixed by the first two powers.
    pub log_bound: f64,
    pub within_bound: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularReport {
    pub catalog_id: String,
    pub singular_distance: f64,
    pub records: Vec<KernelRecord>,
    pub fit: RateFit,
    /// Slope at most `-0.5 + 0.1`.
    pub pass: bool,
}

fn encode_point(x: &[C64]) -> Vec<[f64; 2]> {
    x.iter().map(|z| [z.re, z.im]).collect()
}

/// Smallest admissible distance from the singular locus for the regular
/// check.
pub const DEFAULT_REGULAR_DISTANCE: f64 = 0.5;

/// `err(p) = |p^{-n} e^{-u□_p/p}(x,x) - 𝓛im_u(x)|` over `p_values` and its
/// log-log slope.
pub fn verify_kernel_asymptotics_regular(
    spec: &CatalogSpec,
    x: &[C64],
    u: f64,
    p_values: &[u64],
    q: usize,
    min_distance: f64,
) -> Result<RegularReport> {
    flat_model_data(spec, u)?;
    let (orb, _) = build_catalog_orbifold(spec)?;
    let distance = orb.singular_distance(&ChartPoint::new(0, x.to_vec()));
    if distance < min_distance {
        return Err(Error::Refused(format!(
            "point is at distance {distance:.3e} from the singular locus, below {min_distance}"
        )));
    }
    let errors: Vec<LogComplex> = p_values
        .par_iter()
        .map(|&p| regular_error(spec, u, p, x, q))
        .collect::<Result<Vec<_>>>()?;
    let log_err: Vec<f64> = errors.iter().map(|e| e.log_modulus).collect();
    let fit = fit_rate(p_values, &log_err)?;
    let envelope = log_err
        .iter()
        .zip(p_values)
        .take(2)
        .map(|(e, &p)| e + 0.5 * (p as f64).ln())
        .fold(f64::NEG_INFINITY, f64::max);
    let records = p_values
        .iter()
        .zip(&log_err)
        .map(|(&p, &le)| {
            let log_bound = envelope - 0.5 * (p as f64).ln();
            KernelRecord {
                point: encode_point(x),
                u,
                p,
                q,
                log_error: le,
                error: le.exp(),
                log_bound,
                within_bound: le <= log_bound + 1e-12,
            }
        })
        .collect();
    Ok(RegularReport {
        catalog_id: spec.id().to_string(),
        singular_distance: distance,
        records,
        pass: fit.slope <= -0.4,
        fit,
    })
}

// ---------------------------------------------------------------------------
// Near the singular locus

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SingularRecord {
    pub point: Vec<[f64; 2]>,
    pub u: f64,
    pub p: u64,
    pub q: usize,
    /// `p^{-n}` times the diagonal kernel (image-sum oracle).
    pub kernel: f64,
    pub lim: f64,
    /// `𝓛im_u` plus the twisted Gaussian corrections.
    pub expansion: f64,
    pub residual_with_correction: f64,
    pub residual_without_correction: f64,
    /// `residual_without / residual_with`, capped at `1e300`.
    pub shrink_factor: f64,
    pub correction_modulus: f64,
}

/// Compares the image-sum kernel near `Z = 0` on `C^n/Z_k` with the corrected
/// expansion `𝓛im_u + Σ_{g≠1} e^{ipθ_g} tr(g^E) tr(Λ^q(g) e^{uω}) (2π)^{-n} Π mode · 𝓔_g(u, √p Z_2)`.
pub fn verify_kernel_asymptotics_singular(
    spec: &CatalogSpec,
    z: &[C64],
    u: f64,
    p_values: &[u64],
    q: usize,
) -> Result<Vec<SingularRecord>> {
    let m = local_model(spec)?;
    check_point(z, m.curvature.len())?;
    let radius = match spec {
        CatalogSpec::LocalModel { radius, .. } => *radius,
        _ => unreachable!("local_model accepted the spec"),
    };
    if norm(z) >= radius / 2.0 {
        return Err(Error::Refused(format!("|Z| = {} is not below ε/2 = {}", norm(z), radius / 2.0)));
    }
    let data = ModelPointData::new(m.curvature.clone(), m.rank, u)?;
    let lim = lim_u(&data, q)?;
    p_values
        .par_iter()
        .map(|&p| {
            let kernel = local_image_sum(spec, u, p, z, q, false)?.to_complex().re;
            let sp = (p as f64).sqrt();
            let mut correction = c(0.0, 0.0);
            for g in m.group.iter().filter(|g| !g.acts_trivially(1e-12)) {
                let (_, normal) = g.split_fixed_normal(z);
                let scaled: Vec<C64> = normal.iter().map(|w| w * sp).collect();
                let twist = gaussian_twist(&data, g.matrix(), &scaled)?;
                let coefficient = twisted_form_trace(&m.curvature, u, g.matrix(), q)?
                    * g.aux_action().trace()
                    * C64::from_polar(1.0, p as f64 * g.line_phase())
                    * prefactor(&m.curvature, u);
                correction += coefficient * twist;
            }
            let expansion = lim + correction.re;
            let with = (kernel - expansion).abs();
            let without = (kernel - lim).abs();
            Ok(SingularRecord {
                point: encode_point(z),
                u,
                p,
                q,
                kernel,
                lim,
                expansion,
                residual_with_correction: with,
                residual_without_correction: without,
                shrink_factor: (without / with.max(1e-300)).min(1e300),
                correction_modulus: correction.norm(),
            })
        })
        .collect()
}

/// `p^{-n} e^{-u□_p/p}(x,x) / 𝓛im_u(x)` at a point of a flat model.
pub fn singular_diagonal_factor(spec: &CatalogSpec, x: &[C64], u: f64, p: u64, q: usize) -> Result<f64> {
    let data = flat_model_data(spec, u)?;
    let lim = lim_u(&data, q)?;
    if lim == 0.0 {
        return Err(Error::Degenerate("𝓛im_u vanishes at this degree".into()));
    }
    let kernel = match spec {
        CatalogSpec::LocalModel { .. } => local_image_sum(spec, u, p, x, q, false)?.to_complex().re,
        _ => {
            let (model, rest) = torus_diagonal_parts(spec, u, p, x, q)?;
            (model.to_complex() + rest.to_complex()).re
        }
    };
    Ok(kernel / lim)
}

// ---------------------------------------------------------------------------
// Report

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MorseReport {
    pub catalog_id: String,
    pub strong: Vec<MorseSeries>,
    pub regular: Vec<RegularReport>,
    pub singular: Vec<SingularRecord>,
}

impl MorseReport {
    pub fn new(catalog_id: &str) -> Self {
        Self { catalog_id: catalog_id.to_string(), strong: vec![], regular: vec![], singular: vec![] }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Plot-ready `(q, p, residual, tolerance)` rows.
    pub fn write_residual_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["q", "p", "residual", "tolerance"])?;
        for s in &self.strong {
            for pt in &s.points {
                w.write_record([s.q.to_string(), pt.p.to_string(), format!("{:.12e}", pt.rho), format!("{:.6e}", pt.tolerance)])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
