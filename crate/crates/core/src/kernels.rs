//! Closed-form model heat kernels for constant curvature on `C^n`.
//!
//! The model operator on `C^n` with curvature eigenvalues `a_j` is the
//! Kodaira Laplacian of the trivial bundle with connection `d - iA`,
//! `A = Σ_j (a_j/2)(x_j dy_j - y_j dx_j)`. On `(0,q)`-forms it acts as
//! `½Δ_A - τ/2 + Σ_{j∈J} a_j` on the component `dz̄_J`, where `τ = Σ a_j`.
//! Its heat kernel is the Mehler kernel
//!
//! ```text
//! K_u(x, y) = Π_j a_j / (2π (1 - e^{-u a_j}))
//!           · exp(Σ_j -(a_j/4) coth(u a_j/2) |x_j - y_j|^2 - i (a_j/2) Im(x̄_j y_j))
//!           · e^{-u Σ_{j∈J} a_j}
//! ```
//!
//! with the analytic limit `1/(2πu) e^{-|x_j-y_j|^2/(2u)}` for `a_j = 0`.
//!
//! On real vectors `(Re Z, Im Z)` the extension of `Ṙ` to the complexified
//! tangent space acts on each eigenline by `a_j J`, with `J` the rotation by
//! a right angle, so its doubled spectrum is `±i a_j`. The even functions
//! `x coth(ux/2)` and `x / sinh(ux/2)` of this operator are the scalars
//! `a_j coth(u a_j/2)` and `a_j / sinh(u a_j/2)` on each real plane, while the
//! odd part `sinh(uṘ/2)` contributes the rotation that turns the real pairing
//! `<g^{-1}Z, J Z>` into `Im(w̄ Z)`. All quadratic forms below are written in
//! that reduced complex form.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c, elementary_symmetric, max_abs, real_diag, CMat, C64};
use crate::orbifold::GroupElement;

pub const ZERO_MODE_TOL: f64 = 1e-7;
pub const SERIES_TOL: f64 = 1e-4;
/// Series evaluation is used only while `|u a|` stays below this value.
pub const SERIES_WINDOW: f64 = 0.1;

/// Pointwise data of a model: curvature eigenvalues in the coordinate frame,
/// auxiliary rank and time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelPointData {
    pub eigenvalues: Vec<f64>,
    pub aux_rank: usize,
    pub u: f64,
}

impl ModelPointData {
    pub fn new(eigenvalues: Vec<f64>, aux_rank: usize, u: f64) -> Result<Self> {
        if !(u > 0.0) || !u.is_finite() {
            return Err(Error::Config(format!("time u must be positive, got {u}")));
        }
        if aux_rank == 0 {
            return Err(Error::Config("auxiliary rank must be at least 1".into()));
        }
        if eigenvalues.iter().any(|a| !a.is_finite()) {
            return Err(Error::Config("curvature eigenvalues must be finite".into()));
        }
        Ok(Self { eigenvalues, aux_rank, u })
    }

    pub fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Same point with every eigenvalue multiplied by `p` and `u` divided by
    /// `p`.
    pub fn rescaled(&self, p: f64) -> Self {
        Self {
            eigenvalues: self.eigenvalues.iter().map(|a| a * p).collect(),
            aux_rank: self.aux_rank,
            u: self.u / p,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModeBranch {
    Zero,
    Series,
    Direct,
}

pub fn mode_branch(a: f64, u: f64) -> ModeBranch {
    if a.abs() <= ZERO_MODE_TOL {
        ModeBranch::Zero
    } else if a.abs() <= SERIES_TOL && (u * a).abs() <= SERIES_WINDOW {
        ModeBranch::Series
    } else {
        ModeBranch::Direct
    }
}

/// `a / (1 - e^{-ua})` without the branch switch.
pub fn mode_factor_direct(a: f64, u: f64) -> f64 {
    a / -(-u * a).exp_m1()
}

/// `a / (1 - e^{-ua})`, equal to `1/u` on zero modes.
pub fn mode_factor(a: f64, u: f64) -> f64 {
    match mode_branch(a, u) {
        ModeBranch::Zero => 1.0 / u,
        ModeBranch::Series => {
            let x = u * a;
            let x2 = x * x;
            (1.0 + x / 2.0 + x2 / 12.0 - x2 * x2 / 720.0) / u
        }
        ModeBranch::Direct => mode_factor_direct(a, u),
    }
}

/// `(a/2) coth(ua/2)`, equal to `1/u` on zero modes.
pub fn gaussian_coefficient(a: f64, u: f64) -> f64 {
    match mode_branch(a, u) {
        ModeBranch::Zero => 1.0 / u,
        ModeBranch::Series => {
            let x2 = (u * a).powi(2);
            (1.0 + x2 / 12.0 - x2 * x2 / 720.0) / u
        }
        ModeBranch::Direct => 0.5 * a / (0.5 * u * a).tanh(),
    }
}

/// `(a/2) / sinh(ua/2)`, equal to `1/u` on zero modes.
pub fn gaussian_cross_coefficient(a: f64, u: f64) -> f64 {
    match mode_branch(a, u) {
        ModeBranch::Zero => 1.0 / u,
        ModeBranch::Series => {
            let x2 = (u * a).powi(2);
            (1.0 - x2 / 24.0 + 7.0 * x2 * x2 / 5760.0) / u
        }
        ModeBranch::Direct => 0.5 * a / (0.5 * u * a).sinh(),
    }
}

/// `e_q(e^{-u a_1}, ..., e^{-u a_n})`: the trace of `e^{u ω_d}` on `Λ^{0,q}`.
pub fn trace_q_exp_omega(a: &[f64], u: f64, q: usize) -> Result<f64> {
    let n = a.len();
    if q > n {
        return Err(Error::DegreeOutOfRange { q, n });
    }
    let x: Vec<f64> = a.iter().map(|aj| (-u * aj).exp()).collect();
    Ok(elementary_symmetric(&x)[q])
}

/// Log of the scalar prefactor `Π_j mode_factor(a_j, u) / 2π`.
pub fn log_prefactor(a: &[f64], u: f64) -> f64 {
    a.iter().map(|&aj| (mode_factor(aj, u) / (2.0 * PI)).ln()).sum()
}

/// `Π_j mode_factor(a_j, u) / 2π`.
pub fn prefactor(a: &[f64], u: f64) -> f64 {
    a.iter().map(|&aj| mode_factor(aj, u) / (2.0 * PI)).product()
}

/// Scalar trace of the limit kernel on `Λ^{0,q} ⊗ E`.
pub fn lim_u(data: &ModelPointData, q: usize) -> Result<f64> {
    let tr = trace_q_exp_omega(&data.eigenvalues, data.u, q)?;
    Ok(prefactor(&data.eigenvalues, data.u) * tr * data.aux_rank as f64)
}

/// Ordered `q`-subsets of `0..n`; the basis `dz̄_J` of `Λ^{0,q}`.
pub fn form_basis(n: usize, q: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() as usize == q {
            out.push((0..n).filter(|i| mask & (1 << i) != 0).collect());
        }
    }
    out.sort();
    out
}

/// Diagonal matrix of `e^{u ω_d}` on `Λ^{0,q}`.
pub fn form_factor(a: &[f64], u: f64, q: usize) -> Result<CMat> {
    let n = a.len();
    if q > n {
        return Err(Error::DegreeOutOfRange { q, n });
    }
    let values: Vec<f64> = form_basis(n, q)
        .iter()
        .map(|j| (-u * j.iter().map(|&k| a[k]).sum::<f64>()).exp())
        .collect();
    Ok(real_diag(&values))
}

/// Induced action of a linear map on `Λ^{0,q}` in the basis `dz̄_J`.
pub fn exterior_power(m: &CMat, q: usize) -> CMat {
    let basis = form_basis(m.nrows(), q);
    let d = basis.len();
    CMat::from_fn(d, d, |r, s| {
        if q == 0 {
            return c(1.0, 0.0);
        }
        let sub = CMat::from_fn(q, q, |i, j| m[(basis[r][i], basis[s][j])]);
        sub.determinant()
    })
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (ra, ca) = a.shape();
    let (rb, cb) = b.shape();
    CMat::from_fn(ra * rb, ca * cb, |i, j| a[(i / rb, j / cb)] * b[(i % rb, j % cb)])
}

/// Matrix form of the limit kernel on `Λ^{0,q} ⊗ E`.
pub fn lim_u_matrix(data: &ModelPointData, q: usize) -> Result<CMat> {
    let forms = form_factor(&data.eigenvalues, data.u, q)?;
    let scale = prefactor(&data.eigenvalues, data.u);
    Ok(kron(&forms, &CMat::identity(data.aux_rank, data.aux_rank)).scale(scale))
}

/// Exponent of the Mehler kernel between two points (without prefactor).
pub fn kernel_exponent(a: &[f64], u: f64, x: &[C64], y: &[C64]) -> C64 {
    let mut e = c(0.0, 0.0);
    for (j, &aj) in a.iter().enumerate() {
        let coeff = 0.5 * gaussian_coefficient(aj, u);
        e += c(-coeff * (x[j] - y[j]).norm_sqr(), -0.5 * aj * (x[j].conj() * y[j]).im);
    }
    e
}

fn check_commutes(a: &[f64], g: &CMat) -> Result<()> {
    if g.nrows() != a.len() || g.ncols() != a.len() {
        return Err(Error::Inconsistent("group matrix does not match the dimension".into()));
    }
    let d = real_diag(a);
    let scale = 1.0 + a.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    if max_abs(&(&d * g - g * &d)) > 1e-10 * scale {
        return Err(Error::Inconsistent("group matrix does not commute with the curvature".into()));
    }
    Ok(())
}

/// Twisted Gaussian `𝓔_g(u, Z)` for `Z` in the normal directions of `g`.
///
/// The value is `exp(-Z^* C Z + Re(w^* S cosh(uṘ/2) Z) - i Im(w^* S sinh(uṘ/2) Z))`
/// with `w = g^{-1} Z`, `C = (Ṙ/2) coth(uṘ/2)` and `S = (Ṙ/2)/sinh(uṘ/2)`.
/// It is complex whenever `g` is not real; its modulus is at most one.
pub fn gaussian_twist(data: &ModelPointData, g: &CMat, z: &[C64]) -> Result<Complex64> {
    let a = &data.eigenvalues;
    check_commutes(a, g)?;
    let u = data.u;
    let w: Vec<C64> = (0..a.len())
        .map(|i| (0..a.len()).map(|j| g[(j, i)].conj() * z[j]).sum())
        .collect();
    let mut e = c(0.0, 0.0);
    for (j, &aj) in a.iter().enumerate() {
        let cj = gaussian_coefficient(aj, u);
        let sj = gaussian_cross_coefficient(aj, u);
        let pair = w[j].conj() * z[j];
        let (ch, sh) = if mode_branch(aj, u) == ModeBranch::Zero {
            (1.0, 0.0)
        } else {
            ((0.5 * u * aj).cosh(), (0.5 * u * aj).sinh())
        };
        // sj * ch equals cj and sj * sh equals aj/2; the products are formed
        // directly to stay finite when sinh overflows.
        let re = if ch.is_finite() { sj * ch } else { cj };
        let im = if sh.is_finite() && sj != 0.0 { sj * sh } else { 0.5 * aj };
        e += c(-cj * z[j].norm_sqr() + re * pair.re, -im * pair.im);
    }
    Ok(e.exp())
}

/// Model heat kernel `(g, 1) e^{-u𝓛}(g^{-1} Z, Z')` on `Λ^{0,q} ⊗ E`.
///
/// The group element acts on the line by `e^{i line_power θ_g}`, on forms by
/// the induced action of its matrix and on `E` by its auxiliary action.
pub fn model_heat_kernel(
    data: &ModelPointData,
    g: Option<&GroupElement>,
    line_power: i64,
    z: &[C64],
    zp: &[C64],
    q: usize,
) -> Result<CMat> {
    let n = data.dimension();
    if z.len() != n || zp.len() != n {
        return Err(Error::Inconsistent("point dimension mismatch".into()));
    }
    let forms = form_factor(&data.eigenvalues, data.u, q)?;
    let (w, form_action, aux, phase) = match g {
        Some(g) => {
            check_commutes(&data.eigenvalues, g.matrix())?;
            if g.aux_action().nrows() != data.aux_rank {
                return Err(Error::Inconsistent("auxiliary action rank mismatch".into()));
            }
            (
                g.act_inverse(z),
                exterior_power(g.matrix(), q) * forms,
                g.aux_action().clone(),
                C64::from_polar(1.0, line_power as f64 * g.line_phase()),
            )
        }
        None => (z.to_vec(), forms, CMat::identity(data.aux_rank, data.aux_rank), c(1.0, 0.0)),
    };
    let scalar = kernel_exponent(&data.eigenvalues, data.u, &w, zp).exp()
        * prefactor(&data.eigenvalues, data.u)
        * phase;
    Ok(kron(&form_action, &aux) * scalar)
}

/// Scalar part of the model kernel as `(log modulus, phase)`.
pub fn log_kernel_scalar(a: &[f64], u: f64, x: &[C64], y: &[C64]) -> (f64, f64) {
    let e = kernel_exponent(a, u, x, y);
    (log_prefactor(a, u) + e.re, e.im)
}

/// `tr_{Λ^{0,q}}(Λ^q(g) e^{u ω_d})`.
pub fn twisted_form_trace(a: &[f64], u: f64, g: &CMat, q: usize) -> Result<C64> {
    let forms = form_factor(a, u, q)?;
    Ok((exterior_power(g, q) * forms).trace())
}

/// `(2π)^{-n} det(Ṙ) tr_q / det(1 - e^{-uṘ})`, the rank-one scalar limit
/// kernel at time `u`.
pub fn u_integrand(a: &[f64], u: f64, q: usize) -> Result<f64> {
    lim_u(&ModelPointData::new(a.to_vec(), 1, u)?, q)
}

/// Limit of [`u_integrand`] as `u -> ∞`: `(-1)^q 1[signature = q] Π a_j/2π`.
pub fn limit_u_infinity(a: &[f64], q: usize) -> Result<f64> {
    let n = a.len();
    if q > n {
        return Err(Error::DegreeOutOfRange { q, n });
    }
    if a.iter().any(|x| x.abs() <= ZERO_MODE_TOL) {
        return Err(Error::Degenerate(format!("eigenvalues {a:?} contain a zero mode")));
    }
    let negatives = a.iter().filter(|&&x| x < 0.0).count();
    if negatives != q {
        return Ok(0.0);
    }
    let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * a.iter().map(|x| x / (2.0 * PI)).product::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::gauss_legendre_on;
    use proptest::prelude::*;

    fn laguerre(k: usize, x: f64) -> f64 {
        let (mut l0, mut l1) = (1.0, 1.0 - x);
        if k == 0 {
            return l0;
        }
        for j in 1..k {
            let jf = j as f64;
            let l2 = ((2.0 * jf + 1.0 - x) * l1 - jf * l0) / (jf + 1.0);
            l0 = l1;
            l1 = l2;
        }
        l1
    }

    /// Landau-level expansion of the degree-zero kernel for `a > 0` in one
    /// dimension: `Σ_k e^{-uak} P_k(z, w)`.
    fn landau_kernel(a: f64, u: f64, z: C64, w: C64) -> C64 {
        let r2 = (z - w).norm_sqr();
        let mut s = 0.0;
        for k in 0..400 {
            s += (-u * a * k as f64).exp() * laguerre(k, a * r2 / 2.0);
        }
        let phase = C64::from_polar(1.0, -0.5 * a * (z.conj() * w).im);
        phase * (a / (2.0 * PI)) * (-a * r2 / 4.0).exp() * s
    }

    #[test]
    fn trace_examples() {
        assert_eq!(trace_q_exp_omega(&[0.3, 1.0], 2.0, 0).unwrap(), 1.0);
        assert!((trace_q_exp_omega(&[0.7], 1.3, 1).unwrap() - (-0.91f64).exp()).abs() < 1e-15);
        let v = trace_q_exp_omega(&[1.0, 2.0], 1.0, 1).unwrap();
        assert!((v - ((-1.0f64).exp() + (-2.0f64).exp())).abs() < 1e-15);
        assert!(matches!(trace_q_exp_omega(&[1.0], 1.0, 2), Err(Error::DegreeOutOfRange { .. })));
    }

    #[test]
    fn lim_u_examples() {
        let d = ModelPointData::new(vec![0.0], 1, 2.0).unwrap();
        assert!((lim_u(&d, 0).unwrap() - 1.0 / (2.0 * PI * 2.0)).abs() < 1e-15);
        let d = ModelPointData::new(vec![1.0], 1, 1.0).unwrap();
        let v = lim_u(&d, 0).unwrap();
        let expected = 1.0 / (2.0 * PI * (1.0 - (-1.0f64).exp()));
        assert!((v - expected).abs() < 1e-15, "{v}");
        assert!((v - 0.251_779).abs() < 1e-6);
        let d3 = ModelPointData::new(vec![1.0], 3, 1.0).unwrap();
        assert!((lim_u(&d3, 0).unwrap() - 3.0 * v).abs() < 1e-15);
    }

    #[test]
    fn limit_examples() {
        let v = limit_u_infinity(&[1.0, 2.0], 0).unwrap();
        assert!((v - 0.050_660).abs() < 1e-6);
        assert_eq!(limit_u_infinity(&[-1.0, 2.0], 0).unwrap(), 0.0);
        let v = limit_u_infinity(&[-1.0, 2.0], 1).unwrap();
        assert!((v - 2.0 / (4.0 * PI * PI)).abs() < 1e-15);
        assert!(matches!(limit_u_infinity(&[0.0, 1.0], 0), Err(Error::Degenerate(_))));
    }

    #[test]
    fn twist_zero_mode_example() {
        let d = ModelPointData::new(vec![0.0], 1, 1.0).unwrap();
        let g = real_diag(&[-1.0]);
        let z = c(0.4, -0.3);
        let e = gaussian_twist(&d, &g, &[z]).unwrap();
        assert!((e - c((-2.0 * z.norm_sqr()).exp(), 0.0)).norm() < 1e-15);
        assert_eq!(gaussian_twist(&d, &g, &[c(0.0, 0.0)]).unwrap(), c(1.0, 0.0));
    }

    #[test]
    fn twist_matches_landau_series() {
        let d = ModelPointData::new(vec![1.0], 1, 1.0).unwrap();
        let z = c(1.0, 0.0);
        let oracle = landau_kernel(1.0, 1.0, -z, z) / landau_kernel(1.0, 1.0, c(0.0, 0.0), c(0.0, 0.0));
        let e = gaussian_twist(&d, &real_diag(&[-1.0]), &[z]).unwrap();
        assert!((e - oracle).norm() < 1e-12, "{e} vs {oracle}");
    }

    #[test]
    fn z3_twist_is_complex_and_matches_series() {
        let d = ModelPointData::new(vec![0.8], 1, 0.7).unwrap();
        let zeta = C64::from_polar(1.0, 2.0 * PI / 3.0);
        let g = CMat::from_element(1, 1, zeta);
        let z = c(0.5, 0.9);
        let e = gaussian_twist(&d, &g, &[z]).unwrap();
        let w = zeta.conj() * z;
        let oracle = landau_kernel(0.8, 0.7, w, z) / landau_kernel(0.8, 0.7, c(0.0, 0.0), c(0.0, 0.0));
        assert!(e.im.abs() > 1e-3);
        assert!((e - oracle).norm() < 1e-12);
    }

    #[test]
    fn kernel_matches_landau_series_off_diagonal() {
        let d = ModelPointData::new(vec![1.3], 1, 0.9).unwrap();
        let (x, y) = (c(0.2, -0.4), c(-0.5, 0.3));
        let k = model_heat_kernel(&d, None, 1, &[x], &[y], 0).unwrap()[(0, 0)];
        let oracle = landau_kernel(1.3, 0.9, x, y);
        assert!((k - oracle).norm() < 1e-12 * oracle.norm().max(1.0));
    }

    #[test]
    fn kernel_at_origin_equals_lim_matrix() {
        let d = ModelPointData::new(vec![0.5, -1.5], 2, 0.8).unwrap();
        let zero = [c(0.0, 0.0), c(0.0, 0.0)];
        for q in 0..=2 {
            let k = model_heat_kernel(&d, None, 1, &zero, &zero, q).unwrap();
            assert!(max_abs(&(k - lim_u_matrix(&d, q).unwrap())) < 1e-15);
        }
    }

    #[test]
    fn flat_kernel_is_euclidean_heat_kernel() {
        let d = ModelPointData::new(vec![0.0], 1, 0.6).unwrap();
        let (x, y) = (c(0.3, 0.1), c(-0.2, 0.4));
        let k = model_heat_kernel(&d, None, 1, &[x], &[y], 0).unwrap()[(0, 0)];
        let expected = (-(x - y).norm_sqr() / (2.0 * 0.6)).exp() / (2.0 * PI * 0.6);
        assert!((k - c(expected, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn semigroup_composition_by_quadrature() {
        let a = 1.0;
        let (s, t) = (0.4, 0.7);
        let ks = ModelPointData::new(vec![a], 1, s).unwrap();
        let kt = ModelPointData::new(vec![a], 1, t).unwrap();
        let kst = ModelPointData::new(vec![a], 1, s + t).unwrap();
        let (x, y) = (c(0.3, -0.2), c(-0.1, 0.5));
        let (nodes, weights) = gauss_legendre_on(120, -7.0, 7.0);
        let mut total = c(0.0, 0.0);
        for (xi, wi) in nodes.iter().zip(&weights) {
            for (yj, wj) in nodes.iter().zip(&weights) {
                let z = c(*xi, *yj);
                let a1 = model_heat_kernel(&ks, None, 1, &[x], &[z], 0).unwrap()[(0, 0)];
                let a2 = model_heat_kernel(&kt, None, 1, &[z], &[y], 0).unwrap()[(0, 0)];
                total += a1 * a2 * wi * wj;
            }
        }
        let direct = model_heat_kernel(&kst, None, 1, &[x], &[y], 0).unwrap()[(0, 0)];
        assert!((total - direct).norm() / direct.norm() < 1e-4);
    }

    #[test]
    fn rescaling_identity() {
        let d = ModelPointData::new(vec![0.7, 1.1], 1, 1.0).unwrap();
        let p = 16.0;
        let x = [c(0.05, 0.02), c(-0.03, 0.01)];
        let y = [c(0.01, -0.04), c(0.02, 0.02)];
        let big = model_heat_kernel(&d.rescaled(p), None, 1, &x, &y, 0).unwrap()[(0, 0)];
        let sx: Vec<C64> = x.iter().map(|v| v * p.sqrt()).collect();
        let sy: Vec<C64> = y.iter().map(|v| v * p.sqrt()).collect();
        let small = model_heat_kernel(&d, None, 1, &sx, &sy, 0).unwrap()[(0, 0)];
        assert!((big - small * p * p).norm() < 1e-10 * big.norm());
    }

    #[test]
    fn reflection_acts_by_minus_one_on_one_forms() {
        let g = GroupElement::root_of_unity(2, 1, &[1], 0.0, 1);
        let d = ModelPointData::new(vec![1.0], 1, 1.0).unwrap();
        let zero = [c(0.0, 0.0)];
        let k1 = model_heat_kernel(&d, Some(&g), 1, &zero, &zero, 1).unwrap()[(0, 0)];
        let lim = lim_u_matrix(&d, 1).unwrap()[(0, 0)];
        assert!((k1 + lim).norm() < 1e-15);
    }

    #[test]
    fn non_commuting_group_is_rejected() {
        let d = ModelPointData::new(vec![1.0, 2.0], 1, 1.0).unwrap();
        let swap = CMat::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        assert!(gaussian_twist(&d, &swap, &[c(0.1, 0.0), c(0.2, 0.0)]).is_err());
    }

    #[test]
    fn limit_is_approached_monotonically() {
        for (a, q) in [(vec![1.0, 2.0], 0usize), (vec![-1.0, 2.0], 1), (vec![-0.5], 1)] {
            let lim = limit_u_infinity(&a, q).unwrap();
            let amin = a.iter().fold(f64::INFINITY, |m, x| m.min(x.abs()));
            let mut prev = f64::INFINITY;
            for k in 0..20 {
                let u = 10.0 / amin * (1.0 + k as f64);
                let err = (u_integrand(&a, u, q).unwrap() - lim).abs();
                assert!(err <= prev + 1e-14 * lim.abs(), "{a:?} q={q} u={u}");
                prev = err;
            }
            assert!(prev < 1e-12);
        }
    }

    #[test]
    fn series_branch_is_continuous_across_switches() {
        for u in [0.5, 1.0, 10.0, 200.0] {
            for a in [1.0001e-7, 5e-6, 9.9e-5, 1.0001e-4] {
                for s in [1.0, -1.0] {
                    let a = s * a;
                    let direct = mode_factor_direct(a, u);
                    assert!((mode_factor(a, u) - direct).abs() <= 1e-10 * direct.abs());
                    let g = 0.5 * a / (0.5 * u * a).tanh();
                    assert!((gaussian_coefficient(a, u) - g).abs() <= 1e-10 * g.abs());
                    let h = 0.5 * a / (0.5 * u * a).sinh();
                    assert!((gaussian_cross_coefficient(a, u) - h).abs() <= 1e-10 * h.abs());
                }
            }
        }
    }

    proptest! {
        #[test]
        fn alternating_traces_factor(a in prop::collection::vec(-3.0f64..3.0, 1..6), u in 0.01f64..5.0) {
            let n = a.len();
            let mut alt = 0.0;
            for q in 0..=n {
                let sign = if q % 2 == 0 { 1.0 } else { -1.0 };
                alt += sign * trace_q_exp_omega(&a, u, q).unwrap();
            }
            let prod: f64 = a.iter().map(|x| 1.0 - (-u * x).exp()).product();
            prop_assert!((alt - prod).abs() <= 1e-12 * (1.0 + prod.abs()));
        }

        #[test]
        fn twist_modulus_bounded(a in 0.0f64..3.0, u in 0.05f64..5.0, re in -2.0f64..2.0, im in -2.0f64..2.0, k in 2u32..6) {
            let d = ModelPointData::new(vec![a], 1, u).unwrap();
            let g = CMat::from_element(1, 1, C64::from_polar(1.0, 2.0 * PI / k as f64));
            let e = gaussian_twist(&d, &g, &[c(re, im)]).unwrap();
            prop_assert!(e.norm() <= 1.0 + 1e-15);
            if re * re + im * im > 1e-6 {
                prop_assert!(e.norm() < 1.0);
            }
        }

        #[test]
        fn lim_positive_at_signature(a in prop::collection::vec(prop_oneof![-3.0f64..-0.1, 0.1f64..3.0], 1..4), u in 0.1f64..10.0) {
            let q = a.iter().filter(|&&x| x < 0.0).count();
            let d = ModelPointData::new(a, 1, u).unwrap();
            prop_assert!(lim_u(&d, q).unwrap() > 0.0);
        }
    }
}
