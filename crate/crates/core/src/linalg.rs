//! Small dense complex linear algebra used by the geometry and kernel code.
//!
//! Matrices here are at most a few dozen rows, so everything goes through
//! nalgebra's dense routines.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real_diag(values: &[f64]) -> CMat {
    let n = values.len();
    CMat::from_fn(n, n, |i, j| if i == j { c(values[i], 0.0) } else { c(0.0, 0.0) })
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
}

pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    m.is_square() && max_abs(&(m - m.adjoint())) <= tol
}

pub fn is_unitary(m: &CMat, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let n = m.nrows();
    max_abs(&(m.adjoint() * m - CMat::identity(n, n))) <= tol
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian matrix.
///
/// Eigenvalues come back sorted ascending. Each eigenvector is rescaled by a
/// unit phase so that its first component of modulus above 1e-12 is real and
/// positive, which makes the output reproducible.
pub fn hermitian_eigen(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    let eig = hermitian_part(m).symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (col, &k) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let pivot = v.iter().find(|z| z.norm() > 1e-12).copied().unwrap_or(c(1.0, 0.0));
        let phase = pivot.conj() / pivot.norm();
        for row in 0..n {
            vectors[(row, col)] = v[row] * phase;
        }
    }
    (values, vectors)
}

pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    hermitian_eigen(m).0
}

/// Applies a real scalar function to a Hermitian matrix through its
/// eigen-decomposition.
pub fn hermitian_function(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (values, vectors) = hermitian_eigen(m);
    let n = values.len();
    let mut d = CMat::zeros(n, n);
    for (i, &v) in values.iter().enumerate() {
        d[(i, i)] = c(f(v), 0.0);
    }
    &vectors * d * vectors.adjoint()
}

/// Expresses the endomorphism `metric^{-1} form` in a metric-orthonormal frame.
///
/// With `metric = L L^*` (Cholesky) the result is `L^{-1} form L^{-*}`, which is
/// Hermitian whenever `form` is.
pub fn orthonormal_endomorphism(metric: &CMat, form: &CMat) -> Result<CMat> {
    let sym = hermitian_part(metric);
    let smallest = sym.clone().symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
    if !(smallest > 0.0) {
        return Err(Error::Geometry("metric is not positive definite".into()));
    }
    let chol = sym
        .cholesky()
        .ok_or_else(|| Error::Geometry("metric is not positive definite".into()))?;
    let l = chol.l();
    let l_inv = l
        .clone()
        .try_inverse()
        .ok_or_else(|| Error::Geometry("metric factor is singular".into()))?;
    Ok(hermitian_part(&(&l_inv * form * l_inv.adjoint())))
}

/// Sum of the principal minors of order `q`, i.e. the trace of the induced
/// action on the `q`-th exterior power.
pub fn exterior_power_trace(m: &CMat, q: usize) -> C64 {
    let n = m.nrows();
    if q == 0 {
        return c(1.0, 0.0);
    }
    if q > n {
        return c(0.0, 0.0);
    }
    let mut total = c(0.0, 0.0);
    for mask in 0u32..(1u32 << n) {
        if mask.count_ones() as usize != q {
            continue;
        }
        let idx: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let sub = CMat::from_fn(q, q, |i, j| m[(idx[i], idx[j])]);
        total += sub.determinant();
    }
    total
}

/// Elementary symmetric polynomials e_0..e_n of the given values.
pub fn elementary_symmetric(values: &[f64]) -> Vec<f64> {
    let mut e = vec![0.0; values.len() + 1];
    e[0] = 1.0;
    for (k, &x) in values.iter().enumerate() {
        for j in (1..=k + 1).rev() {
            e[j] += e[j - 1] * x;
        }
    }
    e
}

/// Numerical rank of a real matrix: singular values above `rel_tol * max`.
pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let max = sv.iter().cloned().fold(0.0_f64, f64::max);
    if max == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * max).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_is_sorted_and_phase_fixed() {
        let m = CMat::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(2.0, 0.0)]);
        let (vals, vecs) = hermitian_eigen(&m);
        assert!((vals[0] - 1.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
        for col in 0..2 {
            let first = vecs[(0, col)];
            assert!(first.im.abs() < 1e-12 && first.re > 0.0);
        }
    }

    #[test]
    fn function_of_diagonal_matrix() {
        let m = real_diag(&[0.5, -1.0]);
        let f = hermitian_function(&m, f64::exp);
        assert!((f[(0, 0)].re - 0.5f64.exp()).abs() < 1e-12);
        assert!((f[(1, 1)].re - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn orthonormal_frame_rejects_indefinite_metric() {
        let g = real_diag(&[1.0, -1.0]);
        let r = real_diag(&[1.0, 1.0]);
        assert!(matches!(orthonormal_endomorphism(&g, &r), Err(Error::Geometry(_))));
    }

    #[test]
    fn exterior_trace_matches_elementary_symmetric() {
        let vals = [0.3, -1.2, 2.5];
        let m = real_diag(&vals);
        let e = elementary_symmetric(&vals);
        for q in 0..=3 {
            assert!((exterior_power_trace(&m, q).re - e[q]).abs() < 1e-12);
        }
    }
}
