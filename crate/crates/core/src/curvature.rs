//! Curvature endomorphism, signature classification and Morse integrals.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, orthonormal_endomorphism, CMat};
use crate::orbifold::{check_invariance, ChartPoint, ChartedOrbifold, EquivariantLineBundle};

pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-8;

/// Number of negative eigenvalues, or degenerate when some eigenvalue is
/// within tolerance of zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Signature {
    Index(usize),
    Degenerate,
}

impl Signature {
    pub fn index(self) -> Option<usize> {
        match self {
            Signature::Index(q) => Some(q),
            Signature::Degenerate => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvatureSpectrum {
    pub point: ChartPoint,
    pub eigenvalues: Vec<f64>,
    pub signature: Signature,
}

/// `Ṙ = G^{-1} Θ` written in a metric-orthonormal frame.
pub fn curvature_endomorphism(
    bundle: &EquivariantLineBundle,
    orb: &ChartedOrbifold,
    x: &ChartPoint,
) -> Result<CMat> {
    let metric = orb.metric(x)?;
    let form = bundle.curvature(x)?;
    orthonormal_endomorphism(&metric, &form)
}

pub fn curvature_spectrum(
    bundle: &EquivariantLineBundle,
    orb: &ChartedOrbifold,
    x: &ChartPoint,
    tol: f64,
) -> Result<CurvatureSpectrum> {
    let r = curvature_endomorphism(bundle, orb, x)?;
    let eigenvalues = hermitian_eigenvalues(&r);
    let signature = classify_eigenvalues(&eigenvalues, tol);
    Ok(CurvatureSpectrum { point: x.clone(), eigenvalues, signature })
}

pub fn classify_point(spec: &CurvatureSpectrum, tol: f64) -> Signature {
    classify_eigenvalues(&spec.eigenvalues, tol)
}

pub fn classify_eigenvalues(eigenvalues: &[f64], tol: f64) -> Signature {
    if eigenvalues.iter().any(|a| a.abs() <= tol) {
        Signature::Degenerate
    } else {
        Signature::Index(eigenvalues.iter().filter(|&&a| a < -tol).count())
    }
}

/// `det(Ṙ/2π)`.
pub fn normalized_determinant(eigenvalues: &[f64]) -> f64 {
    eigenvalues.iter().map(|a| a / (2.0 * PI)).product()
}

/// Result of a Morse integral with the degenerate-node diagnostic.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MorseIntegral {
    pub q_set: Vec<usize>,
    pub value: f64,
    pub degenerate_fraction: f64,
    pub nodes: usize,
}

/// Per-degree integrals `∫_{M(q)} det(Ṙ/2π) dv` for `q = 0..=n`, sharing one
/// pass over the quadrature nodes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MorseIntegralTable {
    pub by_degree: Vec<f64>,
    pub degenerate_fraction: f64,
    pub nodes: usize,
}

impl MorseIntegralTable {
    pub fn over(&self, q_set: &[usize]) -> f64 {
        q_set.iter().map(|&q| self.by_degree[q]).sum()
    }

    /// `∫_{M(≤q)}`.
    pub fn up_to(&self, q: usize) -> f64 {
        self.by_degree[..=q].iter().sum()
    }
}

pub fn morse_integral(
    orb: &ChartedOrbifold,
    bundle: &EquivariantLineBundle,
    q_set: &[usize],
    resolution: usize,
    tol: f64,
) -> Result<MorseIntegral> {
    let n = orb.dimension();
    if q_set.is_empty() {
        return Err(Error::Config("q_set must not be empty".into()));
    }
    if let Some(&q) = q_set.iter().find(|&&q| q > n) {
        return Err(Error::DegreeOutOfRange { q, n });
    }
    let table = morse_integral_table(orb, bundle, resolution, tol)?;
    let mut q_sorted = q_set.to_vec();
    q_sorted.sort_unstable();
    q_sorted.dedup();
    Ok(MorseIntegral {
        value: table.over(&q_sorted),
        q_set: q_sorted,
        degenerate_fraction: table.degenerate_fraction,
        nodes: table.nodes,
    })
}

pub fn morse_integral_table(
    orb: &ChartedOrbifold,
    bundle: &EquivariantLineBundle,
    resolution: usize,
    tol: f64,
) -> Result<MorseIntegralTable> {
    if !(tol > 0.0) {
        return Err(Error::Config("degeneracy tolerance must be positive".into()));
    }
    let n = orb.dimension();
    let nodes = orb.quadrature_nodes(resolution)?;
    let integrand = |p: &ChartPoint| -> Result<f64> {
        let s = curvature_spectrum(bundle, orb, p, tol)?;
        Ok(normalized_determinant(&s.eigenvalues))
    };
    check_invariance(&integrand, orb, &nodes)?;
    let per_node: Vec<Result<(Signature, f64)>> = nodes
        .par_iter()
        .with_min_len(256)
        .map(|(p, w)| {
            let s = curvature_spectrum(bundle, orb, p, tol)?;
            Ok((s.signature, w * normalized_determinant(&s.eigenvalues)))
        })
        .collect();
    let mut by_degree = vec![0.0; n + 1];
    let mut degenerate = 0usize;
    for item in per_node {
        match item? {
            (Signature::Index(q), v) => by_degree[q] += v,
            (Signature::Degenerate, _) => degenerate += 1,
        }
    }
    let count = nodes.len();
    Ok(MorseIntegralTable {
        by_degree,
        degenerate_fraction: if count == 0 { 0.0 } else { degenerate as f64 / count as f64 },
        nodes: count,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{build_catalog_orbifold, CatalogSpec};
    use crate::linalg::{c, hermitian_function, real_diag};

    #[test]
    fn classification_examples() {
        assert_eq!(classify_eigenvalues(&[1.0, 2.0], 1e-8), Signature::Index(0));
        assert_eq!(classify_eigenvalues(&[-1.0, 2.0], 1e-8), Signature::Index(1));
        assert_eq!(classify_eigenvalues(&[0.0, 2.0], 1e-8), Signature::Degenerate);
    }

    #[test]
    fn diagonal_local_model_eigenvalues() {
        let (orb, bundle) = build_catalog_orbifold(&CatalogSpec::local_model(vec![2.0, -3.0], 1)).unwrap();
        let p = ChartPoint::new(0, vec![c(0.1, 0.0), c(0.0, 0.2)]);
        let s = curvature_spectrum(&bundle, &orb, &p, 1e-8).unwrap();
        assert_eq!(s.eigenvalues, vec![-3.0, 2.0]);
        assert_eq!(s.signature, Signature::Index(1));
    }

    #[test]
    fn p1_eigenvalue_is_one_at_centre() {
        let (orb, bundle) = build_catalog_orbifold(&CatalogSpec::wps(vec![1, 1])).unwrap();
        let p = ChartPoint::new(0, vec![c(0.0, 0.0)]);
        let r = curvature_endomorphism(&bundle, &orb, &p).unwrap();
        assert!((r[(0, 0)].re - 1.0).abs() < 1e-14);
    }

    #[test]
    fn frame_invariance_of_eigenvalues() {
        let g = CMat::from_row_slice(2, 2, &[c(2.0, 0.0), c(0.3, 0.4), c(0.3, -0.4), c(1.0, 0.0)]);
        let theta = CMat::from_row_slice(2, 2, &[c(1.0, 0.0), c(-0.2, 0.7), c(-0.2, -0.7), c(-0.5, 0.0)]);
        let chol = hermitian_eigenvalues(&orthonormal_endomorphism(&g, &theta).unwrap());
        let inv_sqrt = hermitian_function(&g, |x| 1.0 / x.sqrt());
        let sym = hermitian_eigenvalues(&(&inv_sqrt * &theta * &inv_sqrt));
        for (a, b) in chol.iter().zip(&sym) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn negative_model_has_empty_positive_region() {
        let (orb, bundle) = build_catalog_orbifold(&CatalogSpec::local_model(vec![-1.0], 1)).unwrap();
        let m = morse_integral(&orb, &bundle, &[0], 16, 1e-8).unwrap();
        assert_eq!(m.value, 0.0);
    }

    #[test]
    fn q_out_of_range_is_rejected() {
        let (orb, bundle) = build_catalog_orbifold(&CatalogSpec::local_model(vec![1.0], 1)).unwrap();
        assert!(matches!(
            morse_integral(&orb, &bundle, &[2], 8, 1e-8),
            Err(Error::DegreeOutOfRange { q: 2, n: 1 })
        ));
    }

    #[test]
    fn p1_chern_number() {
        let (orb, bundle) = build_catalog_orbifold(&CatalogSpec::wps(vec![1, 1])).unwrap();
        let m = morse_integral(&orb, &bundle, &[0], 96, 1e-8).unwrap();
        assert!((m.value - 1.0).abs() < 1e-3, "{}", m.value);
        assert_eq!(m.degenerate_fraction, 0.0);
    }

    #[test]
    fn ripple_torus_splits_into_signature_regions() {
        let spec = CatalogSpec::Torus { degrees: vec![1], k: 1, ripple: 1.0, rank: 1 };
        let (orb, bundle) = build_catalog_orbifold(&spec).unwrap();
        let t = morse_integral_table(&orb, &bundle, 64, 1e-8).unwrap();
        assert!(t.by_degree[0] > 0.0 && t.by_degree[1] < 0.0);
        assert!((t.up_to(1) - 1.0).abs() < 1e-6);
        let _ = real_diag(&[1.0]);
    }
}
