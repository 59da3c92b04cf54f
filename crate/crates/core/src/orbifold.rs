//! Charted orbifolds with linear finite group actions.
//!
//! A chart is a neighbourhood of the origin in `C^n` together with a finite
//! group acting by unitary matrices. Fields on the orbifold are represented
//! on charts as group-invariant functions, and integrals pick up the usual
//! `1/|G_U|` factor.
//!
//! Conventions used throughout the crate:
//!
//! * chart coordinates are complex, `Z = x + i y`, and Lebesgue measure is
//!   `dx dy` per complex coordinate;
//! * a Hermitian form on `T^{(1,0)}` is stored as a matrix `F` with
//!   `F(u, v) = v^* F u`; the metric matrix is normalised so that the
//!   Euclidean metric is the identity, and the Riemannian volume is
//!   `det G(Z) dLeb`;
//! * curvature forms use the same normalisation, so the curvature
//!   endomorphism is `G^{-1} Θ` and `det(Θ)/(2π)^n dLeb` is the top power
//!   `(i R / 2π)^n / n!`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;

use crate::catalog::CatalogSpec;
use crate::error::{Error, Result};
use crate::linalg::{c, is_hermitian, is_unitary, max_abs, CMat, C64};
use crate::quadrature::gauss_legendre_on;

pub const UNITARY_TOL: f64 = 1e-12;
pub const INVARIANCE_TOL: f64 = 1e-10;
pub const INTEGRAND_TOL: f64 = 1e-8;

pub type MatrixField = Arc<dyn Fn(&[C64]) -> CMat + Send + Sync>;
pub type ScalarField = Arc<dyn Fn(&[C64]) -> f64 + Send + Sync>;
pub type DistanceField = Arc<dyn Fn(&ChartPoint) -> f64 + Send + Sync>;

/// A linear group element acting on a chart, on the line bundle fibre and on
/// the auxiliary bundle fibre.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    matrix: CMat,
    line_phase: f64,
    aux_action: CMat,
}

impl GroupElement {
    pub fn new(matrix: CMat, line_phase: f64, aux_action: CMat) -> Result<Self> {
        if !is_unitary(&matrix, UNITARY_TOL) {
            return Err(Error::Geometry("group matrix is not unitary".into()));
        }
        if !is_unitary(&aux_action, UNITARY_TOL) {
            return Err(Error::Geometry("auxiliary action is not unitary".into()));
        }
        Ok(Self {
            matrix,
            line_phase: line_phase.rem_euclid(2.0 * PI),
            aux_action,
        })
    }

    pub fn identity(n: usize, aux_rank: usize) -> Self {
        Self {
            matrix: CMat::identity(n, n),
            line_phase: 0.0,
            aux_action: CMat::identity(aux_rank, aux_rank),
        }
    }

    /// `diag(ζ^{w_1}, ..., ζ^{w_n})` with `ζ = e^{2πi m/k}`.
    pub fn root_of_unity(k: u32, m: i64, weights: &[i64], line_phase: f64, aux_rank: usize) -> Self {
        let n = weights.len();
        let mut matrix = CMat::zeros(n, n);
        for (j, &w) in weights.iter().enumerate() {
            let angle = 2.0 * PI * ((m * w).rem_euclid(k as i64)) as f64 / k as f64;
            matrix[(j, j)] = C64::from_polar(1.0, angle);
        }
        Self {
            matrix,
            line_phase: line_phase.rem_euclid(2.0 * PI),
            aux_action: CMat::identity(aux_rank, aux_rank),
        }
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn line_phase(&self) -> f64 {
        self.line_phase
    }

    pub fn aux_action(&self) -> &CMat {
        &self.aux_action
    }

    pub fn dimension(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn act(&self, z: &[C64]) -> Vec<C64> {
        apply(&self.matrix, z)
    }

    pub fn act_inverse(&self, z: &[C64]) -> Vec<C64> {
        apply(&self.matrix.adjoint(), z)
    }

    pub fn compose(&self, other: &GroupElement) -> GroupElement {
        GroupElement {
            matrix: &self.matrix * &other.matrix,
            line_phase: (self.line_phase + other.line_phase).rem_euclid(2.0 * PI),
            aux_action: &self.aux_action * &other.aux_action,
        }
    }

    pub fn inverse(&self) -> GroupElement {
        GroupElement {
            matrix: self.matrix.adjoint(),
            line_phase: (-self.line_phase).rem_euclid(2.0 * PI),
            aux_action: self.aux_action.adjoint(),
        }
    }

    pub fn acts_trivially(&self, tol: f64) -> bool {
        let n = self.dimension();
        max_abs(&(&self.matrix - CMat::identity(n, n))) <= tol
    }

    pub fn same_action(&self, other: &GroupElement, tol: f64) -> bool {
        max_abs(&(&self.matrix - &other.matrix)) <= tol
    }

    /// Orthogonal splitting `Z = Z_1 + Z_2` into the fixed subspace of the
    /// element and its orthogonal complement.
    pub fn split_fixed_normal(&self, z: &[C64]) -> (Vec<C64>, Vec<C64>) {
        let n = self.dimension();
        let diff = &self.matrix - CMat::identity(n, n);
        let svd = diff.clone().svd(true, true);
        let v_t = svd.v_t.expect("svd requested right vectors");
        let scale = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max).max(1.0);
        let mut normal = vec![c(0.0, 0.0); n];
        for (k, &s) in svd.singular_values.iter().enumerate() {
            if s > 1e-10 * scale {
                // row k of V^* is the conjugate of a right singular vector
                let mut coeff = c(0.0, 0.0);
                for j in 0..n {
                    coeff += v_t[(k, j)] * z[j];
                }
                for j in 0..n {
                    normal[j] += v_t[(k, j)].conj() * coeff;
                }
            }
        }
        let fixed = z.iter().zip(&normal).map(|(a, b)| a - b).collect();
        (fixed, normal)
    }
}

pub(crate) fn apply(m: &CMat, z: &[C64]) -> Vec<C64> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)] * z[j]).sum())
        .collect()
}

pub fn norm(z: &[C64]) -> f64 {
    z.iter().map(|w| w.norm_sqr()).sum::<f64>().sqrt()
}

/// A linear orbifold chart `Ũ ⊂ C^n` with its finite group.
#[derive(Clone)]
pub struct OrbifoldChart {
    dimension: usize,
    group: Vec<GroupElement>,
    metric_field: MatrixField,
    radius: f64,
}

impl fmt::Debug for OrbifoldChart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OrbifoldChart")
            .field("dimension", &self.dimension)
            .field("group_order", &self.group.len())
            .field("radius", &self.radius)
            .finish()
    }
}

impl OrbifoldChart {
    /// Builds a chart and checks group closure, effectiveness, the metric
    /// normalisation at the origin and metric invariance on sample points.
    pub fn new(
        dimension: usize,
        group: Vec<GroupElement>,
        metric_field: MatrixField,
        radius: f64,
    ) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Geometry("chart dimension must be positive".into()));
        }
        if !(radius > 0.0) {
            return Err(Error::Geometry("chart radius must be positive".into()));
        }
        if group.is_empty() {
            return Err(Error::Geometry("chart group is empty".into()));
        }
        if group.iter().any(|g| g.dimension() != dimension) {
            return Err(Error::Geometry("group element dimension mismatch".into()));
        }
        let trivial = group.iter().filter(|g| g.acts_trivially(UNITARY_TOL)).count();
        if trivial != 1 {
            return Err(Error::Geometry(format!(
                "group action is not effective: {trivial} elements act as the identity"
            )));
        }
        for a in &group {
            let inv = a.inverse();
            if !group.iter().any(|h| h.same_action(&inv, UNITARY_TOL)) {
                return Err(Error::Geometry("group is not closed under inverses".into()));
            }
            for b in &group {
                let ab = a.compose(b);
                if !group.iter().any(|h| h.same_action(&ab, UNITARY_TOL)) {
                    return Err(Error::Geometry("group is not closed under composition".into()));
                }
            }
        }
        let chart = Self { dimension, group, metric_field, radius };
        let g0 = chart.metric(&vec![c(0.0, 0.0); dimension]);
        if max_abs(&(&g0 - CMat::identity(dimension, dimension))) > INVARIANCE_TOL {
            return Err(Error::Geometry("metric is not the identity at the chart centre".into()));
        }
        for z in chart.sample_points(12) {
            let gz = chart.metric(&z);
            if !is_hermitian(&gz, 1e-12 * (1.0 + max_abs(&gz))) {
                return Err(Error::Geometry("metric field is not Hermitian".into()));
            }
            for g in &chart.group {
                let transported = g.matrix.adjoint() * chart.metric(&g.act(&z)) * &g.matrix;
                if max_abs(&(transported - &gz)) > INVARIANCE_TOL * (1.0 + max_abs(&gz)) {
                    return Err(Error::Geometry("metric field is not group invariant".into()));
                }
            }
        }
        Ok(chart)
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn group(&self) -> &[GroupElement] {
        &self.group
    }

    pub fn group_order(&self) -> usize {
        self.group.len()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn metric(&self, z: &[C64]) -> CMat {
        (self.metric_field)(z)
    }

    pub fn contains(&self, z: &[C64]) -> bool {
        norm(z) < self.radius
    }

    /// Ratio of the Riemannian volume to the constant metric at the centre.
    pub fn volume_density(&self, z: &[C64]) -> Result<f64> {
        if !self.contains(z) {
            return Err(Error::Geometry(format!(
                "point of norm {:.6} lies outside the chart of radius {}",
                norm(z),
                self.radius
            )));
        }
        Ok(self.raw_volume_density(z))
    }

    pub(crate) fn raw_volume_density(&self, z: &[C64]) -> f64 {
        self.metric(z).determinant().re
    }

    /// Deterministic sample points inside half the chart radius (or the unit
    /// ball for unbounded charts).
    pub fn sample_points(&self, count: usize) -> Vec<Vec<C64>> {
        let n = self.dimension;
        let reach = self.radius.min(2.0);
        (0..count)
            .map(|s| {
                (0..n)
                    .map(|j| {
                        let t = (s * n + j) as f64;
                        let r = 0.45 * reach * ((0.37 * t + 0.11).sin().abs()) / (n as f64).sqrt();
                        C64::from_polar(r, 2.399963 * t + 0.5)
                    })
                    .collect()
            })
            .collect()
    }
}

/// Integration domain of a chart patch, in chart coordinates.
#[derive(Clone, Debug, PartialEq)]
pub enum ChartDomain {
    /// `|Z_j| <= radii[j]` for every complex coordinate.
    Polydisc { radii: Vec<f64> },
    /// Fundamental cell `[0, Lx) x [0, Ly)` of a flat torus per complex
    /// coordinate; used for torus quotients whose atlas is the cover itself.
    TorusCell { periods: Vec<(f64, f64)> },
}

/// A chart together with its integration domain and partition-of-unity
/// function.
#[derive(Clone)]
pub struct AtlasPatch {
    pub chart: OrbifoldChart,
    pub domain: ChartDomain,
    pub partition: ScalarField,
}

/// A point given by a chart index and chart coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ChartPoint {
    pub chart: usize,
    pub coords: Vec<C64>,
}

impl ChartPoint {
    pub fn new(chart: usize, coords: Vec<C64>) -> Self {
        Self { chart, coords }
    }
}

/// A catalog orbifold: charts with attachment data and the distance to the
/// singular locus.
#[derive(Clone)]
pub struct ChartedOrbifold {
    spec: CatalogSpec,
    patches: Vec<AtlasPatch>,
    singular_distance: DistanceField,
}

impl fmt::Debug for ChartedOrbifold {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartedOrbifold")
            .field("catalog", &self.spec)
            .field("charts", &self.patches.len())
            .finish()
    }
}

impl ChartedOrbifold {
    pub fn new(spec: CatalogSpec, patches: Vec<AtlasPatch>, singular_distance: DistanceField) -> Result<Self> {
        if patches.is_empty() {
            return Err(Error::Geometry("orbifold has no charts".into()));
        }
        let n = patches[0].chart.dimension();
        if patches.iter().any(|p| p.chart.dimension() != n) {
            return Err(Error::Geometry("charts have different dimensions".into()));
        }
        Ok(Self { spec, patches, singular_distance })
    }

    pub fn dimension(&self) -> usize {
        self.patches[0].chart.dimension()
    }

    pub fn catalog_id(&self) -> &'static str {
        self.spec.id()
    }

    pub fn spec(&self) -> &CatalogSpec {
        &self.spec
    }

    pub fn patches(&self) -> &[AtlasPatch] {
        &self.patches
    }

    pub fn chart(&self, index: usize) -> Result<&OrbifoldChart> {
        self.patches
            .get(index)
            .map(|p| &p.chart)
            .ok_or_else(|| Error::Geometry(format!("no chart with index {index}")))
    }

    /// Distance from the point to the singular locus, measured in the
    /// coordinates of the chart the point is expressed in.
    pub fn singular_distance(&self, point: &ChartPoint) -> f64 {
        (self.singular_distance)(point)
    }

    /// Order of the isotropy group at a chart point.
    pub fn isotropy_order(&self, point: &ChartPoint) -> Result<usize> {
        let patch = self
            .patches
            .get(point.chart)
            .ok_or_else(|| Error::Geometry(format!("no chart with index {}", point.chart)))?;
        Ok(patch
            .chart
            .group()
            .iter()
            .filter(|g| {
                let diff = sub(&g.act(&point.coords), &point.coords);
                let diff = match &patch.domain {
                    ChartDomain::TorusCell { periods } => diff
                        .iter()
                        .zip(periods)
                        .map(|(d, &(lx, ly))| c(d.re - lx * (d.re / lx).round(), d.im - ly * (d.im / ly).round()))
                        .collect(),
                    ChartDomain::Polydisc { .. } => diff,
                };
                norm(&diff) < 1e-12
            })
            .count())
    }

    pub fn metric(&self, point: &ChartPoint) -> Result<CMat> {
        Ok(self.chart(point.chart)?.metric(&point.coords))
    }

    /// Quadrature nodes of every patch, with weights that already include the
    /// volume density, the partition of unity and the group factor.
    pub fn quadrature_nodes(&self, resolution: usize) -> Result<Vec<(ChartPoint, f64)>> {
        if resolution == 0 {
            return Err(Error::Config("quadrature resolution must be positive".into()));
        }
        let mut out = Vec::new();
        for (index, patch) in self.patches.iter().enumerate() {
            let axes = domain_axes(&patch.domain, resolution, patch.chart.dimension())?;
            let chart = &patch.chart;
            let group_factor = 1.0 / chart.group_order() as f64;
            let total: usize = axes.iter().map(|a| a.len()).product();
            let nodes: Vec<(ChartPoint, f64)> = (0..total)
                .into_par_iter()
                .with_min_len(1024)
                .filter_map(|flat| {
                    let (z, w) = node_at(&patch.domain, &axes, flat);
                    let psi = (patch.partition)(&z);
                    if psi == 0.0 || w == 0.0 {
                        return None;
                    }
                    let weight = w * psi * group_factor * chart.raw_volume_density(&z);
                    Some((ChartPoint::new(index, z), weight))
                })
                .collect();
            out.extend(nodes);
        }
        Ok(out)
    }
}

fn sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// One-dimensional rules for each real axis of the domain. For a polydisc the
/// axes alternate radius and angle; for a torus cell they alternate x and y.
fn domain_axes(domain: &ChartDomain, resolution: usize, n: usize) -> Result<Vec<Vec<(f64, f64)>>> {
    let mut axes = Vec::with_capacity(2 * n);
    match domain {
        ChartDomain::Polydisc { radii } => {
            if radii.len() != n {
                return Err(Error::Geometry("polydisc radii do not match the dimension".into()));
            }
            for &r in radii {
                let (x, w) = gauss_legendre_on(resolution, 0.0, r);
                axes.push(x.into_iter().zip(w).collect());
                let (x, w) = gauss_legendre_on(resolution, 0.0, 2.0 * PI);
                axes.push(x.into_iter().zip(w).collect());
            }
        }
        ChartDomain::TorusCell { periods } => {
            if periods.len() != n {
                return Err(Error::Geometry("torus periods do not match the dimension".into()));
            }
            for &(lx, ly) in periods {
                let (x, w) = gauss_legendre_on(resolution, 0.0, lx);
                axes.push(x.into_iter().zip(w).collect());
                let (x, w) = gauss_legendre_on(resolution, 0.0, ly);
                axes.push(x.into_iter().zip(w).collect());
            }
        }
    }
    Ok(axes)
}

fn node_at(domain: &ChartDomain, axes: &[Vec<(f64, f64)>], mut flat: usize) -> (Vec<C64>, f64) {
    let mut idx = vec![0usize; axes.len()];
    for k in (0..axes.len()).rev() {
        idx[k] = flat % axes[k].len();
        flat /= axes[k].len();
    }
    let n = axes.len() / 2;
    let mut z = Vec::with_capacity(n);
    let mut weight = 1.0;
    for j in 0..n {
        let (a, wa) = axes[2 * j][idx[2 * j]];
        let (b, wb) = axes[2 * j + 1][idx[2 * j + 1]];
        match domain {
            ChartDomain::Polydisc { .. } => {
                z.push(C64::from_polar(a, b));
                weight *= wa * wb * a;
            }
            ChartDomain::TorusCell { .. } => {
                z.push(c(a, b));
                weight *= wa * wb;
            }
        }
    }
    (z, weight)
}

/// Integrates a scalar field over the orbifold.
///
/// The field is evaluated chart-wise; before summing, it is checked for group
/// invariance on a handful of nodes per chart. Summation runs over fixed
/// chunks in node order so the value does not depend on thread scheduling.
pub fn orbifold_integrate<F>(f: F, orb: &ChartedOrbifold, resolution: usize) -> Result<f64>
where
    F: Fn(&ChartPoint) -> Result<f64> + Sync,
{
    let nodes = orb.quadrature_nodes(resolution)?;
    check_invariance(&f, orb, &nodes)?;
    ordered_sum(&nodes, |(p, w)| Ok(w * f(p)?))
}

pub(crate) fn check_invariance<F>(f: &F, orb: &ChartedOrbifold, nodes: &[(ChartPoint, f64)]) -> Result<()>
where
    F: Fn(&ChartPoint) -> Result<f64> + Sync,
{
    if nodes.is_empty() {
        return Ok(());
    }
    let stride = (nodes.len() / 24).max(1);
    for (p, _) in nodes.iter().step_by(stride) {
        let chart = orb.chart(p.chart)?;
        let base = f(p)?;
        for g in chart.group() {
            let moved = ChartPoint::new(p.chart, g.act(&p.coords));
            let value = f(&moved)?;
            if (value - base).abs() > INTEGRAND_TOL * base.abs().max(1.0) {
                return Err(Error::Integrand(format!(
                    "integrand is not invariant under the chart group: {base} vs {value}"
                )));
            }
        }
    }
    Ok(())
}

pub(crate) fn ordered_sum<T, G>(items: &[T], g: G) -> Result<f64>
where
    T: Sync,
    G: Fn(&T) -> Result<f64> + Sync,
{
    const CHUNK: usize = 2048;
    let partials: Vec<Result<f64>> = items
        .par_chunks(CHUNK)
        .map(|chunk| {
            let mut s = 0.0;
            for item in chunk {
                s += g(item)?;
            }
            Ok(s)
        })
        .collect();
    let mut total = 0.0;
    for p in partials {
        total += p?;
    }
    Ok(total)
}

/// The equivariant line bundle: curvature fields per chart and the rank of
/// the auxiliary bundle. Phases and auxiliary actions live on the group
/// elements of each chart.
#[derive(Clone)]
pub struct EquivariantLineBundle {
    curvature_fields: Vec<MatrixField>,
    aux_rank: usize,
}

impl fmt::Debug for EquivariantLineBundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EquivariantLineBundle")
            .field("charts", &self.curvature_fields.len())
            .field("aux_rank", &self.aux_rank)
            .finish()
    }
}

impl EquivariantLineBundle {
    pub fn new(curvature_fields: Vec<MatrixField>, aux_rank: usize) -> Result<Self> {
        if aux_rank == 0 {
            return Err(Error::Config("auxiliary bundle rank must be at least 1".into()));
        }
        Ok(Self { curvature_fields, aux_rank })
    }

    pub fn aux_rank(&self) -> usize {
        self.aux_rank
    }

    pub fn curvature(&self, point: &ChartPoint) -> Result<CMat> {
        let field = self
            .curvature_fields
            .get(point.chart)
            .ok_or_else(|| Error::Geometry(format!("no curvature field for chart {}", point.chart)))?;
        Ok(field(&point.coords))
    }

    /// Checks Hermitian symmetry and group invariance of the curvature on
    /// sample points of every chart.
    pub fn validate(&self, orb: &ChartedOrbifold) -> Result<()> {
        if self.curvature_fields.len() != orb.patches().len() {
            return Err(Error::Geometry("curvature fields do not match the atlas".into()));
        }
        for (index, patch) in orb.patches().iter().enumerate() {
            let chart = &patch.chart;
            for z in chart.sample_points(12) {
                let r = (self.curvature_fields[index])(&z);
                let scale = 1.0 + max_abs(&r);
                if !is_hermitian(&r, 1e-12 * scale) {
                    return Err(Error::Geometry("curvature field is not Hermitian".into()));
                }
                for g in chart.group() {
                    let moved = (self.curvature_fields[index])(&g.act(&z));
                    let transported = g.matrix().adjoint() * moved * g.matrix();
                    if max_abs(&(transported - &r)) > INVARIANCE_TOL * scale {
                        return Err(Error::Geometry("curvature field is not group invariant".into()));
                    }
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::build_catalog_orbifold;
    use crate::catalog::CatalogSpec;

    fn flat_metric(n: usize) -> MatrixField {
        Arc::new(move |_z: &[C64]| CMat::identity(n, n))
    }

    #[test]
    fn duplicated_trivial_element_is_rejected() {
        let id = GroupElement::identity(1, 1);
        let twin = GroupElement::new(CMat::identity(1, 1), PI, CMat::identity(1, 1)).unwrap();
        let err = OrbifoldChart::new(1, vec![id, twin], flat_metric(1), 1.0).unwrap_err();
        assert!(matches!(err, Error::Geometry(_)));
    }

    #[test]
    fn open_group_is_rejected() {
        let id = GroupElement::identity(1, 1);
        let g = GroupElement::root_of_unity(3, 1, &[1], 0.0, 1);
        assert!(OrbifoldChart::new(1, vec![id, g], flat_metric(1), 1.0).is_err());
    }

    #[test]
    fn non_unitary_matrix_is_rejected() {
        let m = CMat::from_element(1, 1, c(2.0, 0.0));
        assert!(GroupElement::new(m, 0.0, CMat::identity(1, 1)).is_err());
    }

    #[test]
    fn non_invariant_metric_is_rejected() {
        let metric: MatrixField = Arc::new(|z: &[C64]| {
            let mut m = CMat::identity(1, 1);
            m[(0, 0)] = c(1.0 + 0.1 * z[0].re, 0.0);
            m
        });
        let group = vec![GroupElement::identity(1, 1), GroupElement::root_of_unity(2, 1, &[1], 0.0, 1)];
        assert!(OrbifoldChart::new(1, group, metric, 1.0).is_err());
    }

    #[test]
    fn volume_density_outside_chart_errors() {
        let chart = OrbifoldChart::new(1, vec![GroupElement::identity(1, 1)], flat_metric(1), 1.0).unwrap();
        assert!(chart.volume_density(&[c(2.0, 0.0)]).is_err());
        assert_eq!(chart.volume_density(&[c(0.0, 0.0)]).unwrap(), 1.0);
    }

    #[test]
    fn split_fixed_normal_for_reflection() {
        let g = GroupElement::root_of_unity(2, 1, &[0, 1], 0.0, 1);
        let z = vec![c(0.3, 0.1), c(-0.2, 0.5)];
        let (fixed, normal) = g.split_fixed_normal(&z);
        assert!((fixed[0] - z[0]).norm() < 1e-14 && fixed[1].norm() < 1e-14);
        assert!(normal[0].norm() < 1e-14 && (normal[1] - z[1]).norm() < 1e-14);
    }

    #[test]
    fn zero_integrand_integrates_to_zero() {
        let (orb, _) = build_catalog_orbifold(&CatalogSpec::wps(vec![1, 2])).unwrap();
        assert_eq!(orbifold_integrate(|_| Ok(0.0), &orb, 16).unwrap(), 0.0);
    }

    #[test]
    fn non_invariant_integrand_is_detected() {
        let (orb, _) = build_catalog_orbifold(&CatalogSpec::local_model(vec![1.0], 2)).unwrap();
        let err = orbifold_integrate(|p| Ok(p.coords[0].re), &orb, 16).unwrap_err();
        assert!(matches!(err, Error::Integrand(_)));
    }
}
