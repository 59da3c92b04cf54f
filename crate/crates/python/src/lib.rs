use num_complex::Complex64;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use orbimorse::catalog::CatalogSpec;
use orbimorse::cohomology;
use orbimorse::curvature::morse_integral_table;
use orbimorse::kernels::{self, ModelPointData};
use orbimorse::moishezon;
use orbimorse::spectral;
use orbimorse::verify::{self, RightSide};
use orbimorse::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Config(_) | Error::UnsupportedModel(_) | Error::DegreeOutOfRange { .. } | Error::Refused(_) => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// A catalog entry: weighted projective space, torus or flat local model.
#[pyclass(name = "Catalog", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyCatalog {
    spec: CatalogSpec,
}

#[pymethods]
impl PyCatalog {
    #[staticmethod]
    #[pyo3(signature = (weights, degree=1, rank=1))]
    fn wps(weights: Vec<u64>, degree: i64, rank: usize) -> Self {
        Self { spec: CatalogSpec::Wps { weights, degree, rank } }
    }

    #[staticmethod]
    #[pyo3(signature = (degrees, k=1, ripple=0.0, rank=1))]
    fn torus(degrees: Vec<i64>, k: u32, ripple: f64, rank: usize) -> Self {
        Self { spec: CatalogSpec::Torus { degrees, k, ripple, rank } }
    }

    #[staticmethod]
    #[pyo3(signature = (curvature, k=1, rank=1))]
    fn local_model(curvature: Vec<f64>, k: u32, rank: usize) -> Self {
        Self { spec: CatalogSpec::local_model(curvature, k).with_rank(rank) }
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let spec = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Self { spec })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.spec).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    #[getter]
    fn id(&self) -> &'static str {
        self.spec.id()
    }

    #[getter]
    fn dimension(&self) -> usize {
        self.spec.dimension()
    }

    fn __repr__(&self) -> String {
        format!("Catalog({:?})", self.spec)
    }
}

/// `h^0(P(weights), O(d))`.
#[pyfunction]
fn weighted_proj_h0(weights: Vec<u64>, d: i64) -> PyResult<u64> {
    cohomology::weighted_proj_h0(&weights, d).map_err(to_py)
}

/// `{(p, q): h^q}` over the given powers.
#[pyfunction]
fn cohomology_table(py: Python<'_>, catalog: &PyCatalog, p_values: Vec<u64>) -> PyResult<Vec<((u64, usize), u64)>> {
    let spec = catalog.spec.clone();
    let table = py.detach(move || cohomology::cohomology_table(&spec, &p_values)).map_err(to_py)?;
    Ok(table.entries.into_iter().collect())
}

/// Per-degree integrals of `det(Ṙ/2π)` and the degenerate node fraction.
#[pyfunction]
#[pyo3(signature = (catalog, resolution, tol=1e-8))]
fn morse_integrals(py: Python<'_>, catalog: &PyCatalog, resolution: usize, tol: f64) -> PyResult<(Vec<f64>, f64)> {
    let spec = catalog.spec.clone();
    py.detach(move || {
        let (orb, bundle) = orbimorse::build_catalog_orbifold(&spec)?;
        morse_integral_table(&orb, &bundle, resolution, tol)
    })
    .map(|t| (t.by_degree, t.degenerate_fraction))
    .map_err(to_py)
}

/// Strong Morse residuals `[(p, rho, tolerance, pass)]`. The right side is
/// exact on weighted projective spaces and by quadrature otherwise.
#[pyfunction]
#[pyo3(signature = (catalog, q, p_values, resolution=64, tol_scale=2.0))]
fn strong_morse(
    py: Python<'_>,
    catalog: &PyCatalog,
    q: usize,
    p_values: Vec<u64>,
    resolution: usize,
    tol_scale: f64,
) -> PyResult<Vec<(u64, f64, f64, bool)>> {
    let spec = catalog.spec.clone();
    let source = match spec {
        CatalogSpec::Wps { .. } => RightSide::Exact,
        _ => RightSide::Quadrature { resolution, tol: 1e-8 },
    };
    let series = py.detach(move || verify::verify_strong_morse(&spec, q, &p_values, source, tol_scale)).map_err(to_py)?;
    Ok(series.points.iter().map(|pt| (pt.p, pt.rho, pt.tolerance, pt.pass)).collect())
}

/// Clustered spectrum `[(lambda, multiplicity)]` of the Kodaira Laplacian
/// on a flat torus.
#[pyfunction]
#[pyo3(signature = (catalog, p, q, resolution=64))]
fn spectrum(catalog: &PyCatalog, p: u64, q: usize, resolution: usize) -> PyResult<Vec<(f64, u64)>> {
    let op = spectral::assemble_kodaira_laplacian(&catalog.spec, p, q, resolution).map_err(to_py)?;
    Ok(op.spectral_table().eigenvalues)
}

/// Residuals `r_0..r_n` of the exact trace chain at one power and time.
#[pyfunction]
#[pyo3(signature = (catalog, p, u, resolution=64))]
fn trace_chain(catalog: &PyCatalog, p: u64, u: f64, resolution: usize) -> PyResult<Vec<f64>> {
    let tables = (0..=catalog.spec.dimension())
        .map(|q| spectral::assemble_kodaira_laplacian(&catalog.spec, p, q, resolution).map(|op| op.spectral_table()))
        .collect::<orbimorse::Result<Vec<_>>>()
        .map_err(to_py)?;
    let h: Vec<u64> = tables.iter().map(|t| t.zero_dim).collect();
    spectral::morse_sum_vs_trace(&tables, u, &h).map_err(to_py)
}

/// `𝓛im_u` for curvature eigenvalues `a` in degree `q`.
#[pyfunction]
#[pyo3(signature = (a, u, q, rank=1))]
fn lim_u(a: Vec<f64>, u: f64, q: usize, rank: usize) -> PyResult<f64> {
    let data = ModelPointData::new(a, rank, u).map_err(to_py)?;
    kernels::lim_u(&data, q).map_err(to_py)
}

#[pyfunction]
fn limit_u_infinity(a: Vec<f64>, q: usize) -> PyResult<f64> {
    kernels::limit_u_infinity(&a, q).map_err(to_py)
}

/// Fitted log-log slope and R² of the regular kernel error.
#[pyfunction]
#[pyo3(signature = (catalog, x, u, p_values, q=0, min_distance=0.5))]
fn kernel_rate(
    catalog: &PyCatalog,
    x: Vec<Complex64>,
    u: f64,
    p_values: Vec<u64>,
    q: usize,
    min_distance: f64,
) -> PyResult<(f64, f64)> {
    let r = verify::verify_kernel_asymptotics_regular(&catalog.spec, &x, u, &p_values, q, min_distance).map_err(to_py)?;
    Ok((r.fit.slope, r.fit.r_squared))
}

/// `p^{-n} e^{-u□_p/p}(x,x) / 𝓛im_u(x)`.
#[pyfunction]
#[pyo3(signature = (catalog, x, u, p, q=0))]
fn singular_diagonal_factor(catalog: &PyCatalog, x: Vec<Complex64>, u: f64, p: u64, q: usize) -> PyResult<f64> {
    verify::singular_diagonal_factor(&catalog.spec, &x, u, p, q).map_err(to_py)
}

/// Moishezon verdict name and the signature integral.
#[pyfunction]
#[pyo3(signature = (catalog, resolution=64, seed=0))]
fn moishezon_check(py: Python<'_>, catalog: &PyCatalog, resolution: usize, seed: u64) -> PyResult<(String, f64)> {
    let spec = catalog.spec.clone();
    let v = py.detach(move || moishezon::build_and_check(&spec, resolution, 1e-8, 1e-6, seed)).map_err(to_py)?;
    let name = serde_json::to_value(v.verdict).map_err(|e| PyRuntimeError::new_err(e.to_string()))?;
    Ok((name.as_str().unwrap_or_default().to_string(), v.integral))
}

#[pyfunction]
fn siegel_bound(m: u64, n: u64, k: u64) -> PyResult<u64> {
    moishezon::siegel_bound(m, n, k).map_err(to_py)
}

/// Runs the command-line interface and returns its exit code.
#[pyfunction]
fn run_cli(py: Python<'_>, args: Vec<String>) -> u8 {
    py.detach(move || orbimorse::cli::execute(std::iter::once("orbimorse".to_string()).chain(args)))
}

#[pymodule]
fn _orbimorse(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCatalog>()?;
    m.add_function(wrap_pyfunction!(weighted_proj_h0, m)?)?;
    m.add_function(wrap_pyfunction!(cohomology_table, m)?)?;
    m.add_function(wrap_pyfunction!(morse_integrals, m)?)?;
    m.add_function(wrap_pyfunction!(strong_morse, m)?)?;
    m.add_function(wrap_pyfunction!(spectrum, m)?)?;
    m.add_function(wrap_pyfunction!(trace_chain, m)?)?;
    m.add_function(wrap_pyfunction!(lim_u, m)?)?;
    m.add_function(wrap_pyfunction!(limit_u_infinity, m)?)?;
    m.add_function(wrap_pyfunction!(kernel_rate, m)?)?;
    m.add_function(wrap_pyfunction!(singular_diagonal_factor, m)?)?;
    m.add_function(wrap_pyfunction!(moishezon_check, m)?)?;
    m.add_function(wrap_pyfunction!(siegel_bound, m)?)?;
    m.add_function(wrap_pyfunction!(run_cli, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
