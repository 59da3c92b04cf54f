//! TOML run configuration.
//!
//! ```toml
//! [catalog]
//! id = "wps"
//! weights = [1, 2]
//!
//! [run]
//! p_list = [1, 2, 4, 8]
//! u_list = [0.5, 1.0, 5.0, 50.0]
//! q_list = [0, 1]
//! resolution = 64
//! spectral_resolution = 64
//! seed = 7
//!
//! [tolerances]
//! tol_degeneracy = 1e-8
//! tol_spectral_gap = 1e-8
//! tol_quadrature = 1e-3
//! tol_morse_scale = 2.0
//!
//! [kernel]
//! point_re_im = [[1.0, 0.0]]
//! min_singular_distance = 0.5
//!
//! [output]
//! dir = "out"
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::catalog::CatalogSpec;
use crate::error::{Error, Result};
use crate::linalg::{c, C64};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub p_list: Vec<u64>,
    #[serde(default = "default_u_list")]
    pub u_list: Vec<f64>,
    #[serde(default)]
    pub q_list: Option<Vec<usize>>,
    /// Quadrature nodes per real axis; the node count grows like
    /// `resolution^(2n)`, so the default shrinks with the dimension.
    #[serde(default)]
    pub resolution: Option<usize>,
    #[serde(default = "default_spectral_resolution")]
    pub spectral_resolution: usize,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_degeneracy")]
    pub tol_degeneracy: f64,
    #[serde(default = "default_gap")]
    pub tol_spectral_gap: f64,
    #[serde(default = "default_quadrature")]
    pub tol_quadrature: f64,
    #[serde(default = "default_morse_scale")]
    pub tol_morse_scale: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_degeneracy: default_degeneracy(),
            tol_spectral_gap: default_gap(),
            tol_quadrature: default_quadrature(),
            tol_morse_scale: default_morse_scale(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    #[serde(default)]
    pub point_re_im: Option<Vec<[f64; 2]>>,
    /// Defaults to 0.5 on local models and 0.25 on tori.
    #[serde(default)]
    pub min_singular_distance: Option<f64>,
}

impl Default for KernelSection {
    fn default() -> Self {
        Self { point_re_im: None, min_singular_distance: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_out_dir() }
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    catalog: toml::Table,
    run: RunSection,
    #[serde(default)]
    tolerances: Tolerances,
    #[serde(default)]
    kernel: KernelSection,
    #[serde(default)]
    output: OutputSection,
}

/// Validated configuration of one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub catalog: CatalogSpec,
    pub run: RunSection,
    pub tolerances: Tolerances,
    pub kernel: KernelSection,
    pub output: OutputSection,
}

fn default_u_list() -> Vec<f64> {
    vec![0.5, 1.0, 5.0, 50.0]
}
fn default_spectral_resolution() -> usize {
    64
}
fn default_degeneracy() -> f64 {
    1e-8
}
fn default_gap() -> f64 {
    1e-8
}
fn default_quadrature() -> f64 {
    1e-3
}
fn default_morse_scale() -> f64 {
    2.0
}
fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}

impl RunConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().replace('\n', " ")))?;
        let catalog = catalog_from_table(&raw.catalog)?;
        let config = RunConfig {
            catalog,
            run: raw.run,
            tolerances: raw.tolerances,
            kernel: raw.kernel,
            output: raw.output,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let p = &self.run.p_list;
        if p.is_empty() {
            return Err(Error::Config("p_list must not be empty".into()));
        }
        if p[0] == 0 {
            return Err(Error::Config("p_list entries must be positive".into()));
        }
        if p.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("p_list must be strictly increasing".into()));
        }
        if self.run.u_list.is_empty() || self.run.u_list.iter().any(|u| !(*u > 0.0 && u.is_finite())) {
            return Err(Error::Config("u_list must hold positive finite times".into()));
        }
        let n = self.catalog.dimension();
        if let Some(q) = self.run.q_list.as_ref().and_then(|qs| qs.iter().find(|&&q| q > n)) {
            return Err(Error::Config(format!("q_list entry {q} exceeds the dimension {n}")));
        }
        if self.run.resolution == Some(0) {
            return Err(Error::Config("resolution must be positive".into()));
        }
        let m = self.run.spectral_resolution;
        if m < 8 || !m.is_power_of_two() {
            return Err(Error::Config("spectral_resolution must be a power of two >= 8".into()));
        }
        let t = &self.tolerances;
        for (name, v) in [
            ("tol_degeneracy", t.tol_degeneracy),
            ("tol_spectral_gap", t.tol_spectral_gap),
            ("tol_quadrature", t.tol_quadrature),
            ("tol_morse_scale", t.tol_morse_scale),
            ("min_singular_distance", self.kernel.min_singular_distance.unwrap_or(1.0)),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if let Some(point) = &self.kernel.point_re_im {
            if point.len() != n {
                return Err(Error::Config(format!("kernel point has {} coordinates, expected {n}", point.len())));
            }
        }
        Ok(())
    }

    pub fn q_list(&self) -> Vec<usize> {
        self.run.q_list.clone().unwrap_or_else(|| (0..=self.catalog.dimension()).collect())
    }

    pub fn resolution(&self) -> usize {
        self.run.resolution.unwrap_or(match self.catalog.dimension() {
            0 | 1 => 64,
            2 => 16,
            _ => 8,
        })
    }

    pub fn kernel_point(&self) -> Option<Vec<C64>> {
        self.kernel.point_re_im.as_ref().map(|pts| pts.iter().map(|[re, im]| c(*re, *im)).collect())
    }
}

fn catalog_from_table(table: &toml::Table) -> Result<CatalogSpec> {
    let id = table
        .get("id")
        .and_then(|v| v.as_str())
        .ok_or_else(|| Error::Config("[catalog] needs a string 'id'".into()))?;
    let mut params = BTreeMap::new();
    for (key, value) in table.iter().filter(|(k, _)| k.as_str() != "id") {
        let numbers = match value {
            toml::Value::Array(items) => items.iter().map(|v| number(v, key)).collect::<Result<Vec<_>>>()?,
            other => vec![number(other, key)?],
        };
        params.insert(key.clone(), numbers);
    }
    CatalogSpec::from_params(id, &params)
}

fn number(v: &toml::Value, key: &str) -> Result<f64> {
    match v {
        toml::Value::Integer(i) => Ok(*i as f64),
        toml::Value::Float(x) => Ok(*x),
        _ => Err(Error::Config(format!("parameter '{key}' must be numeric"))),
    }
}
