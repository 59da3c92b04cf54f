//! Numerical laboratory for holomorphic Morse inequalities on model
//! orbifolds.

pub mod catalog;
pub mod cli;
pub mod cohomology;
pub mod config;
pub mod curvature;
pub mod error;
pub mod kernels;
pub mod linalg;
pub mod moishezon;
pub mod orbifold;
pub mod quadrature;
pub mod report;
pub mod spectral;
pub mod verify;

pub use catalog::{build_catalog_orbifold, CatalogSpec};
pub use error::{Error, Result};
