//! Versioned JSON run report.
//!
//! Everything except `meta.header.timestamp` is a function of the
//! configuration and seed.

use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::catalog::CatalogSpec;
use crate::config::RunConfig;
use crate::error::Result;

pub const SCHEMA_VERSION: &str = "1.0.0";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Info,
    Warning,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Diagnostic {
    pub level: Level,
    pub check: String,
    pub message: String,
}

/// One named check with its data.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckResult {
    pub check: String,
    pub pass: bool,
    pub data: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Header {
    /// Seconds since the Unix epoch; `SOURCE_DATE_EPOCH` overrides it.
    pub timestamp: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Meta {
    pub schema_version: &'static str,
    pub tool: &'static str,
    pub tool_version: &'static str,
    pub subcommand: String,
    pub seed: u64,
    pub header: Header,
    /// Run parameters without output paths.
    pub config: Value,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub meta: Meta,
    pub catalog: CatalogSpec,
    pub results: Vec<CheckResult>,
    pub diagnostics: Vec<Diagnostic>,
}

pub fn timestamp() -> u64 {
    if let Some(t) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.parse().ok()) {
        return t;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl Report {
    pub fn new(subcommand: &str, config: &RunConfig, seed: u64) -> Result<Self> {
        let config_value = serde_json::json!({
            "run": config.run,
            "tolerances": config.tolerances,
            "kernel": config.kernel,
        });
        Ok(Self {
            meta: Meta {
                schema_version: SCHEMA_VERSION,
                tool: env!("CARGO_PKG_NAME"),
                tool_version: env!("CARGO_PKG_VERSION"),
                subcommand: subcommand.to_string(),
                seed,
                header: Header { timestamp: timestamp() },
                config: config_value,
            },
            catalog: config.catalog.clone(),
            results: vec![],
            diagnostics: vec![],
        })
    }

    pub fn push<T: Serialize>(&mut self, check: &str, pass: bool, data: &T) -> Result<()> {
        self.results.push(CheckResult { check: check.to_string(), pass, data: serde_json::to_value(data)? });
        Ok(())
    }

    pub fn diagnose(&mut self, level: Level, check: &str, message: impl Into<String>) {
        self.diagnostics.push(Diagnostic { level, check: check.to_string(), message: message.into() });
    }

    pub fn all_pass(&self) -> bool {
        self.results.iter().all(|r| r.pass)
    }

    pub fn has(&self, level: Level) -> bool {
        self.diagnostics.iter().any(|d| d.level == level)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)? + "\n")
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}
