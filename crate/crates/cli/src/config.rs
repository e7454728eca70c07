//! JSON configuration files. Every key is optional and unknown keys are
//! rejected; values given on the command line win.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;

use crate::commands::Failure;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadricFile {
    pub n: Option<usize>,
    pub samples: Option<usize>,
    pub restarts: Option<usize>,
    pub iters: Option<usize>,
    pub pairs: Option<usize>,
    pub seed: Option<u64>,
    pub out: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowFile {
    pub level: Option<usize>,
    pub rank: Option<usize>,
    pub degrees: Option<Vec<i64>>,
    pub init: Option<String>,
    pub eps: Option<f64>,
    pub steps: Option<usize>,
    pub tol: Option<f64>,
    pub step_size: Option<f64>,
    pub record_every: Option<usize>,
    pub backtrack: Option<bool>,
    pub seed: Option<u64>,
    pub trace: Option<String>,
    pub report: Option<String>,
    // maxprin only
    pub tol_c: Option<f64>,
    pub tol_c_prime: Option<f64>,
    pub tol_floor: Option<f64>,
    pub calibrate: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CertFile {
    pub n: Option<usize>,
    pub splitting: Option<Vec<i64>>,
    pub k: Option<i64>,
}

pub fn load<T: DeserializeOwned + Default>(path: Option<&str>) -> Result<T, Failure> {
    let Some(path) = path else {
        return Ok(T::default());
    };
    let text = std::fs::read_to_string(Path::new(path))
        .map_err(|e| Failure::Usage(format!("cannot read config {path}: {e}")))?;
    serde_json::from_str(&text).map_err(|e| Failure::Usage(format!("invalid config {path}: {e}")))
}

/// Parses a comma-separated integer list such as `-1,2,2`.
pub fn parse_int_list(raw: &str) -> Result<Vec<i64>, Failure> {
    raw.split(',')
        .map(|s| s.trim().parse::<i64>().map_err(|_| Failure::Usage(format!("malformed integer list {raw:?}"))))
        .collect()
}
