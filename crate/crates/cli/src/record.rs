use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use hscop::pip::IterationRecord;

pub const SCHEMA_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Reads a file and returns its bytes with their hash.
pub fn read_hashed(path: &Path) -> anyhow::Result<(Vec<u8>, String)> {
    let bytes = std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))?;
    let hash = sha256_hex(&bytes);
    Ok((bytes, hash))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

impl InputFile {
    pub fn new(path: &Path, sha256: String) -> Self {
        Self { path: path.display().to_string(), sha256 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveParams {
    pub alpha: f64,
    pub lambda: f64,
    pub rho: f64,
    pub tau: f64,
    pub propensity: String,
    pub cap: Option<f64>,
    pub stale: Option<usize>,
    pub time_limit_seconds: f64,
}

/// One treatment solve, as written by `solve` and read by `compare`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub schema_version: u32,
    /// Table label, e.g. "Full MIP" or "PIP (0.4)".
    pub method: String,
    pub inputs: Vec<InputFile>,
    pub params: SolveParams,
    pub atoms: usize,
    pub samples: usize,
    /// HSCOP objective at the returned point.
    pub welfare: f64,
    pub welfare_ipw: f64,
    /// Absent when the policy has zero estimated welfare.
    pub gini_ipw: Option<f64>,
    pub gamma: f64,
    pub status: String,
    pub certificate: bool,
    pub bound: Option<f64>,
    pub wall_seconds: f64,
    pub aborted: Option<String>,
    pub beta: Vec<Vec<f64>>,
    pub iterations: Vec<IterationRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemResult {
    pub schema_version: u32,
    pub method: String,
    pub inputs: Vec<InputFile>,
    pub atoms: usize,
    pub objective: f64,
    pub gamma: f64,
    pub x: Vec<f64>,
    pub status: String,
    pub certificate: bool,
    pub bound: Option<f64>,
    pub wall_seconds: f64,
    pub aborted: Option<String>,
    pub iterations: Vec<IterationRecord>,
}
