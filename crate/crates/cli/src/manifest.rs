//! Run manifests: enough to re-run a command and reproduce its outputs.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::commands;
use crate::config::Config;
use crate::failure::Failure;

pub const FILE_NAME: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub args: Vec<String>,
    /// Every setting the command read, with defaults filled in.
    pub config: BTreeMap<String, String>,
    pub seed: Option<u64>,
    /// Files written, relative to the output directory.
    pub artifacts: Vec<String>,
    pub wall_clock_secs: f64,
    pub version: String,
    pub threads: usize,
}

pub fn read(path: &Path) -> Result<Manifest, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::config(format!("cannot read manifest {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::config(format!("invalid manifest {}: {e}", path.display())))
}

/// Re-runs the command recorded in `path`, optionally into another directory.
pub fn replay(path: &Path, out: Option<&str>, args: &[String]) -> Result<(), Failure> {
    let m = read(path)?;
    let mut cfg = Config::from_resolved(&m.config)?;
    if let Some(o) = out {
        cfg.set("out", o)?;
    }
    commands::execute(&m.command, cfg, args)
}
