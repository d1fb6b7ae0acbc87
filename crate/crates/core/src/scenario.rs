//! Named simulation presets: transition speed (slow, quick) crossed with the
//! within/between density gap (easy, hard).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generator::{calibrate_theta, ThergmConfig, TransitionMatrix};
use crate::stats::StatisticSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Speed {
    Slow,
    Quick,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gap {
    Easy,
    Hard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Preset {
    pub speed: Speed,
    pub gap: Gap,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset { speed: Speed::Slow, gap: Gap::Easy },
        Preset { speed: Speed::Slow, gap: Gap::Hard },
        Preset { speed: Speed::Quick, gap: Gap::Easy },
        Preset { speed: Speed::Quick, gap: Gap::Hard },
    ];

    /// Probability of staying in the current cluster per step.
    pub fn stay(&self) -> f64 {
        match self.speed {
            Speed::Slow => 0.95,
            Speed::Quick => 0.85,
        }
    }

    /// `(p_within, p_between)`.
    pub fn densities(&self) -> (f64, f64) {
        match self.gap {
            Gap::Easy => (0.15, 0.01),
            Gap::Hard => (0.10, 0.03),
        }
    }

    /// Generator configuration with `k` clusters of `size` nodes observed at
    /// `times` time points.
    pub fn config(&self, k: usize, size: usize, times: usize, seed: u64) -> Result<ThergmConfig> {
        if times < 2 {
            return Err(Error::Config("a scenario needs at least two time points".into()));
        }
        let spec: StatisticSpec = "edges,triangles,stability".parse()?;
        let (p_within, p_between) = self.densities();
        let theta = calibrate_theta(&spec, p_within, DISSOLVE, TRIANGLE, size)?;
        Ok(ThergmConfig {
            k,
            n_per_cluster: vec![size; k],
            steps: times - 1,
            spec,
            theta: vec![theta; k],
            transition: TransitionMatrix::sticky(k, self.stay()),
            p_within,
            p_between,
            seed,
            ..ThergmConfig::default()
        })
    }
}

/// Per-step dissolution probability used to calibrate the within-cluster model.
pub const DISSOLVE: f64 = 0.1;
/// Triangle coefficient of the within-cluster model.
pub const TRIANGLE: f64 = 0.2;

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.speed {
            Speed::Slow => "slow",
            Speed::Quick => "quick",
        };
        let g = match self.gap {
            Gap::Easy => "easy",
            Gap::Hard => "hard",
        };
        write!(f, "{s}-{g}")
    }
}

impl FromStr for Preset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (a, b) = s
            .split_once(['-', '_', '/'])
            .ok_or_else(|| Error::Config(format!("preset '{s}' is not of the form speed-gap")))?;
        let speed = match a.trim().to_ascii_lowercase().as_str() {
            "slow" => Speed::Slow,
            "quick" => Speed::Quick,
            other => return Err(Error::Config(format!("unknown speed '{other}'"))),
        };
        let gap = match b.trim().to_ascii_lowercase().as_str() {
            "easy" => Gap::Easy,
            "hard" => Gap::Hard,
            other => return Err(Error::Config(format!("unknown gap '{other}'"))),
        };
        Ok(Preset { speed, gap })
    }
}
