//! Detector efficiencies and their outcome-class model.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative coincidence efficiencies `[H1, H2, V1, V2]` measured for the
/// `|1,1>` source.
pub const EFFICIENCIES_11: [f64; 4] = [0.91, 0.91, 0.82, 1.0];
/// Relative coincidence efficiencies `[H1, H2, V1, V2]` measured for the
/// `|2,0>` source.
pub const EFFICIENCIES_20: [f64; 4] = [0.75, 0.76, 1.0, 0.57];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassEfficiency {
    pub n: usize,
    pub k: usize,
    pub efficiency: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    /// Relative efficiencies of the two detectors behind each output port,
    /// ordered `[H1, H2, V1, V2]`.
    #[serde(default = "unit_channels")]
    pub channel_efficiencies: [f64; 4],
    /// Probability that two photons leaving the same port are split onto
    /// both detectors of that port.
    #[serde(default = "half")]
    pub split_factor: f64,
    /// Explicit per-outcome efficiencies, replacing the channel model.
    #[serde(default)]
    pub class_efficiencies: Vec<ClassEfficiency>,
    #[serde(default = "default_trials")]
    pub trials: u64,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    /// Use expected counts instead of sampling.
    #[serde(default)]
    pub exact: bool,
}

fn unit_channels() -> [f64; 4] {
    [1.0; 4]
}
fn half() -> f64 {
    0.5
}
fn default_trials() -> u64 {
    100_000
}
fn default_runs() -> usize {
    3
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            channel_efficiencies: unit_channels(),
            split_factor: half(),
            class_efficiencies: vec![],
            trials: default_trials(),
            runs: default_runs(),
            seed: 0,
            exact: false,
        }
    }
}

/// Two photons reaching one port register only when split onto both of
/// its detectors; a single photon sees the mean of the pair.
fn port_factor(eff: [f64; 2], photons: usize, split: f64) -> f64 {
    let mean = 0.5 * (eff[0] + eff[1]);
    match photons {
        0 => 1.0,
        1 => mean,
        2 => split * eff[0] * eff[1],
        j => mean.powi(j as i32),
    }
}

impl DetectorConfig {
    /// Ideal detectors: every outcome registers.
    pub fn unit() -> Self {
        Self { split_factor: 1.0, ..Self::default() }
    }

    /// Named presets: `unit`, `eff11` and `eff20`.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "unit" => Ok(Self::unit()),
            "eff11" => Ok(Self { channel_efficiencies: EFFICIENCIES_11, ..Self::default() }),
            "eff20" => Ok(Self { channel_efficiencies: EFFICIENCIES_20, ..Self::default() }),
            _ => Err(Error::InvalidConfig(format!("unknown detector preset '{name}' (unit, eff11, eff20)"))),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        let in_unit = |x: f64| x > 0.0 && x <= 1.0;
        if !self.channel_efficiencies.iter().all(|&e| in_unit(e)) {
            return Err(Error::InvalidConfig("channel efficiencies must lie in (0, 1]".into()));
        }
        if !in_unit(self.split_factor) {
            return Err(Error::InvalidConfig("split factor must lie in (0, 1]".into()));
        }
        for c in &self.class_efficiencies {
            if !in_unit(c.efficiency) || c.k > c.n {
                return Err(Error::InvalidConfig(format!(
                    "class (N={}, k={}) efficiency {} invalid",
                    c.n, c.k, c.efficiency
                )));
            }
        }
        if self.trials == 0 || self.runs == 0 {
            return Err(Error::InvalidConfig("trials and runs must be at least 1".into()));
        }
        Ok(())
    }

    /// Relative detection efficiency of the outcome with `k` of `n` photons
    /// in the H port.
    pub fn class_efficiency(&self, n: usize, k: usize) -> f64 {
        if let Some(c) = self.class_efficiencies.iter().find(|c| c.n == n && c.k == k) {
            return c.efficiency;
        }
        let [h1, h2, v1, v2] = self.channel_efficiencies;
        port_factor([h1, h2], k, self.split_factor) * port_factor([v1, v2], n - k, self.split_factor)
    }
}
