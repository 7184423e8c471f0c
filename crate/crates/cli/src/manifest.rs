//! Run manifests written next to every output file.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::Context;
use dbs_core::RawChannelParams;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TauChoice {
    /// Gate time the run used, in seconds.
    pub gate_time: f64,
    /// Whether it came from the loss-crossover calibration.
    pub calibrated: bool,
    pub calibration_dimension: Option<usize>,
    pub calibration_target_loss: Option<f64>,
    pub calibration_dark_rate: Option<f64>,
    pub calibration_mean_photon_number: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub code_version: String,
    pub seed: Option<u64>,
    pub params: Option<RawChannelParams>,
    pub tau: Option<TauChoice>,
    pub outputs: Vec<String>,
    pub started_unix: u64,
    pub finished_unix: u64,
}

pub fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

impl RunManifest {
    pub fn new(command: &str, argv: &[String]) -> Self {
        RunManifest {
            command: command.to_string(),
            argv: argv.to_vec(),
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: None,
            params: None,
            tau: None,
            outputs: Vec::new(),
            started_unix: unix_now(),
            finished_unix: 0,
        }
    }

    pub fn write(mut self, path: &Path) -> anyhow::Result<()> {
        self.finished_unix = unix_now();
        let json = serde_json::to_string_pretty(&self)?;
        fs::write(path, json + "\n").with_context(|| format!("writing {}", path.display()))
    }

    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}

/// `out.csv` → `out.csv.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}
