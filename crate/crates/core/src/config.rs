//! Run configuration: one JSON document with nested sections matching the
//! domain types. All physical quantities are SI with unit-suffixed key names
//! (`f_p_hz`, `phi_ac_phi0`, …) so a milli-flux-quantum can never be mistaken
//! for a flux quantum.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::calibration::ShotNoiseEnv;
use crate::chain::ChainConfig;
use crate::squid::{PumpConfig, SquidParams};
use crate::{Error, Result};

/// Supported configuration schema major version.
pub const SCHEMA_VERSION: u64 = 1;

/// Input/output locations of a run.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct RunPaths {
    /// Directory receiving all outputs.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    /// Records file consumed by `analyze` (CSV or binary).
    #[serde(default)]
    pub records: Option<PathBuf>,
    /// Lower-band calibration JSON consumed by `analyze`.
    #[serde(default)]
    pub calibration_minus: Option<PathBuf>,
    /// Upper-band calibration JSON consumed by `analyze`.
    #[serde(default)]
    pub calibration_plus: Option<PathBuf>,
}

/// Top-level configuration for all subcommands.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(default = "default_schema_version")]
    pub schema_version: u64,
    pub seed: u64,
    #[serde(default)]
    pub squid: SquidParams,
    pub pump: PumpConfig,
    pub chain: ChainConfig,
    #[serde(default = "ShotNoiseEnv::paper_4p1_ghz")]
    pub env: ShotNoiseEnv,
    #[serde(default)]
    pub paths: RunPaths,
}

fn default_schema_version() -> u64 {
    SCHEMA_VERSION
}

impl RunConfig {
    /// A complete configuration at the measured operating point.
    pub fn paper_default(seed: u64) -> Self {
        RunConfig {
            schema_version: SCHEMA_VERSION,
            seed,
            squid: SquidParams::default(),
            pump: PumpConfig::paper_point(15e-3),
            chain: ChainConfig::paper_chain(seed, 100, 100_000),
            env: ShotNoiseEnv::paper_4p1_ghz(),
            paths: RunPaths::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        self.squid.validate()?;
        self.pump.validate()?;
        self.chain.validate()?;
        self.env.validate()?;
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = crate::io::read_text(path)?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_file(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).expect("config serializes");
        crate::io::atomic_write(path, text.as_bytes())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_validation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.json");
        let cfg = RunConfig::paper_default(7);
        cfg.to_file(&path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        for key in ["schema_version", "f_p_hz", "phi_ac_phi0", "eta_minus", "t_k"] {
            assert!(text.contains(key), "missing key {key}");
        }
        let back = RunConfig::from_file(&path).unwrap();
        assert_eq!(back.seed, 7);
        assert_eq!(back.pump.phi_ac_phi0, 15e-3);
    }

    #[test]
    fn rejects_unknown_schema_version() {
        let mut cfg = RunConfig::paper_default(1);
        cfg.schema_version = 99;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_invalid_nested_section() {
        let mut cfg = RunConfig::paper_default(1);
        cfg.pump.f_minus_hz = 5.0e9; // no longer sums to f_p with f_plus
        assert!(cfg.validate().is_err());
    }
}
