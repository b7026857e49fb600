//! Run configuration: one TOML file with a default for every key.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::confidence::{RootPriors, StateThresholds};
use crate::controllers::SweepParams;
use crate::error::{Error, Result};
use crate::middleware::{PipelineConfig, Strategy};
use crate::resource::{RmParams, ThermalParams};
use crate::rl::RlHyperparams;
use crate::sim::{SpeedDuty, Track, TrackSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    /// Track description file; the built-in loop when absent.
    pub track: Option<PathBuf>,
    pub strategy: Strategy,
    pub seed: u64,
    pub laps: u32,
    /// Speed duty-% the car is commanded at.
    pub speed_setpoint: f64,
    /// Greedy steps of an exploitation rollout.
    pub exploit_steps: usize,
    pub output_dir: PathBuf,
    /// Q-table read by exploit, evaluate and resource-sim; defaults to the one explore writes.
    pub qtable: Option<PathBuf>,
    pub rl: RlHyperparams,
    pub pipeline: PipelineConfig,
    pub thermal: ThermalParams,
    pub resource: RmParams,
    /// Simulated seconds of a resource-manager run.
    pub resource_duration: f64,
    pub priors: RootPriors,
    pub confidence_thresholds: StateThresholds,
    pub ld_sweep: SweepParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            track: None,
            strategy: Strategy::Dynamic,
            seed: 1,
            laps: 10,
            speed_setpoint: 15.62,
            exploit_steps: 1000,
            output_dir: PathBuf::from("out"),
            qtable: None,
            rl: RlHyperparams::default(),
            pipeline: PipelineConfig::default(),
            thermal: ThermalParams::default(),
            resource: RmParams::default(),
            resource_duration: 3600.0,
            priors: RootPriors::default(),
            confidence_thresholds: StateThresholds::default(),
            ld_sweep: SweepParams::default(),
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn load_track(&self) -> Result<Track> {
        match &self.track {
            Some(p) => Track::new(TrackSpec::load(p)?),
            None => Ok(Track::default_loop()),
        }
    }

    pub fn setpoint(&self) -> Result<SpeedDuty> {
        SpeedDuty::new(self.speed_setpoint)
    }

    pub fn qtable_path(&self) -> PathBuf {
        self.qtable.clone().unwrap_or_else(|| self.output_dir.join("qtable.txt"))
    }

    /// Checks every section against the track it will run on.
    pub fn validate(&self, track: &Track) -> Result<()> {
        self.pipeline.validate(track)?;
        self.rl.validate()?;
        self.thermal.validate()?;
        self.resource.validate()?;
        self.priors.validate()?;
        self.setpoint()?;
        if self.laps == 0 || !(self.resource_duration > 0.0) {
            return Err(Error::Config("laps and resource_duration must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_all_defaults() {
        assert_eq!(RunConfig::from_toml("").unwrap(), RunConfig::default());
    }

    #[test]
    fn round_trips() {
        let c = RunConfig::default();
        assert_eq!(RunConfig::from_toml(&c.to_toml()).unwrap(), c);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(RunConfig::from_toml("sead = 3").is_err());
        assert!(RunConfig::from_toml("[rl]\nalpha = 0.2\nbeta = 1").is_err());
        assert!(RunConfig::from_toml("[pipeline.lec]\ngain = 3\ngian = 2").is_err());
    }

    #[test]
    fn partial_sections_keep_other_defaults() {
        let c = RunConfig::from_toml("seed = 9\nstrategy = \"lec-only\"\n[rl]\ngamma = 0.5\n").unwrap();
        assert_eq!(c.seed, 9);
        assert_eq!(c.strategy, Strategy::LecOnly);
        assert_eq!(c.rl.gamma, 0.5);
        assert_eq!(c.rl.alpha, 0.1);
    }

    #[test]
    fn fog_roster_parses() {
        let c = RunConfig::from_toml(
            "[[resource.fog]]\nid = \"lab\"\nbase_latency_ms = 12.0\njitter_ms = 1.5\n",
        )
        .unwrap();
        assert_eq!(c.resource.fog.len(), 1);
        assert_eq!(c.resource.fog[0].id, "lab");
    }
}
