//! Run configuration files.
//!
//! A config is a TOML document with the sections `[scene]`, `[channel]`,
//! `[neat]`, `[reward]`, `[schedule]`, `[sweep]` and `[run]`. Every key is
//! optional and falls back to the reference deployment (100 m square,
//! four users, 20 dBm per cluster over 2 GHz at 28 GHz-band path loss);
//! unknown keys are errors. Powers are written in dBm and converted to watts
//! once, at load time.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::env::{dbm_to_watts, ChannelParams, EnvError, RewardWeights, Scene};
use crate::neat::{NeatConfig, NeatError};
use crate::sim::{Scenario, Schedule, SimError, SweepSpec};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{0}")]
    Parse(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Neat(#[from] NeatError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("invalid schedule: {0}")]
    Schedule(String),
}

/// `[channel]` in the units people write link budgets in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelSection {
    /// Linear path-loss intercept.
    pub path_loss_intercept: f64,
    pub path_loss_exponent: f64,
    pub noise_dbm: f64,
    pub tx_power_dbm: f64,
    pub antennas_uav: u32,
    pub antennas_ue: u32,
    pub bandwidth_hz: f64,
}

impl Default for ChannelSection {
    fn default() -> Self {
        Self {
            path_loss_intercept: 10f64.powf(-6.4),
            path_loss_exponent: 2.0,
            noise_dbm: -84.0,
            tx_power_dbm: 20.0,
            antennas_uav: 8,
            antennas_ue: 8,
            bandwidth_hz: 2e9,
        }
    }
}

impl ChannelSection {
    pub fn to_params(&self) -> ChannelParams {
        ChannelParams {
            intercept: self.path_loss_intercept,
            exponent: self.path_loss_exponent,
            noise_w: dbm_to_watts(self.noise_dbm),
            mimo_gain: f64::from(self.antennas_uav) * f64::from(self.antennas_ue),
            tx_power_w: dbm_to_watts(self.tx_power_dbm),
            bandwidth_hz: self.bandwidth_hz,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub output_dir: PathBuf,
    pub master_seed: u64,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("runs/default"),
            master_seed: 1,
        }
    }
}

/// The document exactly as written, in input units.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub scene: Scene,
    pub channel: ChannelSection,
    pub neat: NeatConfig,
    pub reward: RewardWeights,
    pub schedule: Schedule,
    pub sweep: SweepSpec,
    pub run: RunSection,
}

/// A validated configuration with derived linear-unit parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    file: ConfigFile,
    pub scenario: Scenario,
    pub neat: NeatConfig,
    pub schedule: Schedule,
    pub sweep: SweepSpec,
    pub output_dir: PathBuf,
    pub master_seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self::from_file(ConfigFile::default()).expect("defaults are valid")
    }
}

impl RunConfig {
    pub fn from_file(file: ConfigFile) -> Result<Self, ConfigError> {
        let scenario = Scenario {
            scene: file.scene.clone(),
            channel: file.channel.to_params(),
            weights: file.reward.clone(),
        };
        scenario.validate()?;
        file.neat.validate()?;
        if file.schedule.generations == 0 || file.schedule.steps_per_episode == 0 {
            return Err(ConfigError::Schedule(
                "generations and steps_per_episode must be at least 1".into(),
            ));
        }
        file.sweep.validate()?;
        Ok(Self {
            scenario,
            neat: file.neat.clone(),
            schedule: file.schedule.clone(),
            sweep: file.sweep.clone(),
            output_dir: file.run.output_dir.clone(),
            master_seed: file.run.master_seed,
            file,
        })
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let file: ConfigFile = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        Self::from_file(file)
    }

    pub fn file(&self) -> &ConfigFile {
        &self.file
    }

    /// The configuration as a document that [`RunConfig::parse`] reads back
    /// to an equal value.
    pub fn to_toml(&self) -> String {
        toml::to_string(&self.file).expect("config sections serialize")
    }

    pub fn set_master_seed(&mut self, seed: u64) {
        self.master_seed = seed;
        self.file.run.master_seed = seed;
    }

    pub fn set_output_dir(&mut self, dir: PathBuf) {
        self.output_dir = dir.clone();
        self.file.run.output_dir = dir;
    }

    /// Overrides the episode schedule, e.g. for shortened runs.
    pub fn set_schedule(&mut self, generations: usize, steps_per_episode: usize) {
        self.schedule.generations = generations;
        self.schedule.steps_per_episode = steps_per_episode;
        self.file.schedule = self.schedule.clone();
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    RunConfig::parse(&text)
}
