//! Neuroevolution controller for a UAV base station that serves NOMA user
//! pairs over a mmWave channel.
//!
//! * [`neat`]: the evolutionary engine (genomes, speciation, reproduction).
//! * [`env`]: the deterministic downlink environment and its reward.
//! * [`sim`]: training, champion evaluation, power sweeps, multi-seed runs.
//! * [`oracle`]: brute-force grid search and a random policy for reference.
//! * [`config`] and [`report`]: run configuration files and output schemas.

pub mod config;
pub mod env;
pub mod neat;
pub mod oracle;
pub mod report;
pub mod sim;
