//! Reference solutions: an exhaustive static grid search over UAV position
//! and power split, and a uniformly random controller.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{
    channel_gain, distance_3d, pair_users, rate_se, sinr, snr, Cluster, Direction, ALPHA_FLOOR,
};
use crate::sim::{rollout, EpisodeMetrics, Scenario, SimError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Spacing of the x and y grids in meters.
    pub xy_spacing: f64,
    pub heights: Vec<f64>,
    /// Spacing of the strong member's power share grid.
    pub alpha_step: f64,
    /// Discard candidates where any user misses the minimum spectral efficiency.
    pub enforce_fairness: bool,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            xy_spacing: 5.0,
            heights: vec![10.0, 30.0, 50.0],
            alpha_step: 0.01,
            enforce_fairness: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSolution {
    pub position: [f64; 3],
    /// Per-user power share.
    pub alpha: Vec<f64>,
    pub sum_se: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("no grid candidate meets the minimum spectral efficiency for every user")]
    Infeasible,
    #[error(transparent)]
    Env(#[from] crate::env::EnvError),
}

impl GridSpec {
    pub fn validate(&self, min_height: f64) -> Result<(), OracleError> {
        if !(self.xy_spacing > 0.0 && self.xy_spacing.is_finite()) {
            return Err(OracleError::InvalidGrid(format!(
                "xy spacing must be positive, got {}",
                self.xy_spacing
            )));
        }
        if !(self.alpha_step > 0.0 && self.alpha_step <= 0.5) {
            return Err(OracleError::InvalidGrid(format!(
                "alpha step must lie in (0, 0.5], got {}",
                self.alpha_step
            )));
        }
        if self.heights.is_empty() || self.heights.iter().any(|&h| !(h >= min_height)) {
            return Err(OracleError::InvalidGrid(format!(
                "heights {:?} must be non-empty and at least {min_height}",
                self.heights
            )));
        }
        Ok(())
    }

    /// `-L/2, -L/2 + s, ...` up to `L/2`.
    pub fn xy_values(&self, side_length: f64) -> Vec<f64> {
        let half = side_length / 2.0;
        let count = (side_length / self.xy_spacing + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|k| -half + k as f64 * self.xy_spacing)
            .collect()
    }

    /// Multiples of `alpha_step` inside `[ALPHA_FLOOR, 1 - ALPHA_FLOOR]`.
    pub fn alpha_values(&self) -> Vec<f64> {
        (1..)
            .map(|k| k as f64 * self.alpha_step)
            .take_while(|&a| a <= 1.0 - ALPHA_FLOOR + 1e-12)
            .filter(|&a| a >= ALPHA_FLOOR - 1e-12)
            .collect()
    }
}

/// Best candidate at one position: (sum SE, per-cluster alpha indices).
fn best_at_position(
    snrs: &[f64],
    clusters: &[Cluster],
    alphas: &[f64],
    min_se: f64,
    fair: bool,
) -> Option<(f64, Vec<usize>)> {
    let mut idx = vec![0usize; clusters.len()];
    let mut best: Option<(f64, Vec<usize>)> = None;
    // clusters without a partner carry no choice
    let free: Vec<usize> = (0..clusters.len())
        .filter(|&c| clusters[c].weak.is_some())
        .collect();
    loop {
        let mut total = 0.0;
        let mut feasible = true;
        for (c, cl) in clusters.iter().enumerate() {
            let (a_s, a_w) = match cl.weak {
                Some(_) => (alphas[idx[c]], 1.0 - alphas[idx[c]]),
                None => (1.0, 0.0),
            };
            let se_s = rate_se(sinr(snrs[cl.strong], a_s, 0.0));
            total += se_s;
            feasible &= se_s >= min_se;
            if let Some(w) = cl.weak {
                let se_w = rate_se(sinr(snrs[w], a_w, a_s));
                total += se_w;
                feasible &= se_w >= min_se;
            }
        }
        if (!fair || feasible) && best.as_ref().is_none_or(|(b, _)| total > *b) {
            best = Some((total, idx.clone()));
        }
        // odometer over the free clusters, last cluster fastest
        let mut carry = true;
        for &c in free.iter().rev() {
            idx[c] += 1;
            if idx[c] < alphas.len() {
                carry = false;
                break;
            }
            idx[c] = 0;
        }
        if carry {
            return best;
        }
    }
}

/// Exhaustive maximisation of the sum spectral efficiency over a static
/// grid of UAV positions and per-cluster power splits.
///
/// Users are paired per candidate position. Candidates are scanned in the
/// order x, y, h, then power shares ascending; the first maximum wins.
pub fn grid_search(scenario: &Scenario, grid: &GridSpec) -> Result<GridSolution, OracleError> {
    scenario.validate()?;
    grid.validate(scenario.scene.min_height)?;
    let Scenario {
        scene,
        channel,
        weights,
    } = scenario;
    let xs = grid.xy_values(scene.side_length);
    let alphas = grid.alpha_values();
    let positions: Vec<[f64; 3]> = xs
        .iter()
        .flat_map(|&x| {
            xs.iter()
                .flat_map(move |&y| grid.heights.iter().map(move |&h| [x, y, h]))
        })
        .collect();

    let per_position: Vec<Option<(f64, Vec<usize>, Vec<Cluster>)>> = positions
        .par_iter()
        .map(|&pos| {
            let gains: Vec<f64> = scene
                .users
                .iter()
                .map(|&u| channel_gain(distance_3d(pos, u), channel).expect("height >= h0 > 0"))
                .collect();
            let snrs: Vec<f64> = gains.iter().map(|&g| snr(g, channel)).collect();
            let clusters = pair_users(&gains);
            best_at_position(&snrs, &clusters, &alphas, weights.min_se, grid.enforce_fairness)
                .map(|(v, idx)| (v, idx, clusters))
        })
        .collect();

    let mut best: Option<(usize, f64, Vec<usize>, Vec<Cluster>)> = None;
    for (p, cand) in per_position.into_iter().enumerate() {
        if let Some((v, idx, clusters)) = cand {
            if best.as_ref().is_none_or(|b| v > b.1) {
                best = Some((p, v, idx, clusters));
            }
        }
    }
    let (p, sum_se, idx, clusters) = best.ok_or(OracleError::Infeasible)?;
    let mut alpha = vec![0.0; scene.num_users()];
    for (c, cl) in clusters.iter().enumerate() {
        match cl.weak {
            Some(w) => {
                alpha[cl.strong] = alphas[idx[c]];
                alpha[w] = 1.0 - alphas[idx[c]];
            }
            None => alpha[cl.strong] = 1.0,
        }
    }
    Ok(GridSolution {
        position: positions[p],
        alpha,
        sum_se,
    })
}

/// Per-user spectral efficiency of a static configuration, with users
/// paired at `position` and `alpha` the per-user power shares.
pub fn static_spectral_efficiencies(
    scenario: &Scenario,
    position: [f64; 3],
    alpha: &[f64],
) -> Vec<f64> {
    let Scenario { scene, channel, .. } = scenario;
    let snrs: Vec<f64> = scene
        .users
        .iter()
        .map(|&u| snr(channel_gain(distance_3d(position, u), channel).expect("positive height"), channel))
        .collect();
    let mut se = vec![0.0; snrs.len()];
    for cl in pair_users(&snrs) {
        se[cl.strong] = rate_se(sinr(snrs[cl.strong], alpha[cl.strong], 0.0));
        if let Some(w) = cl.weak {
            se[w] = rate_se(sinr(snrs[w], alpha[w], alpha[cl.strong]));
        }
    }
    se
}

pub fn static_sum_se(scenario: &Scenario, position: [f64; 3], alpha: &[f64]) -> f64 {
    static_spectral_efficiencies(scenario, position, alpha).iter().sum()
}

/// An episode in which every action component is an independent fair coin.
pub fn random_policy(scenario: &Scenario, steps: usize, seed: u64) -> Result<EpisodeMetrics, SimError> {
    scenario.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coin = move || {
        if rng.random_bool(0.5) {
            Direction::Up
        } else {
            Direction::Down
        }
    };
    rollout(
        scenario,
        steps,
        |_, _, action| {
            action.movement.iter_mut().for_each(|d| *d = coin());
            action.power.iter_mut().for_each(|d| *d = coin());
            Ok(())
        },
        None,
    )
}
