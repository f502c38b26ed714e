//! Deterministic NOMA-mmWave downlink served by a single UAV.
//!
//! Users are paired strong-with-weak once per episode. Inside each cluster
//! the stronger user decodes and cancels its partner's signal (SIC), so only
//! the weaker user sees intra-cluster interference. All rates are kept in
//! spectral-efficiency units (bit/s/Hz).

mod channel;

use serde::{Deserialize, Serialize};

pub use channel::{
    channel_gain, dbm_to_watts, distance_3d, min_alpha_feasible, rate_se, sinr, snr,
    ChannelParams,
};

/// Lower bound on any paired user's power share; the upper bound is
/// `1 - ALPHA_FLOOR`.
pub const ALPHA_FLOOR: f64 = 0.01;

#[derive(Debug, thiserror::Error)]
pub enum EnvError {
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("invalid channel parameters: {0}")]
    InvalidChannel(String),
    #[error("distance must be positive, got {0}")]
    NonPositiveDistance(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Geometry and motion granularity of the served area.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scene {
    /// Side of the square area in meters; the origin is its center.
    pub side_length: f64,
    /// Ground user positions in meters.
    pub users: Vec<[f64; 2]>,
    /// Minimum UAV height in meters.
    pub min_height: f64,
    pub uav_start: [f64; 3],
    /// Per-step move magnitude along x, y and height.
    pub move_step: [f64; 3],
    /// Per-step change of a power-allocation coefficient.
    pub power_step: f64,
}

impl Default for Scene {
    fn default() -> Self {
        Self {
            side_length: 100.0,
            users: vec![[4.0, 15.0], [-44.0, -49.0], [-5.0, 21.0], [47.0, 49.0]],
            min_height: 10.0,
            uav_start: [0.0, 0.0, 50.0],
            move_step: [1.0, 1.0, 1.0],
            power_step: 0.01,
        }
    }
}

impl Scene {
    pub fn validate(&self) -> Result<(), EnvError> {
        let bad = |msg: String| Err(EnvError::InvalidScene(msg));
        if !(self.side_length > 0.0 && self.side_length.is_finite()) {
            return bad(format!("side length must be positive, got {}", self.side_length));
        }
        if self.users.is_empty() {
            return bad("at least one user is required".into());
        }
        let half = self.side_length / 2.0;
        for (i, u) in self.users.iter().enumerate() {
            if !(u[0].abs() <= half && u[1].abs() <= half) {
                return bad(format!("user {i} at {u:?} lies outside the area"));
            }
        }
        if !(self.min_height > 0.0 && self.min_height.is_finite()) {
            return bad(format!("minimum height must be positive, got {}", self.min_height));
        }
        let [x, y, h] = self.uav_start;
        if !(x.abs() <= half && y.abs() <= half && h >= self.min_height && h.is_finite()) {
            return bad(format!("UAV start {:?} violates the flight bounds", self.uav_start));
        }
        if !self.move_step.iter().all(|&m| m > 0.0 && m.is_finite()) {
            return bad(format!("move steps must be positive, got {:?}", self.move_step));
        }
        if !(self.power_step > 0.0 && self.power_step < 1.0) {
            return bad(format!("power step must lie in (0, 1), got {}", self.power_step));
        }
        Ok(())
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_clusters(&self) -> usize {
        self.users.len().div_ceil(2)
    }

    /// Length of the observation vector: four features per user plus height.
    pub fn state_dim(&self) -> usize {
        4 * self.users.len() + 1
    }

    /// Length of the action vector: three axes plus one power entry per cluster.
    pub fn action_dim(&self) -> usize {
        3 + self.num_clusters()
    }

    pub(crate) fn clamp_position(&self, p: [f64; 3]) -> [f64; 3] {
        let half = self.side_length / 2.0;
        [
            p[0].clamp(-half, half),
            p[1].clamp(-half, half),
            p[2].max(self.min_height),
        ]
    }
}

/// A NOMA cluster. `weak` is `None` for the leftover user of an odd count,
/// who then holds the whole cluster power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub strong: usize,
    pub weak: Option<usize>,
}

impl Cluster {
    pub fn members(&self) -> impl Iterator<Item = usize> {
        std::iter::once(self.strong).chain(self.weak)
    }

    /// Re-designates the SIC roles from the current gains; ties go to the
    /// lower user index.
    fn reorder(&mut self, gains: &[f64]) {
        if let Some(w) = self.weak {
            let s = self.strong;
            if gains[w] > gains[s] || (gains[w] == gains[s] && w < s) {
                self.strong = w;
                self.weak = Some(s);
            }
        }
    }
}

/// Strong-weak pairing: users sorted by gain (descending, ties by index),
/// the k-th strongest paired with the k-th weakest.
pub fn pair_users(gains: &[f64]) -> Vec<Cluster> {
    let mut order: Vec<usize> = (0..gains.len()).collect();
    order.sort_by(|&a, &b| gains[b].total_cmp(&gains[a]).then(a.cmp(&b)));
    let n = order.len();
    let mut clusters: Vec<Cluster> = (0..n / 2)
        .map(|k| Cluster {
            strong: order[k],
            weak: Some(order[n - 1 - k]),
        })
        .collect();
    if n % 2 == 1 {
        clusters.push(Cluster {
            strong: order[n / 2],
            weak: None,
        });
    }
    clusters
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Up => 1.0,
            Direction::Down => -1.0,
        }
    }

    /// Positive values map to `Up`; zero and negative values to `Down`.
    pub fn from_output(value: f64) -> Self {
        if value > 0.0 {
            Direction::Up
        } else {
            Direction::Down
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Action {
    /// Moves along x, y and height.
    pub movement: [Direction; 3],
    /// One entry per cluster, applied to the strong member's share.
    pub power: Vec<Direction>,
}

/// Reads network outputs as an action with the sign rule of
/// [`Direction::from_output`]: three axes, then one entry per cluster.
pub fn decode_action(outputs: &[f64], num_clusters: usize) -> Result<Action, EnvError> {
    if outputs.len() != 3 + num_clusters {
        return Err(EnvError::DimensionMismatch {
            expected: 3 + num_clusters,
            got: outputs.len(),
        });
    }
    Ok(Action {
        movement: [
            Direction::from_output(outputs[0]),
            Direction::from_output(outputs[1]),
            Direction::from_output(outputs[2]),
        ],
        power: outputs[3..].iter().map(|&v| Direction::from_output(v)).collect(),
    })
}

/// Weights of the per-step reward and the per-user minimum spectral
/// efficiency.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardWeights {
    /// Weight on the sum spectral efficiency, paid only when every user is
    /// satisfied.
    pub rate: f64,
    /// Paid once per satisfied user.
    pub satisfied: f64,
    /// Weight on the spectral efficiency of unsatisfied users.
    pub unsatisfied: f64,
    /// Minimum spectral efficiency `R_min / W` in bit/s/Hz.
    pub min_se: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self {
            rate: 1.0,
            satisfied: 100.0,
            unsatisfied: 1.0,
            min_se: 0.5,
        }
    }
}

impl RewardWeights {
    pub fn validate(&self) -> Result<(), EnvError> {
        for (name, v) in [
            ("rate", self.rate),
            ("satisfied", self.satisfied),
            ("unsatisfied", self.unsatisfied),
            ("min_se", self.min_se),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(EnvError::InvalidScene(format!(
                    "reward parameter {name} must be finite and non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Reward of one step from per-user spectral efficiencies.
pub fn reward(se: &[f64], weights: &RewardWeights) -> f64 {
    let mut total = 0.0;
    let mut satisfied = 0usize;
    let mut shortfall = 0.0;
    for &s in se {
        total += s;
        if s >= weights.min_se {
            satisfied += 1;
        } else {
            shortfall += s;
        }
    }
    let all = if satisfied == se.len() { 1.0 } else { 0.0 };
    weights.rate * total * all + weights.satisfied * satisfied as f64 + weights.unsatisfied * shortfall
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvState {
    /// UAV position `(x, y, h)` in meters.
    pub uav: [f64; 3],
    /// Per-user power share; co-clustered shares sum to one.
    pub alpha: Vec<f64>,
    /// Per-user linear channel gain at the current position.
    pub gains: Vec<f64>,
    pub clusters: Vec<Cluster>,
    pub step_index: usize,
}

fn gains_at(uav: [f64; 3], scene: &Scene, params: &ChannelParams) -> Vec<f64> {
    scene
        .users
        .iter()
        .map(|&u| {
            channel_gain(distance_3d(uav, u), params)
                .expect("UAV height is bounded below by a positive minimum")
        })
        .collect()
}

/// Start of an episode: UAV at its start point, equal power shares, and the
/// pairing computed from the initial gains (frozen for the episode).
pub fn reset(scene: &Scene, params: &ChannelParams) -> EnvState {
    let uav = scene.uav_start;
    let gains = gains_at(uav, scene, params);
    let clusters = pair_users(&gains);
    let mut alpha = vec![0.5; scene.num_users()];
    for c in clusters.iter().filter(|c| c.weak.is_none()) {
        alpha[c.strong] = 1.0;
    }
    EnvState {
        uav,
        alpha,
        gains,
        clusters,
        step_index: 0,
    }
}

/// Applies one action and returns the successor state.
pub fn step(state: &EnvState, action: &Action, scene: &Scene, params: &ChannelParams) -> EnvState {
    let mut next = state.clone();
    next.advance(action, scene, params);
    next
}

impl EnvState {
    /// In-place [`step`].
    ///
    /// The power entry of each cluster moves the share of the member that
    /// was strong when the action was chosen; its partner takes the
    /// complement. The UAV then moves (clamped to the flight bounds), gains
    /// are recomputed and SIC roles re-designated. The pairing itself never
    /// changes within an episode.
    pub fn advance(&mut self, action: &Action, scene: &Scene, params: &ChannelParams) {
        debug_assert_eq!(action.power.len(), self.clusters.len());
        for (c, d) in self.clusters.iter().zip(&action.power) {
            if let Some(w) = c.weak {
                let a = (self.alpha[c.strong] + d.sign() * scene.power_step)
                    .clamp(ALPHA_FLOOR, 1.0 - ALPHA_FLOOR);
                self.alpha[c.strong] = a;
                self.alpha[w] = 1.0 - a;
            }
        }
        let mut uav = self.uav;
        for axis in 0..3 {
            uav[axis] += action.movement[axis].sign() * scene.move_step[axis];
        }
        self.uav = scene.clamp_position(uav);
        for (g, &u) in self.gains.iter_mut().zip(&scene.users) {
            *g = channel_gain(distance_3d(self.uav, u), params)
                .expect("UAV height is bounded below by a positive minimum");
        }
        for c in &mut self.clusters {
            c.reorder(&self.gains);
        }
        self.step_index += 1;
    }

    pub fn snr(&self, user: usize, params: &ChannelParams) -> f64 {
        snr(self.gains[user], params)
    }

    /// Interference share seen by `user`: the strong partner's share for the
    /// weak member of a pair, zero otherwise.
    fn interference(&self, user: usize) -> f64 {
        self.clusters
            .iter()
            .find(|c| c.weak == Some(user))
            .map_or(0.0, |c| self.alpha[c.strong])
    }

    pub fn sinr(&self, user: usize, params: &ChannelParams) -> f64 {
        sinr(
            self.snr(user, params),
            self.alpha[user],
            self.interference(user),
        )
    }

    pub fn rate_se(&self, user: usize, params: &ChannelParams) -> f64 {
        rate_se(self.sinr(user, params))
    }

    /// Spectral efficiency of every user, written into `out`.
    pub fn spectral_efficiencies_into(&self, params: &ChannelParams, out: &mut [f64]) {
        for c in &self.clusters {
            let s = c.strong;
            out[s] = rate_se(sinr(self.snr(s, params), self.alpha[s], 0.0));
            if let Some(w) = c.weak {
                out[w] = rate_se(sinr(self.snr(w, params), self.alpha[w], self.alpha[s]));
            }
        }
    }

    pub fn spectral_efficiencies(&self, params: &ChannelParams) -> Vec<f64> {
        let mut out = vec![0.0; self.alpha.len()];
        self.spectral_efficiencies_into(params, &mut out);
        out
    }

    pub fn sum_rate_se(&self, params: &ChannelParams) -> f64 {
        self.spectral_efficiencies(params).iter().sum()
    }

    pub fn reward(&self, params: &ChannelParams, weights: &RewardWeights) -> f64 {
        reward(&self.spectral_efficiencies(params), weights)
    }

    /// Observation `[dx_i/L, dy_i/L, alpha_i, log10(g_i)/10]` per user,
    /// followed by `h/L`.
    pub fn observe_into(&self, scene: &Scene, out: &mut [f64]) {
        let l = scene.side_length;
        for (i, u) in scene.users.iter().enumerate() {
            out[4 * i] = (self.uav[0] - u[0]) / l;
            out[4 * i + 1] = (self.uav[1] - u[1]) / l;
            out[4 * i + 2] = self.alpha[i];
            out[4 * i + 3] = self.gains[i].log10() / 10.0;
        }
        out[4 * scene.users.len()] = self.uav[2] / l;
    }
}

pub fn build_state(state: &EnvState, scene: &Scene) -> Vec<f64> {
    let mut out = vec![0.0; scene.state_dim()];
    state.observe_into(scene, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all(d: Direction, clusters: usize) -> Action {
        Action {
            movement: [d; 3],
            power: vec![d; clusters],
        }
    }

    #[test]
    fn pairing_examples() {
        let c = pair_users(&[4.0, 3.0, 2.0, 1.0]);
        assert_eq!(
            c,
            vec![
                Cluster { strong: 0, weak: Some(3) },
                Cluster { strong: 1, weak: Some(2) }
            ]
        );
        assert_eq!(pair_users(&[1.0, 2.0]), vec![Cluster { strong: 1, weak: Some(0) }]);
        let c = pair_users(&[1.0; 6]);
        let pairs: Vec<(usize, Option<usize>)> = c.iter().map(|c| (c.strong, c.weak)).collect();
        assert_eq!(pairs, vec![(0, Some(5)), (1, Some(4)), (2, Some(3))]);
        let odd = pair_users(&[3.0, 2.0, 1.0]);
        assert_eq!(odd[1], Cluster { strong: 1, weak: None });
    }

    #[test]
    fn default_reset() {
        let scene = Scene::default();
        let params = ChannelParams::default();
        let s = reset(&scene, &params);
        assert_eq!(s.uav, [0.0, 0.0, 50.0]);
        assert_eq!(s.alpha, vec![0.5; 4]);
        assert_eq!(s.step_index, 0);
        assert_eq!(
            s.clusters,
            vec![
                Cluster { strong: 0, weak: Some(3) },
                Cluster { strong: 2, weak: Some(1) }
            ]
        );
        assert_eq!(reset(&scene, &params), s);
    }

    #[test]
    fn odd_user_count_gets_full_power() {
        let scene = Scene {
            users: vec![[0.0, 0.0], [10.0, 0.0], [30.0, 0.0]],
            ..Scene::default()
        };
        let params = ChannelParams::default();
        let s = reset(&scene, &params);
        assert_eq!(scene.action_dim(), 5);
        assert_eq!(s.alpha[1], 1.0);
        let next = step(&s, &all(Direction::Up, 2), &scene, &params);
        assert_eq!(next.alpha[1], 1.0);
        assert_eq!(next.alpha[0] + next.alpha[2], 1.0);
    }

    #[test]
    fn clamped_at_corner_floor() {
        let scene = Scene {
            uav_start: [-50.0, 0.0, 10.0],
            ..Scene::default()
        };
        let params = ChannelParams::default();
        let s = reset(&scene, &params);
        let next = step(&s, &all(Direction::Down, 2), &scene, &params);
        assert_eq!(next.uav, [-50.0, -1.0, 10.0]);
        let s = EnvState { uav: [-50.0, -50.0, 10.0], ..s };
        let next = step(&s, &all(Direction::Down, 2), &scene, &params);
        assert_eq!(next.uav, [-50.0, -50.0, 10.0]);
    }

    #[test]
    fn power_step_moves_strong_share() {
        let scene = Scene::default();
        let params = ChannelParams::default();
        let s = reset(&scene, &params);
        let next = step(&s, &all(Direction::Up, 2), &scene, &params);
        assert!((next.alpha[0] - 0.51).abs() < 1e-15);
        assert!((next.alpha[3] - 0.49).abs() < 1e-15);
        for c in &next.clusters {
            assert_eq!(next.alpha[c.strong] + next.alpha[c.weak.unwrap()], 1.0);
        }
        assert_eq!(next.step_index, 1);
    }

    #[test]
    fn share_saturates_at_floor() {
        let scene = Scene::default();
        let params = ChannelParams::default();
        let mut s = reset(&scene, &params);
        for _ in 0..200 {
            s.advance(&all(Direction::Up, 2), &scene, &params);
        }
        assert_eq!(s.alpha[s.clusters[0].strong], 1.0 - ALPHA_FLOOR);
    }

    #[test]
    fn strong_role_follows_gains() {
        let scene = Scene {
            users: vec![[-40.0, 0.0], [40.0, 0.0]],
            uav_start: [-1.0, 0.0, 10.0],
            ..Scene::default()
        };
        let params = ChannelParams::default();
        let mut s = reset(&scene, &params);
        assert_eq!(s.clusters[0].strong, 0);
        let right = Action {
            movement: [Direction::Up, Direction::Up, Direction::Down],
            power: vec![Direction::Up],
        };
        for _ in 0..5 {
            s.advance(&right, &scene, &params);
        }
        assert_eq!(s.clusters[0].strong, 1);
        assert_eq!(s.clusters[0].weak, Some(0));
    }

    #[test]
    fn sic_examples() {
        let params = ChannelParams::default();
        // gain giving snr = 100
        let g = 100.0 * params.noise_w / (params.tx_power_w * params.mimo_gain);
        let s = EnvState {
            uav: [0.0, 0.0, 10.0],
            alpha: vec![0.6, 0.4],
            gains: vec![g, g],
            clusters: vec![Cluster { strong: 0, weak: Some(1) }],
            step_index: 0,
        };
        assert!((s.sinr(0, &params) - 60.0).abs() < 1e-9);
        assert!((s.sinr(1, &params) - 40.0 / 61.0).abs() < 1e-12);
    }

    #[test]
    fn reward_examples() {
        let w = RewardWeights {
            rate: 1.0,
            satisfied: 100.0,
            unsatisfied: 1.0,
            min_se: 0.5,
        };
        let r = reward(&[1.0, 0.6, 0.8, 0.7], &w);
        assert!((r - 403.1).abs() / 403.1 < 1e-9);
        let r = reward(&[1.0, 0.4, 0.8, 0.3], &w);
        assert!((r - 200.7).abs() / 200.7 < 1e-9);
        assert_eq!(reward(&[0.0; 4], &w), 0.0);
    }

    #[test]
    fn sum_rate_example() {
        let se: Vec<f64> = [60.0, 40.0 / 61.0, 60.0, 40.0 / 61.0]
            .iter()
            .map(|&x| rate_se(x))
            .collect();
        let total: f64 = se.iter().sum();
        assert!((total - 13.317).abs() < 1e-3, "{total}");
    }

    #[test]
    fn observation_layout() {
        let scene = Scene::default();
        let params = ChannelParams::default();
        let mut s = reset(&scene, &params);
        s.uav = [4.0, 15.0, 30.0];
        s.gains[1] = 1e-10;
        let obs = build_state(&s, &scene);
        assert_eq!(obs.len(), 17);
        assert_eq!(&obs[0..2], &[0.0, 0.0]);
        assert_eq!(obs[2], 0.5);
        assert!((obs[7] + 1.0).abs() < 1e-12);
        assert_eq!(obs[16], 0.3);
    }

    #[test]
    fn decoding() {
        let a = decode_action(&[0.3, -2.0, 0.0, 1.5, -0.1], 2).unwrap();
        assert_eq!(a.movement, [Direction::Up, Direction::Down, Direction::Down]);
        assert_eq!(a.power, vec![Direction::Up, Direction::Down]);
        let z = decode_action(&[0.0; 5], 2).unwrap();
        assert_eq!(z, all(Direction::Down, 2));
        let v = [0.3, -2.0, 0.0, 1.5, -0.1];
        let scaled: Vec<f64> = v.iter().map(|x| x * 7.5).collect();
        assert_eq!(decode_action(&scaled, 2).unwrap(), a);
        assert!(matches!(
            decode_action(&[0.0; 4], 2),
            Err(EnvError::DimensionMismatch { expected: 5, got: 4 })
        ));
    }

    #[test]
    fn scene_validation() {
        Scene::default().validate().unwrap();
        let bad = Scene {
            users: vec![[60.0, 0.0]],
            ..Scene::default()
        };
        assert!(bad.validate().is_err());
        let bad = Scene {
            min_height: 0.0,
            ..Scene::default()
        };
        assert!(bad.validate().is_err());
    }
}
