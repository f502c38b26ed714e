//! Training and evaluation loops.
//!
//! A genome's fitness is its mean per-step reward over one episode of
//! `steps` time steps starting from [`env::reset`]. The environment is
//! deterministic, so fitness is a pure function of the genome and evaluations
//! can run in parallel without affecting results.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::env::{self, Action, ChannelParams, Direction, EnvError, EnvState, RewardWeights, Scene};
use crate::neat::{init_population, FeedForwardNetwork, Genome, NeatConfig, NeatError};

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Neat(#[from] NeatError),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error("{0}")]
    InvalidInput(String),
}

/// Everything that defines the control problem.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scenario {
    pub scene: Scene,
    pub channel: ChannelParams,
    pub weights: RewardWeights,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), EnvError> {
        self.scene.validate()?;
        self.channel.validate()?;
        self.weights.validate()
    }

    fn check_genome(&self, genome: &Genome) -> Result<(), SimError> {
        let (s, a) = (self.scene.state_dim(), self.scene.action_dim());
        if genome.state_dim != s || genome.action_dim != a {
            return Err(SimError::InvalidInput(format!(
                "genome is {}x{} but the scene needs {s}x{a}",
                genome.state_dim, genome.action_dim
            )));
        }
        Ok(())
    }
}

/// Generations, episode length and the seeds used for repeated runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Schedule {
    pub generations: usize,
    pub steps_per_episode: usize,
    pub seeds: Vec<u64>,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            generations: 1000,
            steps_per_episode: 300,
            seeds: (1..=10).collect(),
        }
    }
}

/// One row of an episode trace, recorded after the step was applied.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub step: usize,
    pub uav: [f64; 3],
    pub alpha: Vec<f64>,
    pub se: Vec<f64>,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeMetrics {
    pub mean_reward: f64,
    /// Mean over steps of the sum spectral efficiency (bit/s/Hz).
    pub mean_sum_se: f64,
    pub per_user_mean_se: Vec<f64>,
    /// Fraction of (user, step) pairs meeting the minimum spectral efficiency.
    pub satisfaction_fraction: f64,
    /// Fraction of steps in which every user meets it.
    pub all_satisfied_fraction: f64,
    pub final_position: [f64; 3],
}

/// Runs one episode with `policy` choosing each action from the current
/// observation. `trace` receives one row per step when present.
pub fn rollout<P>(
    scenario: &Scenario,
    steps: usize,
    mut policy: P,
    mut trace: Option<&mut Vec<TraceRow>>,
) -> Result<EpisodeMetrics, SimError>
where
    P: FnMut(&EnvState, &[f64], &mut Action) -> Result<(), SimError>,
{
    let Scenario {
        scene,
        channel,
        weights,
    } = scenario;
    if steps == 0 {
        return Err(SimError::InvalidInput("an episode needs at least one step".into()));
    }
    let n = scene.num_users();
    let mut state = env::reset(scene, channel);
    let mut obs = vec![0.0; scene.state_dim()];
    let mut action = Action {
        movement: [Direction::Down; 3],
        power: vec![Direction::Down; scene.num_clusters()],
    };
    let mut se = vec![0.0; n];
    let mut per_user = vec![0.0; n];
    let (mut reward_sum, mut se_sum) = (0.0, 0.0);
    let (mut satisfied_pairs, mut satisfied_steps) = (0usize, 0usize);

    for _ in 0..steps {
        state.observe_into(scene, &mut obs);
        policy(&state, &obs, &mut action)?;
        state.advance(&action, scene, channel);
        state.spectral_efficiencies_into(channel, &mut se);
        let r = env::reward(&se, weights);
        reward_sum += r;
        let ok = se.iter().filter(|&&s| s >= weights.min_se).count();
        satisfied_pairs += ok;
        satisfied_steps += usize::from(ok == n);
        for (acc, &s) in per_user.iter_mut().zip(&se) {
            *acc += s;
        }
        se_sum += se.iter().sum::<f64>();
        if let Some(rows) = trace.as_deref_mut() {
            rows.push(TraceRow {
                step: state.step_index,
                uav: state.uav,
                alpha: state.alpha.clone(),
                se: se.clone(),
                reward: r,
            });
        }
    }

    let t = steps as f64;
    Ok(EpisodeMetrics {
        mean_reward: reward_sum / t,
        mean_sum_se: se_sum / t,
        per_user_mean_se: per_user.iter().map(|s| s / t).collect(),
        satisfaction_fraction: satisfied_pairs as f64 / (t * n as f64),
        all_satisfied_fraction: satisfied_steps as f64 / t,
        final_position: state.uav,
    })
}

fn genome_policy(
    genome: &Genome,
) -> Result<impl FnMut(&EnvState, &[f64], &mut Action) -> Result<(), SimError>, SimError> {
    let mut net = FeedForwardNetwork::new(genome)?;
    let mut out = vec![0.0; net.num_outputs()];
    Ok(move |_: &EnvState, obs: &[f64], action: &mut Action| {
        net.activate_into(obs, &mut out)?;
        for (axis, &v) in action.movement.iter_mut().zip(&out[..3]) {
            *axis = Direction::from_output(v);
        }
        for (p, &v) in action.power.iter_mut().zip(&out[3..]) {
            *p = Direction::from_output(v);
        }
        Ok(())
    })
}

/// Plays one episode with the genome as controller. Returns the mean reward
/// (the genome's fitness) and the per-step trace.
pub fn run_episode(
    genome: &Genome,
    scenario: &Scenario,
    steps: usize,
) -> Result<(f64, Vec<TraceRow>), SimError> {
    let (metrics, trace) = evaluate_champion(genome, scenario, steps)?;
    Ok((metrics.mean_reward, trace))
}

/// Episode metrics of a genome together with its trace.
pub fn evaluate_champion(
    genome: &Genome,
    scenario: &Scenario,
    steps: usize,
) -> Result<(EpisodeMetrics, Vec<TraceRow>), SimError> {
    scenario.check_genome(genome)?;
    let mut trace = Vec::with_capacity(steps);
    let metrics = rollout(scenario, steps, genome_policy(genome)?, Some(&mut trace))?;
    Ok((metrics, trace))
}

/// Episode metrics without recording a trace.
pub fn evaluate(genome: &Genome, scenario: &Scenario, steps: usize) -> Result<EpisodeMetrics, SimError> {
    scenario.check_genome(genome)?;
    rollout(scenario, steps, genome_policy(genome)?, None)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub species_count: usize,
    /// Mean sum spectral efficiency of the generation's best genome.
    pub best_mean_sum_se: f64,
    /// Fraction of (user, step) pairs in which the best genome met the
    /// minimum spectral efficiency.
    pub min_rate_satisfaction: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    /// Best genome seen in any generation, with its fitness set.
    pub champion: Genome,
    pub records: Vec<GenerationRecord>,
}

/// Evolves a population for `generations` generations.
///
/// `seed` fixes both the initial population and every reproduction draw, so
/// identical arguments give identical outcomes.
pub fn train(
    scenario: &Scenario,
    neat: &NeatConfig,
    generations: usize,
    steps: usize,
    seed: u64,
) -> Result<TrainOutcome, SimError> {
    scenario.validate()?;
    if generations == 0 || steps == 0 {
        return Err(SimError::InvalidInput(
            "generations and steps per episode must both be at least 1".into(),
        ));
    }
    let mut population = init_population(
        neat,
        scenario.scene.state_dim(),
        scenario.scene.action_dim(),
        seed,
    )?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);

    let mut records = Vec::with_capacity(generations);
    let mut champion: Option<Genome> = None;
    for generation in 0..generations {
        let metrics: Vec<EpisodeMetrics> = population
            .genomes
            .par_iter()
            .map(|g| evaluate(g, scenario, steps))
            .collect::<Result<_, _>>()?;
        let fitnesses: Vec<f64> = metrics.iter().map(|m| m.mean_reward).collect();

        let best = fitnesses
            .iter()
            .enumerate()
            .fold(0, |b, (i, &f)| if f > fitnesses[b] { i } else { b });
        let record = GenerationRecord {
            generation,
            best_fitness: fitnesses[best],
            mean_fitness: fitnesses.iter().sum::<f64>() / fitnesses.len() as f64,
            species_count: population.species.len(),
            best_mean_sum_se: metrics[best].mean_sum_se,
            min_rate_satisfaction: metrics[best].satisfaction_fraction,
        };
        log::debug!(
            "generation {generation}: best {:.4} mean {:.4} species {}",
            record.best_fitness,
            record.mean_fitness,
            record.species_count
        );
        records.push(record);

        if champion
            .as_ref()
            .is_none_or(|c| fitnesses[best] > c.fitness.unwrap_or(f64::NEG_INFINITY))
        {
            let mut g = population.genomes[best].clone();
            g.fitness = Some(fitnesses[best]);
            champion = Some(g);
        }
        if generation + 1 < generations {
            population.next_generation(&fitnesses, &mut rng)?;
        }
    }

    Ok(TrainOutcome {
        champion: champion.expect("at least one generation ran"),
        records,
    })
}

/// First generation whose best fitness reaches `fraction` of the final
/// generation's best fitness.
pub fn convergence_generation(records: &[GenerationRecord], fraction: f64) -> Option<usize> {
    let last = records.last()?.best_fitness;
    records
        .iter()
        .find(|r| r.best_fitness >= fraction * last)
        .map(|r| r.generation)
}

/// Transmit-power sweep applied to a fixed controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSpec {
    pub p_min_dbm: f64,
    pub p_max_dbm: f64,
    pub step_dbm: f64,
    /// Power consumed besides transmission, in dBm.
    pub p_static_dbm: f64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            p_min_dbm: -20.0,
            p_max_dbm: 80.0,
            step_dbm: 0.1,
            p_static_dbm: 40.0,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<(), SimError> {
        if !(self.p_min_dbm < self.p_max_dbm && self.step_dbm > 0.0) {
            return Err(SimError::InvalidInput(format!(
                "sweep needs p_min < p_max and a positive step, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Inclusive grid `p_min, p_min + step, ..., p_max`.
    pub fn powers(&self) -> Vec<f64> {
        let span = (self.p_max_dbm - self.p_min_dbm) / self.step_dbm;
        let count = (span + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|k| self.p_min_dbm + k as f64 * self.step_dbm)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub pt_dbm: f64,
    pub mean_se: f64,
    /// Spectral efficiency per watt of transmit plus static power.
    pub ee: f64,
}

/// Evaluates the controller at every transmit power of the sweep grid.
pub fn power_sweep(
    genome: &Genome,
    scenario: &Scenario,
    sweep: &SweepSpec,
    steps: usize,
) -> Result<Vec<SweepPoint>, SimError> {
    sweep.validate()?;
    scenario.check_genome(genome)?;
    let p_static = env::dbm_to_watts(sweep.p_static_dbm);
    sweep
        .powers()
        .into_par_iter()
        .map(|pt_dbm| {
            let at_power = Scenario {
                channel: scenario.channel.with_tx_power_dbm(pt_dbm),
                ..scenario.clone()
            };
            let m = evaluate(genome, &at_power, steps)?;
            Ok(SweepPoint {
                pt_dbm,
                mean_se: m.mean_sum_se,
                ee: m.mean_sum_se / (env::dbm_to_watts(pt_dbm) + p_static),
            })
        })
        .collect()
}

/// Per-generation mean and sample standard deviation across runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CiRow {
    pub generation: usize,
    pub best_fitness_mean: f64,
    pub best_fitness_std: f64,
    pub mean_fitness_mean: f64,
    pub mean_fitness_std: f64,
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Trains once per seed and summarises the learning curves.
pub fn multi_seed(
    scenario: &Scenario,
    neat: &NeatConfig,
    generations: usize,
    steps: usize,
    seeds: &[u64],
) -> Result<Vec<CiRow>, SimError> {
    if seeds.len() < 2 {
        return Err(SimError::InvalidInput(format!(
            "confidence intervals need at least 2 runs, got {}",
            seeds.len()
        )));
    }
    let runs: Vec<Vec<GenerationRecord>> = seeds
        .iter()
        .map(|&seed| train(scenario, neat, generations, steps, seed).map(|o| o.records))
        .collect::<Result<_, _>>()?;
    Ok((0..generations)
        .map(|g| {
            let best: Vec<f64> = runs.iter().map(|r| r[g].best_fitness).collect();
            let mean: Vec<f64> = runs.iter().map(|r| r[g].mean_fitness).collect();
            let (best_fitness_mean, best_fitness_std) = mean_std(&best);
            let (mean_fitness_mean, mean_fitness_std) = mean_std(&mean);
            CiRow {
                generation: g,
                best_fitness_mean,
                best_fitness_std,
                mean_fitness_mean,
                mean_fitness_std,
            }
        })
        .collect())
}
