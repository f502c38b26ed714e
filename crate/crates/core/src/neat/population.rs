use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::species::allot;
use super::{
    crossover, order_parents, select_parent, speciate, Genome, InnovationTracker, NeatConfig,
    NeatError, Species,
};

/// One generation of genomes together with the shared evolutionary state.
#[derive(Debug, Clone)]
pub struct Population {
    pub genomes: Vec<Genome>,
    pub species: Vec<Species>,
    pub tracker: InnovationTracker,
    pub generation: usize,
    pub config: NeatConfig,
    next_species_id: usize,
}

/// Fully connected initial population, speciated.
pub fn init_population(
    config: &NeatConfig,
    state_dim: usize,
    action_dim: usize,
    seed: u64,
) -> Result<Population, NeatError> {
    config.validate()?;
    if state_dim == 0 || action_dim == 0 {
        return Err(NeatError::InvalidConfig(format!(
            "networks need at least one input and one output, got {state_dim} x {action_dim}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tracker = InnovationTracker::new(state_dim + action_dim);
    let genomes: Vec<Genome> = (0..config.population_size)
        .map(|_| Genome::fully_connected(state_dim, action_dim, &mut tracker, config, &mut rng))
        .collect();
    let mut next_species_id = 0;
    let species = speciate(&genomes, &[], config, &mut next_species_id, 0);
    Ok(Population {
        genomes,
        species,
        tracker,
        generation: 0,
        config: config.clone(),
        next_species_id,
    })
}

impl Population {
    /// Index of the fittest genome (lowest index on ties), if any genome has
    /// been evaluated.
    pub fn best(&self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, g) in self.genomes.iter().enumerate() {
            if let Some(f) = g.fitness {
                if best.is_none_or(|(_, b)| f > b) {
                    best = Some((i, f));
                }
            }
        }
        best.map(|(i, _)| i)
    }

    /// Replaces the population with its successor.
    ///
    /// The `elite_count` fittest genomes survive unchanged. The remaining
    /// slots are shared among species by adjusted fitness; each offspring is
    /// a crossover of two fitness-proportionately drawn parents (or a clone
    /// of one) followed by mutation. The successor is then speciated against
    /// representatives drawn from the current species.
    pub fn next_generation<R: Rng + ?Sized>(
        &mut self,
        fitnesses: &[f64],
        rng: &mut R,
    ) -> Result<(), NeatError> {
        let config = &self.config;
        if fitnesses.len() != self.genomes.len() {
            return Err(NeatError::DimensionMismatch {
                expected: self.genomes.len(),
                got: fitnesses.len(),
            });
        }
        if let Some(bad) = fitnesses.iter().find(|f| !f.is_finite()) {
            return Err(NeatError::InvalidFitness(*bad));
        }
        for (g, &f) in self.genomes.iter_mut().zip(fitnesses) {
            g.fitness = Some(f);
        }
        for s in &mut self.species {
            s.observe(fitnesses, self.generation);
        }

        let floor = fitnesses.iter().copied().fold(f64::INFINITY, f64::min);
        let shifted: Vec<f64> = fitnesses.iter().map(|f| f - floor).collect();

        let mut ranked: Vec<usize> = (0..self.genomes.len()).collect();
        ranked.sort_by(|&a, &b| fitnesses[b].total_cmp(&fitnesses[a]));
        let champion = ranked[0];

        let eligible: Vec<&Species> = self
            .species
            .iter()
            .filter(|s| match config.stagnation_generations {
                Some(limit) => {
                    self.generation - s.last_improved < limit || s.members.contains(&champion)
                }
                None => true,
            })
            .collect();
        let members: Vec<&[usize]> = eligible.iter().map(|s| s.members.as_slice()).collect();
        let quotas = allot(
            &members,
            &shifted,
            config.population_size - config.elite_count,
        );

        self.tracker.new_generation();
        let mut next: Vec<Genome> = ranked[..config.elite_count]
            .iter()
            .map(|&i| self.genomes[i].clone())
            .collect();
        for (species, &quota) in eligible.iter().zip(&quotas) {
            for _ in 0..quota {
                let mut child = if rng.random_bool(config.crossover_prob) {
                    let a = select_parent(&species.members, &shifted, rng);
                    let b = select_parent(&species.members, &shifted, rng);
                    let (fitter, weaker) = order_parents(&self.genomes[a], &self.genomes[b]);
                    crossover(fitter, weaker, rng)
                } else {
                    self.genomes[select_parent(&species.members, &shifted, rng)].clone()
                };
                child.mutate(&mut self.tracker, config, rng);
                next.push(child);
            }
        }
        debug_assert_eq!(next.len(), config.population_size);

        for s in &mut self.species {
            s.pick_representative(&self.genomes, rng);
        }
        self.generation += 1;
        self.species = speciate(
            &next,
            &self.species,
            config,
            &mut self.next_species_id,
            self.generation,
        );
        self.genomes = next;
        Ok(())
    }
}
