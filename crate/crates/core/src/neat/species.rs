use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::IndexedRandom;
use rand::Rng;

use super::{compat_distance, Genome, NeatConfig};

#[derive(Debug, Clone)]
pub struct Species {
    pub id: usize,
    pub representative: Genome,
    /// Indices into the current population.
    pub members: Vec<usize>,
    /// Best raw fitness any member has reached so far.
    pub best_fitness: Option<f64>,
    /// Generation in which `best_fitness` last improved.
    pub last_improved: usize,
}

impl Species {
    fn founded_by(id: usize, genome: &Genome, index: usize, generation: usize) -> Self {
        Self {
            id,
            representative: genome.clone(),
            members: vec![index],
            best_fitness: None,
            last_improved: generation,
        }
    }

    /// Replaces the representative with a random current member.
    pub fn pick_representative<R: Rng + ?Sized>(&mut self, population: &[Genome], rng: &mut R) {
        if let Some(&i) = self.members.choose(rng) {
            self.representative = population[i].clone();
        }
    }

    /// Records the members' fitness for stagnation tracking.
    pub fn observe(&mut self, fitnesses: &[f64], generation: usize) {
        let best = self
            .members
            .iter()
            .map(|&i| fitnesses[i])
            .fold(f64::NEG_INFINITY, f64::max);
        if self.best_fitness.is_none_or(|b| best > b) {
            self.best_fitness = Some(best);
            self.last_improved = generation;
        }
    }
}

/// Partitions `population` into species.
///
/// `previous` species keep their ids and representatives and are tried
/// first, in order; a genome that is not closer than the threshold to any
/// representative founds a new species. Species left without members are
/// dropped.
pub fn speciate(
    population: &[Genome],
    previous: &[Species],
    config: &NeatConfig,
    next_species_id: &mut usize,
    generation: usize,
) -> Vec<Species> {
    let mut species: Vec<Species> = previous
        .iter()
        .map(|s| Species {
            members: Vec::new(),
            ..s.clone()
        })
        .collect();
    for (index, genome) in population.iter().enumerate() {
        let home = species.iter_mut().find(|s| {
            compat_distance(&s.representative, genome, config) < config.compatibility_threshold
        });
        match home {
            Some(s) => s.members.push(index),
            None => {
                species.push(Species::founded_by(*next_species_id, genome, index, generation));
                *next_species_id += 1;
            }
        }
    }
    species.retain(|s| !s.members.is_empty());
    species
}

/// Offspring quota per species under explicit fitness sharing.
///
/// `fitnesses` must already be shifted to be non-negative. A member's
/// adjusted fitness is its fitness divided by its species size; each species
/// gets a share of `population_size - elite_count` proportional to its summed
/// adjusted fitness, rounded by largest remainder.
pub fn allot_offspring(species: &[Species], fitnesses: &[f64], config: &NeatConfig) -> Vec<usize> {
    let members: Vec<&[usize]> = species.iter().map(|s| s.members.as_slice()).collect();
    allot(
        &members,
        fitnesses,
        config.population_size - config.elite_count,
    )
}

pub(crate) fn allot(members: &[&[usize]], fitnesses: &[f64], total: usize) -> Vec<usize> {
    if members.is_empty() {
        return Vec::new();
    }
    let mut mass: Vec<f64> = members
        .iter()
        .map(|m| {
            debug_assert!(m.iter().all(|&i| fitnesses[i] >= 0.0));
            let size = m.len().max(1) as f64;
            m.iter().map(|&i| fitnesses[i].max(0.0) / size).sum()
        })
        .collect();
    let mut sum: f64 = mass.iter().sum();
    if !(sum > 0.0 && sum.is_finite()) {
        mass.iter_mut().for_each(|m| *m = 1.0);
        sum = mass.len() as f64;
    }

    let exact: Vec<f64> = mass.iter().map(|m| total as f64 * m / sum).collect();
    let mut quotas: Vec<usize> = exact.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = quotas.iter().sum();
    let mut order: Vec<usize> = (0..quotas.len()).collect();
    // stable: equal remainders favour earlier species
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra)
    });
    for &s in order.iter().cycle().take(total.saturating_sub(assigned)) {
        quotas[s] += 1;
    }
    quotas
}

/// Fitness-proportionate draw among `members`; uniform when every
/// (non-negative) fitness is zero.
pub fn select_parent<R: Rng + ?Sized>(members: &[usize], fitnesses: &[f64], rng: &mut R) -> usize {
    assert!(!members.is_empty(), "cannot select from an empty species");
    match WeightedIndex::new(members.iter().map(|&i| fitnesses[i].max(0.0))) {
        Ok(dist) => members[dist.sample(rng)],
        Err(_) => *members.choose(rng).expect("non-empty"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neat::InnovationTracker;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn population(n: usize, seed: u64) -> Vec<Genome> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tracker = InnovationTracker::new(5);
        let cfg = NeatConfig::default();
        (0..n)
            .map(|_| Genome::fully_connected(3, 2, &mut tracker, &cfg, &mut rng))
            .collect()
    }

    fn species_of(members: Vec<Vec<usize>>, rep: &Genome) -> Vec<Species> {
        members
            .into_iter()
            .enumerate()
            .map(|(id, members)| Species {
                id,
                representative: rep.clone(),
                members,
                best_fitness: None,
                last_improved: 0,
            })
            .collect()
    }

    #[test]
    fn clones_share_one_species() {
        let g = population(1, 1).pop().unwrap();
        let pop = vec![g.clone(); 6];
        let mut next = 0;
        let s = speciate(&pop, &[], &NeatConfig::default(), &mut next, 0);
        assert_eq!(s.len(), 1);
        assert_eq!(s[0].members, (0..6).collect::<Vec<_>>());
    }

    #[test]
    fn zero_threshold_isolates_everyone() {
        let pop = population(5, 2);
        let cfg = NeatConfig {
            compatibility_threshold: 0.0,
            ..NeatConfig::default()
        };
        let mut next = 0;
        assert_eq!(speciate(&pop, &[], &cfg, &mut next, 0).len(), 5);
    }

    #[test]
    fn two_separated_clusters() {
        let base = population(1, 3).pop().unwrap();
        let mut far = base.clone();
        for c in &mut far.connections {
            c.weight += 10.0;
        }
        let cfg = NeatConfig::default();
        // 0.4 * 10 = 4 > 3 between clusters, 0 within
        assert!(compat_distance(&base, &far, &cfg) > cfg.compatibility_threshold);
        let pop = vec![base.clone(), far.clone(), base.clone(), far];
        let mut next = 0;
        let s = speciate(&pop, &[], &cfg, &mut next, 0);
        assert_eq!(s.len(), 2);
        assert_eq!(s[0].members, vec![0, 2]);
        assert_eq!(s[1].members, vec![1, 3]);
        assert_eq!(next, 2);
    }

    #[test]
    fn previous_species_keep_ids_and_empty_ones_vanish() {
        let pop = population(3, 4);
        let mut far = pop[0].clone();
        far.connections.iter_mut().for_each(|c| c.weight += 50.0);
        let previous = vec![
            Species::founded_by(7, &far, 0, 0),
            Species::founded_by(9, &pop[0], 0, 0),
        ];
        let mut next = 10;
        let s = speciate(&pop, &previous, &NeatConfig::default(), &mut next, 1);
        assert_eq!(s[0].id, 9);
        assert!(s.iter().all(|sp| sp.id != 7));
    }

    #[test]
    fn single_species_gets_everything() {
        let g = population(1, 5).pop().unwrap();
        let cfg = NeatConfig::default();
        let s = species_of(vec![(0..50).collect()], &g);
        let f = vec![1.0; 50];
        assert_eq!(allot_offspring(&s, &f, &cfg), vec![49]);
    }

    #[test]
    fn sharing_neutralises_species_size() {
        let g = population(1, 5).pop().unwrap();
        let s = species_of(vec![vec![0, 1], vec![2, 3, 4, 5]], &g);
        let f = vec![4.0; 6];
        let cfg = NeatConfig {
            population_size: 11,
            ..NeatConfig::default()
        };
        assert_eq!(allot_offspring(&s, &f, &cfg), vec![5, 5]);
    }

    #[test]
    fn zero_mass_falls_back_to_uniform() {
        let g = population(1, 5).pop().unwrap();
        let s = species_of(vec![vec![0], vec![1], vec![2]], &g);
        let q = allot(&[&[0], &[1], &[2]], &[0.0; 3], 10);
        assert_eq!(q, vec![4, 3, 3]);
        assert_eq!(allot_offspring(&s, &[0.0; 3], &NeatConfig::default()).iter().sum::<usize>(), 49);
    }

    #[test]
    fn largest_remainder_rounding() {
        // exact shares 6.0 * (0.5, 0.3, 0.2) = 3.0, 1.8, 1.2
        let q = allot(&[&[0], &[1], &[2]], &[5.0, 3.0, 2.0], 6);
        assert_eq!(q, vec![3, 2, 1]);
    }

    #[test]
    fn selection_single_member() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(select_parent(&[4], &[0.0, 0.0, 0.0, 0.0, 2.0], &mut rng), 4);
        }
    }

    #[test]
    fn selection_is_fitness_proportionate() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let draws = 100_000;
        let hits = (0..draws)
            .filter(|_| select_parent(&[0, 1], &[3.0, 1.0], &mut rng) == 0)
            .count();
        let p = hits as f64 / draws as f64;
        assert!((p - 0.75).abs() < 0.01, "{p}");
    }

    #[test]
    fn selection_uniform_when_all_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 100_000;
        let mut counts = [0usize; 4];
        for _ in 0..draws {
            counts[select_parent(&[0, 1, 2, 3], &[0.0; 4], &mut rng)] += 1;
        }
        for c in counts {
            assert!((c as f64 / draws as f64 - 0.25).abs() < 0.01);
        }
    }
}
