use serde::{Deserialize, Serialize};

use super::NeatError;

/// Hyperparameters of the evolutionary engine.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NeatConfig {
    /// Number of genomes per generation.
    pub population_size: usize,
    /// Closed interval all weights and biases are clamped into.
    pub weight_range: (f64, f64),
    /// Per-connection probability of a weight perturbation.
    pub weight_mutation_rate: f64,
    /// Per-node (non-input) probability of a bias perturbation.
    pub bias_mutation_rate: f64,
    pub node_add_prob: f64,
    pub node_delete_prob: f64,
    pub conn_add_prob: f64,
    pub conn_delete_prob: f64,
    /// Genomes closer than this to a species representative join that species.
    pub compatibility_threshold: f64,
    pub excess_coeff: f64,
    pub disjoint_coeff: f64,
    pub weight_coeff: f64,
    /// Genomes copied unmodified into the next generation.
    pub elite_count: usize,
    /// Standard deviation of the Gaussian weight/bias perturbation.
    pub perturb_stddev: f64,
    /// Probability that an offspring is produced by crossover rather than cloning.
    pub crossover_prob: f64,
    /// Species whose best fitness has not improved for this many generations
    /// stop receiving offspring. `None` disables the rule.
    pub stagnation_generations: Option<usize>,
}

impl Default for NeatConfig {
    fn default() -> Self {
        Self {
            population_size: 50,
            weight_range: (-30.0, 30.0),
            weight_mutation_rate: 0.8,
            bias_mutation_rate: 0.7,
            node_add_prob: 0.2,
            node_delete_prob: 0.2,
            conn_add_prob: 0.2,
            conn_delete_prob: 0.2,
            compatibility_threshold: 3.0,
            excess_coeff: 1.0,
            disjoint_coeff: 1.0,
            weight_coeff: 0.4,
            elite_count: 1,
            perturb_stddev: 1.0,
            crossover_prob: 0.75,
            stagnation_generations: None,
        }
    }
}

impl NeatConfig {
    /// Config with every stochastic operator switched off.
    pub fn frozen() -> Self {
        Self {
            weight_mutation_rate: 0.0,
            bias_mutation_rate: 0.0,
            node_add_prob: 0.0,
            node_delete_prob: 0.0,
            conn_add_prob: 0.0,
            conn_delete_prob: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), NeatError> {
        let probs = [
            ("weight_mutation_rate", self.weight_mutation_rate),
            ("bias_mutation_rate", self.bias_mutation_rate),
            ("node_add_prob", self.node_add_prob),
            ("node_delete_prob", self.node_delete_prob),
            ("conn_add_prob", self.conn_add_prob),
            ("conn_delete_prob", self.conn_delete_prob),
            ("crossover_prob", self.crossover_prob),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(NeatError::InvalidConfig(format!(
                    "{name} must lie in [0, 1], got {p}"
                )));
            }
        }
        if self.population_size < 2 {
            return Err(NeatError::InvalidConfig(format!(
                "population_size must be at least 2, got {}",
                self.population_size
            )));
        }
        if self.elite_count >= self.population_size {
            return Err(NeatError::InvalidConfig(format!(
                "elite_count {} leaves no room for offspring in a population of {}",
                self.elite_count, self.population_size
            )));
        }
        // NaN fails both comparisons
        if !(self.compatibility_threshold >= 0.0) {
            return Err(NeatError::InvalidConfig(format!(
                "compatibility_threshold must be non-negative, got {}",
                self.compatibility_threshold
            )));
        }
        let (lo, hi) = self.weight_range;
        if !(lo.is_finite() && hi.is_finite() && lo <= 0.0 && 0.0 <= hi && lo < hi) {
            return Err(NeatError::InvalidConfig(format!(
                "weight_range must be a finite interval containing 0, got [{lo}, {hi}]"
            )));
        }
        for (name, c) in [
            ("excess_coeff", self.excess_coeff),
            ("disjoint_coeff", self.disjoint_coeff),
            ("weight_coeff", self.weight_coeff),
            ("perturb_stddev", self.perturb_stddev),
        ] {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(NeatError::InvalidConfig(format!(
                    "{name} must be finite and non-negative, got {c}"
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn clamp_weight(&self, w: f64) -> f64 {
        w.clamp(self.weight_range.0, self.weight_range.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        NeatConfig::default().validate().unwrap();
        NeatConfig::frozen().validate().unwrap();
    }

    #[test]
    fn rejects_bad_probability() {
        let cfg = NeatConfig {
            conn_add_prob: 1.5,
            ..NeatConfig::default()
        };
        assert!(matches!(cfg.validate(), Err(NeatError::InvalidConfig(_))));
    }

    #[test]
    fn rejects_tiny_population() {
        let cfg = NeatConfig {
            population_size: 1,
            elite_count: 0,
            ..NeatConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_negative_threshold() {
        let cfg = NeatConfig {
            compatibility_threshold: -1.0,
            ..NeatConfig::default()
        };
        assert!(cfg.validate().is_err());
    }
}
