//! Neuroevolution of augmenting topologies.
//!
//! Genomes are feed-forward networks encoded as node genes plus
//! innovation-numbered connection genes. A [`Population`] evolves through
//! speciation, explicit fitness sharing, elitism, crossover aligned on
//! innovation numbers, and structural/parametric mutation.

mod config;
mod genome;
mod innovation;
mod network;
mod population;
mod species;

pub use config::NeatConfig;
pub use genome::{
    compat_distance, crossover, order_parents, ConnectionGene, Genome, NodeGene, NodeKind,
};
pub use innovation::InnovationTracker;
pub use network::FeedForwardNetwork;
pub use population::{init_population, Population};
pub use species::{allot_offspring, select_parent, speciate, Species};

#[derive(Debug, thiserror::Error)]
pub enum NeatError {
    #[error("invalid NEAT configuration: {0}")]
    InvalidConfig(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("enabled connections form a cycle")]
    Cycle,
    #[error("invalid genome: {0}")]
    InvalidGenome(String),
    #[error("fitness must be finite, got {0}")]
    InvalidFitness(f64),
    #[error("genome serialization: {0}")]
    Serialization(#[from] serde_json::Error),
}
