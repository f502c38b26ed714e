use std::collections::BTreeMap;

use super::genome::topological_order;
use super::{Genome, NeatError, NodeKind};

#[derive(Debug, Clone)]
struct Unit {
    slot: usize,
    bias: f64,
    relu: bool,
    incoming: std::ops::Range<usize>,
}

/// A genome compiled for repeated evaluation.
///
/// Hidden units apply `relu(sum + bias)`, output units `sum + bias`; inputs
/// are passed through. Disabled connections are dropped at build time.
#[derive(Debug, Clone)]
pub struct FeedForwardNetwork {
    inputs: Vec<usize>,
    outputs: Vec<usize>,
    units: Vec<Unit>,
    links: Vec<(usize, f64)>,
    values: Vec<f64>,
}

impl FeedForwardNetwork {
    pub fn new(genome: &Genome) -> Result<Self, NeatError> {
        let order = topological_order(genome, |c| c.enabled).ok_or(NeatError::Cycle)?;
        let slot_of: BTreeMap<usize, usize> = genome
            .nodes
            .iter()
            .enumerate()
            .map(|(slot, n)| (n.id, slot))
            .collect();

        let mut incoming: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
        for c in genome.connections.iter().filter(|c| c.enabled) {
            let from = *slot_of
                .get(&c.from)
                .ok_or_else(|| NeatError::InvalidGenome(format!("missing node {}", c.from)))?;
            incoming.entry(c.to).or_default().push((from, c.weight));
        }

        let mut units = Vec::new();
        let mut links = Vec::new();
        for id in order {
            let node = genome.node(id).expect("ordered ids come from the genome");
            if node.kind == NodeKind::Input {
                continue;
            }
            let start = links.len();
            links.extend(incoming.remove(&id).unwrap_or_default());
            units.push(Unit {
                slot: slot_of[&id],
                bias: node.bias,
                relu: node.kind == NodeKind::Hidden,
                incoming: start..links.len(),
            });
        }

        Ok(Self {
            inputs: genome.input_ids().iter().map(|id| slot_of[id]).collect(),
            outputs: genome.output_ids().iter().map(|id| slot_of[id]).collect(),
            units,
            links,
            values: vec![0.0; genome.nodes.len()],
        })
    }

    pub fn num_inputs(&self) -> usize {
        self.inputs.len()
    }

    pub fn num_outputs(&self) -> usize {
        self.outputs.len()
    }

    /// Evaluates the network, writing one value per output node (ascending
    /// id order) into `out`.
    pub fn activate_into(&mut self, inputs: &[f64], out: &mut [f64]) -> Result<(), NeatError> {
        if inputs.len() != self.inputs.len() {
            return Err(NeatError::DimensionMismatch {
                expected: self.inputs.len(),
                got: inputs.len(),
            });
        }
        if out.len() != self.outputs.len() {
            return Err(NeatError::DimensionMismatch {
                expected: self.outputs.len(),
                got: out.len(),
            });
        }
        for (&slot, &x) in self.inputs.iter().zip(inputs) {
            self.values[slot] = x;
        }
        for unit in &self.units {
            let mut sum = unit.bias;
            for &(from, w) in &self.links[unit.incoming.clone()] {
                sum += w * self.values[from];
            }
            self.values[unit.slot] = if unit.relu { sum.max(0.0) } else { sum };
        }
        for (o, &slot) in out.iter_mut().zip(&self.outputs) {
            *o = self.values[slot];
        }
        Ok(())
    }

    pub fn activate(&mut self, inputs: &[f64]) -> Result<Vec<f64>, NeatError> {
        let mut out = vec![0.0; self.outputs.len()];
        self.activate_into(inputs, &mut out)?;
        Ok(out)
    }
}

impl Genome {
    /// One-shot evaluation. Compile with [`FeedForwardNetwork::new`] when
    /// evaluating the same genome many times.
    pub fn activate(&self, inputs: &[f64]) -> Result<Vec<f64>, NeatError> {
        FeedForwardNetwork::new(self)?.activate(inputs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neat::{ConnectionGene, NodeGene};

    fn node(id: usize, kind: NodeKind, bias: f64) -> NodeGene {
        NodeGene { id, kind, bias }
    }

    fn link(innovation: usize, from: usize, to: usize, weight: f64) -> ConnectionGene {
        ConnectionGene {
            innovation,
            from,
            to,
            weight,
            enabled: true,
        }
    }

    #[test]
    fn single_link_is_affine() {
        let g = Genome {
            state_dim: 1,
            action_dim: 1,
            fitness: None,
            nodes: vec![node(0, NodeKind::Input, 0.0), node(1, NodeKind::Output, 0.25)],
            connections: vec![link(0, 0, 1, -1.5)],
        };
        let out = g.activate(&[2.0]).unwrap();
        assert_eq!(out, vec![-1.5 * 2.0 + 0.25]);
    }

    #[test]
    fn relu_dead_zone_blocks_downstream() {
        let g = Genome {
            state_dim: 1,
            action_dim: 1,
            fitness: None,
            nodes: vec![
                node(0, NodeKind::Input, 0.0),
                node(1, NodeKind::Output, 0.0),
                node(2, NodeKind::Hidden, -5.0),
            ],
            connections: vec![link(0, 0, 2, 1.0), link(1, 2, 1, 7.0)],
        };
        assert_eq!(g.activate(&[3.0]).unwrap(), vec![0.0]);
        assert_eq!(g.activate(&[6.0]).unwrap(), vec![7.0]);
    }

    #[test]
    fn disabled_links_contribute_nothing() {
        let mut g = Genome {
            state_dim: 2,
            action_dim: 1,
            fitness: None,
            nodes: vec![
                node(0, NodeKind::Input, 0.0),
                node(1, NodeKind::Input, 0.0),
                node(2, NodeKind::Output, 0.0),
            ],
            connections: vec![link(0, 0, 2, 1.0), link(1, 1, 2, 1.0)],
        };
        g.connections[1].enabled = false;
        assert_eq!(g.activate(&[1.0, 100.0]).unwrap(), vec![1.0]);
    }

    #[test]
    fn outputs_follow_id_order() {
        let g = Genome {
            state_dim: 1,
            action_dim: 2,
            fitness: None,
            nodes: vec![
                node(0, NodeKind::Input, 0.0),
                node(1, NodeKind::Output, 1.0),
                node(2, NodeKind::Output, 2.0),
            ],
            connections: vec![],
        };
        assert_eq!(g.activate(&[0.0]).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let g = Genome {
            state_dim: 1,
            action_dim: 1,
            fitness: None,
            nodes: vec![node(0, NodeKind::Input, 0.0), node(1, NodeKind::Output, 0.0)],
            connections: vec![],
        };
        assert!(matches!(
            g.activate(&[1.0, 2.0]),
            Err(NeatError::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn cycle_is_reported() {
        let g = Genome {
            state_dim: 1,
            action_dim: 1,
            fitness: None,
            nodes: vec![
                node(0, NodeKind::Input, 0.0),
                node(1, NodeKind::Output, 0.0),
                node(2, NodeKind::Hidden, 0.0),
                node(3, NodeKind::Hidden, 0.0),
            ],
            connections: vec![link(0, 2, 3, 1.0), link(1, 3, 2, 1.0)],
        };
        assert!(matches!(g.activate(&[0.0]), Err(NeatError::Cycle)));
    }
}
