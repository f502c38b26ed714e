use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{InnovationTracker, NeatConfig, NeatError};

/// Random `(from, to)` draws per add-connection mutation before giving up.
const MAX_CONNECTION_ATTEMPTS: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Input,
    Hidden,
    Output,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeGene {
    pub id: usize,
    pub kind: NodeKind,
    pub bias: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectionGene {
    pub innovation: usize,
    pub from: usize,
    pub to: usize,
    pub weight: f64,
    pub enabled: bool,
}

/// A variable-topology feed-forward network.
///
/// `nodes` is kept sorted by id and `connections` by innovation number.
/// Input nodes occupy ids `0..state_dim`, output nodes
/// `state_dim..state_dim + action_dim`; hidden nodes get ids from the
/// [`InnovationTracker`].
///
/// The full connection graph, disabled genes included, is kept acyclic so
/// that re-enabling a gene through crossover can never close a loop.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Genome {
    pub state_dim: usize,
    pub action_dim: usize,
    pub fitness: Option<f64>,
    pub nodes: Vec<NodeGene>,
    pub connections: Vec<ConnectionGene>,
}

impl Genome {
    /// Every input wired to every output, weights and biases drawn from a
    /// standard normal and clamped into the configured range.
    pub fn fully_connected<R: Rng + ?Sized>(
        state_dim: usize,
        action_dim: usize,
        tracker: &mut InnovationTracker,
        config: &NeatConfig,
        rng: &mut R,
    ) -> Self {
        let mut nodes = Vec::with_capacity(state_dim + action_dim);
        nodes.extend((0..state_dim).map(|id| NodeGene {
            id,
            kind: NodeKind::Input,
            bias: 0.0,
        }));
        for id in state_dim..state_dim + action_dim {
            let bias = config.clamp_weight(rng.sample(StandardNormal));
            nodes.push(NodeGene {
                id,
                kind: NodeKind::Output,
                bias,
            });
        }
        let mut connections = Vec::with_capacity(state_dim * action_dim);
        for from in 0..state_dim {
            for to in state_dim..state_dim + action_dim {
                let weight = config.clamp_weight(rng.sample(StandardNormal));
                connections.push(ConnectionGene {
                    innovation: tracker.connection(from, to),
                    from,
                    to,
                    weight,
                    enabled: true,
                });
            }
        }
        connections.sort_by_key(|c| c.innovation);
        Self {
            state_dim,
            action_dim,
            fitness: None,
            nodes,
            connections,
        }
    }

    pub fn node(&self, id: usize) -> Option<&NodeGene> {
        self.nodes
            .binary_search_by_key(&id, |n| n.id)
            .ok()
            .map(|i| &self.nodes[i])
    }

    pub fn has_node(&self, id: usize) -> bool {
        self.node(id).is_some()
    }

    pub fn has_connection(&self, from: usize, to: usize) -> bool {
        self.connections.iter().any(|c| c.from == from && c.to == to)
    }

    pub fn enabled_connections(&self) -> usize {
        self.connections.iter().filter(|c| c.enabled).count()
    }

    pub fn hidden_nodes(&self) -> impl Iterator<Item = &NodeGene> {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Hidden)
    }

    /// Output node ids in ascending order.
    pub fn output_ids(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Output)
            .map(|n| n.id)
            .collect()
    }

    pub fn input_ids(&self) -> Vec<usize> {
        self.nodes
            .iter()
            .filter(|n| n.kind == NodeKind::Input)
            .map(|n| n.id)
            .collect()
    }

    pub fn innovations(&self) -> BTreeSet<usize> {
        self.connections.iter().map(|c| c.innovation).collect()
    }

    /// True if adding `from -> to` would close a loop in the full
    /// connection graph (disabled genes included).
    pub fn creates_cycle(&self, from: usize, to: usize) -> bool {
        if from == to {
            return true;
        }
        let mut seen = BTreeSet::new();
        let mut stack = vec![to];
        while let Some(node) = stack.pop() {
            if node == from {
                return true;
            }
            if !seen.insert(node) {
                continue;
            }
            stack.extend(
                self.connections
                    .iter()
                    .filter(|c| c.from == node)
                    .map(|c| c.to),
            );
        }
        false
    }

    /// Whether the digraph of enabled connections has no cycle.
    pub fn is_acyclic(&self) -> bool {
        topological_order(self, |c| c.enabled).is_some()
    }

    /// Structural checks applied to genomes read from disk.
    pub fn validate(&self) -> Result<(), NeatError> {
        let bad = |msg: String| Err(NeatError::InvalidGenome(msg));
        let mut ids = BTreeSet::new();
        for n in &self.nodes {
            if !ids.insert(n.id) {
                return bad(format!("duplicate node id {}", n.id));
            }
            if n.kind == NodeKind::Input && n.bias != 0.0 {
                return bad(format!("input node {} carries a bias", n.id));
            }
            if !n.bias.is_finite() {
                return bad(format!("node {} has a non-finite bias", n.id));
            }
        }
        if !self.nodes.windows(2).all(|w| w[0].id < w[1].id) {
            return bad("nodes are not sorted by id".into());
        }
        let inputs = self.input_ids();
        let outputs = self.output_ids();
        if inputs.len() != self.state_dim || outputs.len() != self.action_dim {
            return bad(format!(
                "expected {} inputs and {} outputs, found {} and {}",
                self.state_dim,
                self.action_dim,
                inputs.len(),
                outputs.len()
            ));
        }
        let mut innovations = BTreeSet::new();
        let mut pairs = BTreeSet::new();
        for c in &self.connections {
            if !innovations.insert(c.innovation) {
                return bad(format!("duplicate innovation {}", c.innovation));
            }
            if !pairs.insert((c.from, c.to)) {
                return bad(format!("duplicate connection {} -> {}", c.from, c.to));
            }
            let (Some(from), Some(to)) = (self.node(c.from), self.node(c.to)) else {
                return bad(format!(
                    "connection {} references a missing node",
                    c.innovation
                ));
            };
            if to.kind == NodeKind::Input {
                return bad(format!("connection {} targets input node {}", c.innovation, to.id));
            }
            if from.kind == NodeKind::Output {
                return bad(format!("connection {} leaves output node {}", c.innovation, from.id));
            }
            if !c.weight.is_finite() {
                return bad(format!("connection {} has a non-finite weight", c.innovation));
            }
        }
        if !self
            .connections
            .windows(2)
            .all(|w| w[0].innovation < w[1].innovation)
        {
            return bad("connections are not sorted by innovation".into());
        }
        if topological_order(self, |_| true).is_none() {
            return Err(NeatError::Cycle);
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String, NeatError> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self, NeatError> {
        let genome: Genome = serde_json::from_str(text)?;
        genome.validate()?;
        Ok(genome)
    }

    /// Applies every mutation operator once, each with its configured
    /// probability. Operators that cannot apply are skipped.
    pub fn mutate<R: Rng + ?Sized>(
        &mut self,
        tracker: &mut InnovationTracker,
        config: &NeatConfig,
        rng: &mut R,
    ) {
        if rng.random_bool(config.node_add_prob) {
            self.add_node(tracker, rng);
        }
        if rng.random_bool(config.conn_add_prob) {
            self.add_connection(tracker, config, rng);
        }
        if rng.random_bool(config.conn_delete_prob) {
            self.delete_connection(rng);
        }
        if rng.random_bool(config.node_delete_prob) {
            self.delete_node(rng);
        }
        self.perturb_weights(config, rng);
        self.perturb_biases(config, rng);
        self.fitness = None;
    }

    pub fn perturb_weights<R: Rng + ?Sized>(&mut self, config: &NeatConfig, rng: &mut R) {
        let noise = Normal::new(0.0, config.perturb_stddev).expect("validated stddev");
        for c in &mut self.connections {
            if rng.random_bool(config.weight_mutation_rate) {
                c.weight = config.clamp_weight(c.weight + noise.sample(rng));
            }
        }
    }

    pub fn perturb_biases<R: Rng + ?Sized>(&mut self, config: &NeatConfig, rng: &mut R) {
        let noise = Normal::new(0.0, config.perturb_stddev).expect("validated stddev");
        for n in self.nodes.iter_mut().filter(|n| n.kind != NodeKind::Input) {
            if rng.random_bool(config.bias_mutation_rate) {
                n.bias = config.clamp_weight(n.bias + noise.sample(rng));
            }
        }
    }

    /// Splits a random enabled connection `from -> to` (weight `w`) with a
    /// new hidden node `n`: the old gene is disabled, `from -> n` inherits
    /// `w` and `n -> to` gets weight 1. Returns the new node id.
    pub fn add_node<R: Rng + ?Sized>(
        &mut self,
        tracker: &mut InnovationTracker,
        rng: &mut R,
    ) -> Option<usize> {
        let enabled: Vec<usize> = (0..self.connections.len())
            .filter(|&i| self.connections[i].enabled)
            .collect();
        let &idx = enabled.choose(rng)?;
        let old = self.connections[idx];
        let mut node = tracker.split_node(old.innovation);
        if self.has_node(node) {
            node = tracker.fresh_node();
        }
        self.connections[idx].enabled = false;
        self.insert_node(NodeGene {
            id: node,
            kind: NodeKind::Hidden,
            bias: 0.0,
        });
        self.insert_connection(ConnectionGene {
            innovation: tracker.connection(old.from, node),
            from: old.from,
            to: node,
            weight: old.weight,
            enabled: true,
        });
        self.insert_connection(ConnectionGene {
            innovation: tracker.connection(node, old.to),
            from: node,
            to: old.to,
            weight: 1.0,
            enabled: true,
        });
        Some(node)
    }

    /// Adds a connection between two unconnected nodes with a standard
    /// normal weight. Candidates that would create a cycle are resampled a
    /// bounded number of times.
    pub fn add_connection<R: Rng + ?Sized>(
        &mut self,
        tracker: &mut InnovationTracker,
        config: &NeatConfig,
        rng: &mut R,
    ) -> Option<usize> {
        let sources: Vec<usize> = self
            .nodes
            .iter()
            .filter(|n| n.kind != NodeKind::Output)
            .map(|n| n.id)
            .collect();
        let targets: Vec<usize> = self
            .nodes
            .iter()
            .filter(|n| n.kind != NodeKind::Input)
            .map(|n| n.id)
            .collect();
        if sources.is_empty() || targets.is_empty() {
            return None;
        }
        for _ in 0..MAX_CONNECTION_ATTEMPTS {
            let from = *sources.choose(rng)?;
            let to = *targets.choose(rng)?;
            if self.has_connection(from, to) || self.creates_cycle(from, to) {
                continue;
            }
            let innovation = tracker.connection(from, to);
            if self.connections.iter().any(|c| c.innovation == innovation) {
                continue;
            }
            let weight = config.clamp_weight(rng.sample(StandardNormal));
            self.insert_connection(ConnectionGene {
                innovation,
                from,
                to,
                weight,
                enabled: true,
            });
            return Some(innovation);
        }
        None
    }

    pub fn delete_connection<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<ConnectionGene> {
        if self.connections.is_empty() {
            return None;
        }
        let idx = rng.random_range(0..self.connections.len());
        Some(self.connections.remove(idx))
    }

    /// Removes a random hidden node together with every incident connection.
    pub fn delete_node<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Option<usize> {
        let hidden: Vec<usize> = self.hidden_nodes().map(|n| n.id).collect();
        let &id = hidden.choose(rng)?;
        self.nodes.retain(|n| n.id != id);
        self.connections.retain(|c| c.from != id && c.to != id);
        Some(id)
    }

    fn insert_node(&mut self, node: NodeGene) {
        let at = self.nodes.partition_point(|n| n.id < node.id);
        self.nodes.insert(at, node);
    }

    fn insert_connection(&mut self, conn: ConnectionGene) {
        let at = self
            .connections
            .partition_point(|c| c.innovation < conn.innovation);
        self.connections.insert(at, conn);
    }
}

/// Kahn ordering over the connections accepted by `keep`, with ties broken by
/// node id. `None` when those connections contain a cycle.
pub(crate) fn topological_order(
    genome: &Genome,
    keep: impl Fn(&ConnectionGene) -> bool,
) -> Option<Vec<usize>> {
    let mut indegree: BTreeMap<usize, usize> = genome.nodes.iter().map(|n| (n.id, 0)).collect();
    let mut out: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for c in genome.connections.iter().filter(|c| keep(c)) {
        *indegree.get_mut(&c.to)? += 1;
        indegree.get(&c.from)?;
        out.entry(c.from).or_default().push(c.to);
    }
    let mut ready: BTreeSet<usize> = indegree
        .iter()
        .filter(|(_, &d)| d == 0)
        .map(|(&id, _)| id)
        .collect();
    let mut order = Vec::with_capacity(indegree.len());
    while let Some(id) = ready.pop_first() {
        order.push(id);
        for &next in out.get(&id).map(Vec::as_slice).unwrap_or(&[]) {
            let d = indegree.get_mut(&next).expect("known node");
            *d -= 1;
            if *d == 0 {
                ready.insert(next);
            }
        }
    }
    (order.len() == indegree.len()).then_some(order)
}

/// Compatibility distance between two genomes:
/// `c_e * N_e / N_c + c_d * N_d / N_c + c_m * mean |w_a - w_b|` over matching
/// innovations, where `N_c` is the larger connection count (at least 1).
pub fn compat_distance(a: &Genome, b: &Genome, config: &NeatConfig) -> f64 {
    let max_a = a.connections.last().map(|c| c.innovation);
    let max_b = b.connections.last().map(|c| c.innovation);
    let beyond = |inn: usize, other_max: Option<usize>| other_max.is_none_or(|m| inn > m);

    let (mut i, mut j) = (0, 0);
    let (mut excess, mut disjoint, mut matching) = (0usize, 0usize, 0usize);
    let mut weight_diff = 0.0;
    while i < a.connections.len() || j < b.connections.len() {
        let ca = a.connections.get(i);
        let cb = b.connections.get(j);
        match (ca, cb) {
            (Some(x), Some(y)) if x.innovation == y.innovation => {
                matching += 1;
                weight_diff += (x.weight - y.weight).abs();
                i += 1;
                j += 1;
            }
            (Some(x), y) if y.is_none_or(|y| x.innovation < y.innovation) => {
                if beyond(x.innovation, max_b) {
                    excess += 1;
                } else {
                    disjoint += 1;
                }
                i += 1;
            }
            (_, Some(y)) => {
                if beyond(y.innovation, max_a) {
                    excess += 1;
                } else {
                    disjoint += 1;
                }
                j += 1;
            }
            _ => unreachable!(),
        }
    }
    let n = a.connections.len().max(b.connections.len()).max(1) as f64;
    let mean_diff = if matching > 0 {
        weight_diff / matching as f64
    } else {
        0.0
    };
    config.excess_coeff * excess as f64 / n
        + config.disjoint_coeff * disjoint as f64 / n
        + config.weight_coeff * mean_diff
}

/// Orders two prospective parents as `(fitter, weaker)`: higher fitness
/// first, then fewer connections, then argument order.
pub fn order_parents<'a>(a: &'a Genome, b: &'a Genome) -> (&'a Genome, &'a Genome) {
    let fa = a.fitness.unwrap_or(f64::NEG_INFINITY);
    let fb = b.fitness.unwrap_or(f64::NEG_INFINITY);
    let by_fitness = fa.partial_cmp(&fb).unwrap_or(Ordering::Equal);
    let by_size = b.connections.len().cmp(&a.connections.len());
    match by_fitness.then(by_size) {
        Ordering::Less => (b, a),
        _ => (a, b),
    }
}

/// Child of two innovation-aligned parents. Matching genes come from either
/// parent with probability one half; disjoint and excess genes come from
/// `fitter` only.
pub fn crossover<R: Rng + ?Sized>(fitter: &Genome, weaker: &Genome, rng: &mut R) -> Genome {
    let mut connections = Vec::with_capacity(fitter.connections.len());
    let mut j = 0;
    for gene in &fitter.connections {
        while j < weaker.connections.len() && weaker.connections[j].innovation < gene.innovation {
            j += 1;
        }
        let other = weaker
            .connections
            .get(j)
            .filter(|c| c.innovation == gene.innovation);
        let chosen = match other {
            Some(o) if rng.random_bool(0.5) => *o,
            _ => *gene,
        };
        connections.push(chosen);
    }

    let mut referenced: BTreeSet<usize> = BTreeSet::new();
    for c in &connections {
        referenced.insert(c.from);
        referenced.insert(c.to);
    }
    let mut nodes = Vec::new();
    for n in &fitter.nodes {
        if n.kind != NodeKind::Hidden || referenced.contains(&n.id) {
            let node = match weaker.node(n.id) {
                Some(o) if o.kind == n.kind && rng.random_bool(0.5) => *o,
                _ => *n,
            };
            nodes.push(node);
        }
    }

    Genome {
        state_dim: fitter.state_dim,
        action_dim: fitter.action_dim,
        fitness: None,
        nodes,
        connections,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn conn(innovation: usize, from: usize, to: usize, weight: f64) -> ConnectionGene {
        ConnectionGene {
            innovation,
            from,
            to,
            weight,
            enabled: true,
        }
    }

    /// Genome over a wide input layer so arbitrary innovation sets can be
    /// expressed as input -> output links.
    fn with_innovations(innovations: &[usize], weight: f64) -> Genome {
        let state_dim = 8;
        let mut nodes: Vec<NodeGene> = (0..state_dim)
            .map(|id| NodeGene {
                id,
                kind: NodeKind::Input,
                bias: 0.0,
            })
            .collect();
        nodes.push(NodeGene {
            id: state_dim,
            kind: NodeKind::Output,
            bias: 0.0,
        });
        Genome {
            state_dim,
            action_dim: 1,
            fitness: None,
            nodes,
            connections: innovations
                .iter()
                .map(|&i| conn(i, i % state_dim, state_dim, weight))
                .collect(),
        }
    }

    fn seeded(state_dim: usize, action_dim: usize, seed: u64) -> (Genome, InnovationTracker) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut tracker = InnovationTracker::new(state_dim + action_dim);
        let g = Genome::fully_connected(
            state_dim,
            action_dim,
            &mut tracker,
            &NeatConfig::default(),
            &mut rng,
        );
        (g, tracker)
    }

    #[test]
    fn fully_connected_counts() {
        let (g, tracker) = seeded(17, 5, 1);
        assert_eq!(g.nodes.len(), 22);
        assert_eq!(g.enabled_connections(), 85);
        assert_eq!(tracker.next_innovation(), 85);
        g.validate().unwrap();

        let (g, _) = seeded(1, 1, 1);
        assert_eq!(g.nodes.len(), 2);
        assert_eq!(g.connections.len(), 1);
        assert_eq!(g.connections[0].innovation, 0);
    }

    #[test]
    fn distance_identity() {
        let (g, _) = seeded(4, 2, 3);
        assert_eq!(compat_distance(&g, &g, &NeatConfig::default()), 0.0);
    }

    #[test]
    fn distance_excess_and_disjoint() {
        let a = with_innovations(&[1, 2, 3], 0.5);
        let b = with_innovations(&[1, 2, 4, 5], 0.5);
        let cfg = NeatConfig::default();
        // 4 and 5 lie beyond a's max (3): excess; 3 is below b's max: disjoint.
        let expected = 1.0 * 2.0 / 4.0 + 1.0 * 1.0 / 4.0;
        assert!((compat_distance(&a, &b, &cfg) - expected).abs() < 1e-12);
        assert!((compat_distance(&b, &a, &cfg) - 0.75).abs() < 1e-12);
    }

    #[test]
    fn distance_weight_term() {
        let a = with_innovations(&[0, 1, 2, 3, 4], 1.0);
        let b = with_innovations(&[0, 1, 2, 3, 4], 1.2);
        let d = compat_distance(&a, &b, &NeatConfig::default());
        assert!((d - 0.4 * 0.2).abs() < 1e-12, "{d}");
    }

    #[test]
    fn distance_against_empty_genome() {
        let a = with_innovations(&[], 1.0);
        let b = with_innovations(&[0, 1], 1.0);
        let d = compat_distance(&a, &b, &NeatConfig::default());
        assert!((d - 1.0).abs() < 1e-12);
        assert_eq!(compat_distance(&a, &a, &NeatConfig::default()), 0.0);
    }

    #[test]
    fn crossover_keeps_fitter_structure() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let fitter = with_innovations(&[1, 2, 4, 5], 1.0);
        let weaker = with_innovations(&[1, 2, 3], -1.0);
        let child = crossover(&fitter, &weaker, &mut rng);
        let got: Vec<usize> = child.connections.iter().map(|c| c.innovation).collect();
        assert_eq!(got, vec![1, 2, 4, 5]);
        assert_eq!(child.connections[2].weight, 1.0);
        assert_eq!(child.connections[3].weight, 1.0);
    }

    #[test]
    fn crossover_with_self_is_identity() {
        let (mut g, mut tracker) = seeded(4, 2, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        g.add_node(&mut tracker, &mut rng).unwrap();
        let child = crossover(&g, &g, &mut rng);
        assert_eq!(child.nodes, g.nodes);
        assert_eq!(child.connections, g.connections);
    }

    #[test]
    fn crossover_matching_gene_frequency() {
        let fitter = with_innovations(&[0], 1.0);
        let weaker = with_innovations(&[0], 2.0);
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let trials = 20_000;
        let from_fitter = (0..trials)
            .filter(|_| crossover(&fitter, &weaker, &mut rng).connections[0].weight == 1.0)
            .count();
        let freq = from_fitter as f64 / trials as f64;
        assert!((freq - 0.5).abs() < 0.02, "{freq}");
    }

    #[test]
    fn parent_ordering_ties() {
        let mut a = with_innovations(&[0, 1, 2], 0.0);
        let mut b = with_innovations(&[0, 1], 0.0);
        a.fitness = Some(1.0);
        b.fitness = Some(1.0);
        let (f, _) = order_parents(&a, &b);
        assert_eq!(f.connections.len(), 2);
        b.connections.push(conn(3, 3, 8, 0.0));
        let (f, _) = order_parents(&a, &b);
        assert!(std::ptr::eq(f, &a));
        b.fitness = Some(2.0);
        let (f, _) = order_parents(&a, &b);
        assert!(std::ptr::eq(f, &b));
    }

    #[test]
    fn add_node_uses_incoming_weight_and_unit_outgoing() {
        let mut g = with_innovations(&[0], 2.5);
        let mut tracker = InnovationTracker::new(100);
        // keep the tracker's counter beyond the hand-made innovations
        for i in 0..10 {
            tracker.connection(1000 + i, 0);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let n = g.add_node(&mut tracker, &mut rng).unwrap();
        assert!(!g.connections[0].enabled);
        let incoming = g.connections.iter().find(|c| c.to == n).unwrap();
        let outgoing = g.connections.iter().find(|c| c.from == n).unwrap();
        assert_eq!((incoming.from, incoming.weight), (0, 2.5));
        assert_eq!((outgoing.to, outgoing.weight), (8, 1.0));
        assert!(g.node(n).is_some_and(|node| node.kind == NodeKind::Hidden));
    }

    #[test]
    fn add_node_accounting() {
        let (mut g, mut tracker) = seeded(3, 2, 11);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (nodes, conns, enabled) = (g.nodes.len(), g.connections.len(), g.enabled_connections());
        g.add_node(&mut tracker, &mut rng).unwrap();
        assert_eq!(g.nodes.len(), nodes + 1);
        assert_eq!(g.connections.len(), conns + 2);
        assert_eq!(g.enabled_connections(), enabled + 1);
    }

    #[test]
    fn shared_innovation_for_identical_additions() {
        let mut tracker = InnovationTracker::new(3);
        let cfg = NeatConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut a = Genome::fully_connected(2, 1, &mut tracker, &cfg, &mut rng);
        let mut b = Genome::fully_connected(2, 1, &mut tracker, &cfg, &mut rng);
        // same split in both genomes
        let na = a.add_node(&mut tracker, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let nb = b.add_node(&mut tracker, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(na, nb);
        assert_eq!(a.innovations(), b.innovations());
        // the same new link registered twice
        let ia = tracker.connection(0, na);
        let ib = tracker.connection(0, nb);
        assert_eq!(ia, ib);
    }

    #[test]
    fn zero_probabilities_leave_genome_unchanged() {
        let (mut g, mut tracker) = seeded(5, 3, 21);
        let before = g.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        g.mutate(&mut tracker, &NeatConfig::frozen(), &mut rng);
        assert_eq!(g.nodes, before.nodes);
        assert_eq!(g.connections, before.connections);
    }

    #[test]
    fn add_connection_never_closes_a_loop() {
        let (mut g, mut tracker) = seeded(2, 1, 8);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let cfg = NeatConfig::default();
        for _ in 0..20 {
            g.add_node(&mut tracker, &mut rng);
            g.add_connection(&mut tracker, &cfg, &mut rng);
        }
        g.validate().unwrap();
    }

    #[test]
    fn cycle_detection() {
        let mut g = with_innovations(&[0], 1.0);
        g.nodes.push(NodeGene {
            id: 20,
            kind: NodeKind::Hidden,
            bias: 0.0,
        });
        g.connections.push(conn(1, 0, 20, 1.0));
        g.connections.push(conn(2, 20, 8, 1.0));
        assert!(g.creates_cycle(8, 20));
        assert!(g.creates_cycle(20, 20));
        assert!(!g.creates_cycle(1, 20));
    }

    #[test]
    fn delete_node_removes_incident_links() {
        let (mut g, mut tracker) = seeded(2, 1, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = g.add_node(&mut tracker, &mut rng).unwrap();
        assert_eq!(g.delete_node(&mut rng), Some(n));
        assert!(g.connections.iter().all(|c| c.from != n && c.to != n));
        assert_eq!(g.delete_node(&mut rng), None);
    }

    #[test]
    fn json_round_trip() {
        let (mut g, mut tracker) = seeded(4, 2, 12);
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        g.add_node(&mut tracker, &mut rng);
        g.connections[0].enabled = false;
        g.fitness = Some(0.1 + 0.2);
        let back = Genome::from_json(&g.to_json().unwrap()).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn from_json_rejects_dangling_connection() {
        let mut g = with_innovations(&[0], 1.0);
        g.connections[0].to = 99;
        let text = serde_json::to_string(&g).unwrap();
        assert!(matches!(
            Genome::from_json(&text),
            Err(NeatError::InvalidGenome(_))
        ));
    }
}
