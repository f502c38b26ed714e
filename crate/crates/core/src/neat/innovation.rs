use std::collections::HashMap;

/// Historical markings shared by every genome of a population.
///
/// Within one generation the same structural addition (a connection between
/// the same two nodes, or a split of the same connection) always receives
/// the same marker. [`InnovationTracker::new_generation`] forgets the
/// per-generation registry while the counters keep increasing.
#[derive(Debug, Clone, Default)]
pub struct InnovationTracker {
    connections: HashMap<(usize, usize), usize>,
    splits: HashMap<usize, usize>,
    next_innovation: usize,
    next_node_id: usize,
}

impl InnovationTracker {
    pub fn new(next_node_id: usize) -> Self {
        Self {
            next_node_id,
            ..Self::default()
        }
    }

    /// Innovation number for a connection `from -> to`, allocating one if
    /// this pair has not been seen in the current generation.
    pub fn connection(&mut self, from: usize, to: usize) -> usize {
        let next = &mut self.next_innovation;
        *self.connections.entry((from, to)).or_insert_with(|| {
            let id = *next;
            *next += 1;
            id
        })
    }

    /// Node id for the hidden node that splits the connection with the given
    /// innovation number.
    pub fn split_node(&mut self, innovation: usize) -> usize {
        let next = &mut self.next_node_id;
        *self.splits.entry(innovation).or_insert_with(|| {
            let id = *next;
            *next += 1;
            id
        })
    }

    /// A node id nobody has used yet.
    pub fn fresh_node(&mut self) -> usize {
        let id = self.next_node_id;
        self.next_node_id += 1;
        id
    }

    pub fn new_generation(&mut self) {
        self.connections.clear();
        self.splits.clear();
    }

    pub fn next_innovation(&self) -> usize {
        self.next_innovation
    }

    pub fn next_node_id(&self) -> usize {
        self.next_node_id
    }
}
