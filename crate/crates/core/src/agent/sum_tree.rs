//! Array-backed binary sum tree over a fixed number of leaves.

#[derive(Debug, Clone, PartialEq)]
pub struct SumTree {
    leaves: usize,
    /// Node `i` has children `2i` and `2i + 1`; leaves start at `base`.
    nodes: Vec<f64>,
    base: usize,
}

impl SumTree {
    pub fn new(capacity: usize) -> Self {
        let base = capacity.max(1).next_power_of_two();
        Self {
            leaves: capacity,
            nodes: vec![0.0; 2 * base],
            base,
        }
    }

    pub fn capacity(&self) -> usize {
        self.leaves
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn get(&self, index: usize) -> f64 {
        self.nodes[self.base + index]
    }

    /// Sets a leaf and recomputes every ancestor from its children, so no
    /// incremental rounding error accumulates.
    pub fn set(&mut self, index: usize, value: f64) {
        assert!(index < self.leaves, "leaf {index} out of range");
        assert!(value >= 0.0 && value.is_finite(), "leaf value {value}");
        let mut node = self.base + index;
        self.nodes[node] = value;
        while node > 1 {
            node /= 2;
            self.nodes[node] = self.nodes[2 * node] + self.nodes[2 * node + 1];
        }
    }

    /// Leaf whose cumulative range contains `mass`, for `mass` in
    /// `[0, total)`. Never returns a zero-weight leaf while `total > 0`.
    pub fn find(&self, mass: f64) -> usize {
        let mut node = 1;
        let mut rest = mass.max(0.0);
        while node < self.base {
            let left = 2 * node;
            if rest < self.nodes[left] || self.nodes[left + 1] <= 0.0 {
                node = left;
            } else {
                rest -= self.nodes[left];
                node = left + 1;
            }
        }
        node - self.base
    }
}
