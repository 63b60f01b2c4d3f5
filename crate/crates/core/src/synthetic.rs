//! Planted-partition generator for citation-like attributed graphs.
//!
//! Produces communities of densely linked nodes whose sparse binary features
//! concentrate on a community-specific block of the vocabulary. Used by tests,
//! benches and smoke runs when no real dataset is at hand.

use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MagError, Result};
use crate::graph::{Adjacency, Graph};
use crate::rng::{stream, Purpose};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlantedPartition {
    pub nodes: usize,
    pub communities: usize,
    /// Expected number of neighbours inside the node's own community.
    pub degree_in: f64,
    /// Expected number of neighbours outside it.
    pub degree_out: f64,
    pub dim: usize,
    /// Active features per node.
    pub words_per_node: usize,
    /// Probability that an active feature falls in the community block.
    pub topic_focus: f64,
    pub seed: u64,
}

impl Default for PlantedPartition {
    fn default() -> Self {
        PlantedPartition {
            nodes: 600,
            communities: 6,
            degree_in: 3.5,
            degree_out: 0.5,
            dim: 120,
            words_per_node: 10,
            topic_focus: 0.8,
            seed: 0,
        }
    }
}

impl PlantedPartition {
    pub fn generate(&self) -> Result<Graph> {
        let n = self.nodes;
        let c = self.communities.max(1);
        if n < 2 || self.dim == 0 || self.words_per_node > self.dim {
            return Err(MagError::Config(
                "planted partition needs n >= 2, dim >= 1 and words_per_node <= dim".into(),
            ));
        }
        let mut rng = stream(self.seed, Purpose::Init, &[0x5157]);
        let community = |i: usize| i * c / n;
        let size = |k: usize| (0..n).filter(|&i| community(i) == k).count();
        let sizes: Vec<usize> = (0..c).map(size).collect();

        let mut edges = Vec::new();
        for u in 0..n {
            for v in (u + 1)..n {
                let (cu, cv) = (community(u), community(v));
                let p = if cu == cv {
                    self.degree_in / (sizes[cu].saturating_sub(1).max(1)) as f64
                } else {
                    self.degree_out / ((n - sizes[cu]).max(1)) as f64
                };
                if rng.random::<f64>() < p.min(1.0) {
                    edges.push((u, v));
                }
            }
        }
        let adjacency = Adjacency::from_edges(n, edges)?;

        let block = (self.dim / c).max(1);
        let mut features = Array2::zeros((n, self.dim));
        for i in 0..n {
            let start = (community(i) * block).min(self.dim - 1);
            let end = (start + block).min(self.dim);
            let mut active = 0;
            while active < self.words_per_node {
                let w = if rng.random::<f64>() < self.topic_focus {
                    rng.random_range(start..end)
                } else {
                    rng.random_range(0..self.dim)
                };
                if features[[i, w]] == 0.0 {
                    features[[i, w]] = 1.0;
                    active += 1;
                }
            }
        }
        Graph::new(adjacency, features, None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_well_formed() {
        let spec = PlantedPartition::default();
        let a = spec.generate().unwrap();
        let b = spec.generate().unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n(), 600);
        let avg = 2.0 * a.adjacency().num_edges() as f64 / 600.0;
        assert!((avg - 4.0).abs() < 0.6, "average degree {avg}");
        for row in a.features().rows() {
            assert_eq!(row.sum(), 10.0);
        }
    }
}
