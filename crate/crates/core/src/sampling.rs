//! Random-walk-with-restart subgraph sampling and per-target instances.

use ndarray::{Array1, Array2};
use rand::Rng;

use crate::error::{MagError, Result};
use crate::graph::{induced_adjacency, Adjacency, Graph, NormalizedAdjacency};

fn check_params(m: usize, restart_p: f64) -> Result<()> {
    if m == 0 {
        return Err(MagError::Config("subgraph size must be at least 1".into()));
    }
    if !(restart_p > 0.0 && restart_p <= 1.0) {
        return Err(MagError::Config(format!(
            "restart probability must lie in (0, 1], got {restart_p}"
        )));
    }
    Ok(())
}

/// Default walk budget: `10 · m · ⌈1/restart_p⌉` steps.
pub fn default_budget(m: usize, restart_p: f64) -> usize {
    10 * m * (1.0 / restart_p).ceil() as usize
}

/// Distinct nodes met by a restarting walk from `target`, in first-visit
/// order, padded with `target` up to length `m`.
pub fn rwr_sample<R: Rng + ?Sized>(
    adj: &Adjacency,
    target: usize,
    m: usize,
    restart_p: f64,
    rng: &mut R,
) -> Result<Vec<usize>> {
    check_params(m, restart_p)?;
    rwr_sample_with_budget(adj, target, m, restart_p, default_budget(m, restart_p), rng)
}

pub fn rwr_sample_with_budget<R: Rng + ?Sized>(
    adj: &Adjacency,
    target: usize,
    m: usize,
    restart_p: f64,
    budget: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    check_params(m, restart_p)?;
    if target >= adj.n() {
        return Err(MagError::Bounds {
            index: target,
            n: adj.n(),
        });
    }
    let mut visited = Vec::with_capacity(m);
    visited.push(target);
    if adj.degree(target) > 0 {
        let mut current = target;
        let mut steps = 0;
        while visited.len() < m && steps < budget {
            steps += 1;
            if rng.random::<f64>() < restart_p {
                current = target;
                continue;
            }
            let nbrs = adj.neighbors(current);
            if nbrs.is_empty() {
                current = target;
                continue;
            }
            current = nbrs[rng.random_range(0..nbrs.len())];
            if !visited.contains(&current) {
                visited.push(current);
            }
        }
    }
    visited.resize(m, target);
    Ok(visited)
}

/// A sampled neighbourhood: node list (target first) and its local
/// normalized adjacency. Carries no features.
#[derive(Debug, Clone, PartialEq)]
pub struct Subgraph {
    pub target: usize,
    pub nodes: Vec<usize>,
    pub local_adj: NormalizedAdjacency,
}

impl Subgraph {
    pub fn sample<R: Rng + ?Sized>(
        adj: &Adjacency,
        target: usize,
        m: usize,
        restart_p: f64,
        rng: &mut R,
    ) -> Result<Self> {
        let nodes = rwr_sample(adj, target, m, restart_p, rng)?;
        Self::on_nodes(adj, nodes)
    }

    /// Induces the given node list (first entry is the target) on `adj`.
    pub fn on_nodes(adj: &Adjacency, nodes: Vec<usize>) -> Result<Self> {
        let target = *nodes
            .first()
            .ok_or_else(|| MagError::Sampling("empty node list".into()))?;
        let local_adj = induced_adjacency(adj, &nodes)?;
        Ok(Subgraph {
            target,
            nodes,
            local_adj,
        })
    }

    /// Whether position `r` holds a feature row (false for the target and
    /// its padding copies, whose rows are zero).
    pub fn is_visible(&self, r: usize) -> bool {
        self.nodes[r] != self.target
    }
}

/// A subgraph together with its masked feature block.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub target: usize,
    pub nodes: Vec<usize>,
    pub local_adj: NormalizedAdjacency,
    /// `m × d`; rows holding the target (position 0 and any padding) are zero.
    pub features_masked: Array2<f64>,
    pub target_feature: Array1<f64>,
}

impl Instance {
    pub fn from_subgraph(g: &Graph, sub: Subgraph) -> Self {
        let mut block = Array2::zeros((sub.nodes.len(), g.dim()));
        for (r, &v) in sub.nodes.iter().enumerate() {
            if sub.is_visible(r) {
                block.row_mut(r).assign(&g.feature_row(v));
            }
        }
        Instance {
            target: sub.target,
            target_feature: g.feature_row(sub.target).to_owned(),
            nodes: sub.nodes,
            local_adj: sub.local_adj,
            features_masked: block,
        }
    }

    /// The instance over a fixed node list, e.g. to mirror an original-graph
    /// sample onto an augmented graph.
    pub fn on_nodes(g: &Graph, nodes: Vec<usize>) -> Result<Self> {
        Ok(Self::from_subgraph(
            g,
            Subgraph::on_nodes(g.adjacency(), nodes)?,
        ))
    }

    pub fn size(&self) -> usize {
        self.nodes.len()
    }
}

pub fn build_instance<R: Rng + ?Sized>(
    g: &Graph,
    target: usize,
    m: usize,
    restart_p: f64,
    rng: &mut R,
) -> Result<Instance> {
    let sub = Subgraph::sample(g.adjacency(), target, m, restart_p, rng)?;
    Ok(Instance::from_subgraph(g, sub))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn path3() -> Adjacency {
        Adjacency::from_edges(3, [(0, 1), (1, 2)]).unwrap()
    }

    #[test]
    fn isolated_target_is_all_padding() {
        let adj = Adjacency::from_edges(3, [(1, 2)]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(rwr_sample(&adj, 0, 4, 0.5, &mut rng).unwrap(), vec![0; 4]);
    }

    #[test]
    fn certain_restart_never_leaves() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(
            rwr_sample(&path3(), 1, 4, 1.0, &mut rng).unwrap(),
            vec![1; 4]
        );
    }

    #[test]
    fn invalid_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(rwr_sample(&path3(), 0, 0, 0.5, &mut rng).is_err());
        assert!(rwr_sample(&path3(), 0, 2, 0.0, &mut rng).is_err());
        assert!(rwr_sample(&path3(), 0, 2, 1.5, &mut rng).is_err());
        assert!(rwr_sample(&path3(), 7, 2, 0.5, &mut rng).is_err());
    }

    #[test]
    fn instance_masks_target_and_padding() {
        let x = Array2::from_shape_fn((3, 2), |(i, j)| 1.0 + (i * 2 + j) as f64);
        let g = Graph::new(path3(), x, None).unwrap();
        let inst = Instance::on_nodes(&g, vec![0, 1, 0]).unwrap();
        assert_eq!(inst.features_masked.row(0).sum(), 0.0);
        assert_eq!(inst.features_masked.row(2).sum(), 0.0);
        assert_eq!(inst.features_masked.row(1), g.feature_row(1));
        assert_eq!(inst.target_feature, g.feature_row(0));
    }
}
