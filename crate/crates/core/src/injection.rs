//! Structural (clique) and contextual (distant-feature) anomaly injection.

use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MagError, Result};
use crate::graph::{Adjacency, AnomalyKind, Graph};
use crate::rng::{stream, Purpose};

/// Parameters of the benchmark injection protocol.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectionSpec {
    pub clique_size: usize,
    pub num_cliques: usize,
    pub contextual_count: usize,
    pub candidate_pool: usize,
    #[serde(default)]
    pub seed: u64,
}

impl InjectionSpec {
    /// 150 anomalies: 5 cliques of 15 plus 75 contextual nodes.
    pub fn citation_small() -> Self {
        InjectionSpec {
            clique_size: 15,
            num_cliques: 5,
            contextual_count: 75,
            candidate_pool: 50,
            seed: 0,
        }
    }

    /// 600 anomalies: 20 cliques of 15 plus 300 contextual nodes.
    pub fn citation_large() -> Self {
        InjectionSpec {
            num_cliques: 20,
            contextual_count: 300,
            ..Self::citation_small()
        }
    }

    pub fn structural_count(&self) -> usize {
        self.clique_size * self.num_cliques
    }

    pub fn total(&self) -> usize {
        self.structural_count() + self.contextual_count
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.structural_count() != self.contextual_count {
            return Err(MagError::Config(format!(
                "structural ({}) and contextual ({}) counts must match",
                self.structural_count(),
                self.contextual_count
            )));
        }
        if self.candidate_pool == 0 {
            return Err(MagError::Config("candidate_pool must be at least 1".into()));
        }
        if self.total() > n {
            return Err(MagError::Capacity(format!(
                "{} anomalies requested on a graph of {n} nodes",
                self.total()
            )));
        }
        Ok(())
    }
}

fn current_labels(g: &Graph) -> Vec<AnomalyKind> {
    g.labels()
        .map(<[AnomalyKind]>::to_vec)
        .unwrap_or_else(|| vec![AnomalyKind::Normal; g.n()])
}

fn unlabeled(labels: &[AnomalyKind]) -> Vec<usize> {
    labels
        .iter()
        .enumerate()
        .filter(|(_, k)| !k.is_anomaly())
        .map(|(i, _)| i)
        .collect()
}

/// Turns `q` disjoint groups of `m_c` unlabeled nodes into cliques.
pub fn inject_structural<R: Rng + ?Sized>(
    g: &Graph,
    q: usize,
    m_c: usize,
    rng: &mut R,
) -> Result<Graph> {
    let mut labels = current_labels(g);
    let pool = unlabeled(&labels);
    let need = q * m_c;
    if need > pool.len() {
        return Err(MagError::Capacity(format!(
            "{need} structural anomalies requested but only {} unlabeled nodes",
            pool.len()
        )));
    }
    let chosen: Vec<usize> = sample(rng, pool.len(), need)
        .into_iter()
        .map(|k| pool[k])
        .collect();
    let mut edges: Vec<(usize, usize)> = g.adjacency().edges().collect();
    for clique in chosen.chunks(m_c.max(1)) {
        for (a, &u) in clique.iter().enumerate() {
            labels[u] = AnomalyKind::Structural;
            for &v in &clique[a + 1..] {
                edges.push((u, v));
            }
        }
    }
    let adjacency = Adjacency::from_edges(g.n(), edges)?;
    Graph::new(adjacency, g.features().clone(), Some(labels))
}

/// One contextual replacement: the candidates drawn and the one copied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextualRecord {
    pub node: usize,
    pub candidates: Vec<usize>,
    pub chosen: usize,
}

/// Replaces the features of `count` unlabeled nodes with the farthest (in
/// Euclidean distance) of `k` random candidate rows, returning the trace.
///
/// Distances are measured against the features as they were before any
/// replacement in this call.
pub fn inject_contextual_traced<R: Rng + ?Sized>(
    g: &Graph,
    count: usize,
    k: usize,
    rng: &mut R,
) -> Result<(Graph, Vec<ContextualRecord>)> {
    if k == 0 {
        return Err(MagError::Config(
            "candidate pool k must be at least 1".into(),
        ));
    }
    let n = g.n();
    if k > n.saturating_sub(1) {
        return Err(MagError::Capacity(format!(
            "candidate pool of {k} needs at least {} nodes",
            k + 1
        )));
    }
    let mut labels = current_labels(g);
    let pool = unlabeled(&labels);
    if count > pool.len() {
        return Err(MagError::Capacity(format!(
            "{count} contextual anomalies requested but only {} unlabeled nodes",
            pool.len()
        )));
    }
    let original = g.features();
    let mut features = original.clone();
    let targets: Vec<usize> = sample(rng, pool.len(), count)
        .into_iter()
        .map(|i| pool[i])
        .collect();
    let mut trace = Vec::with_capacity(count);
    for v in targets {
        // k distinct candidates drawn from every node except v
        let candidates: Vec<usize> = sample(rng, n - 1, k)
            .into_iter()
            .map(|c| if c >= v { c + 1 } else { c })
            .collect();
        let xv = original.row(v);
        let mut best = candidates[0];
        let mut best_dist = f64::NEG_INFINITY;
        for &c in &candidates {
            let d: f64 = xv
                .iter()
                .zip(original.row(c).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            if d > best_dist {
                best_dist = d;
                best = c;
            }
        }
        features.row_mut(v).assign(&original.row(best));
        labels[v] = AnomalyKind::Contextual;
        trace.push(ContextualRecord {
            node: v,
            candidates,
            chosen: best,
        });
    }
    let out = Graph::new(g.adjacency().clone(), features, Some(labels))?;
    Ok((out, trace))
}

pub fn inject_contextual<R: Rng + ?Sized>(
    g: &Graph,
    count: usize,
    k: usize,
    rng: &mut R,
) -> Result<Graph> {
    inject_contextual_traced(g, count, k, rng).map(|(g, _)| g)
}

/// Structural then contextual injection on disjoint node sets of a clean
/// graph. Deterministic in `(g, spec)`.
pub fn inject_benchmark(g: &Graph, spec: &InjectionSpec) -> Result<Graph> {
    if g.labels().is_some_and(|l| l.iter().any(|k| k.is_anomaly())) {
        return Err(MagError::Config(
            "graph already carries anomaly labels; injection expects a clean graph".into(),
        ));
    }
    spec.validate(g.n())?;
    let mut rng = stream(spec.seed, Purpose::Inject, &[0]);
    let g = inject_structural(g, spec.num_cliques, spec.clique_size, &mut rng)?;
    inject_contextual(&g, spec.contextual_count, spec.candidate_pool, &mut rng)
}
