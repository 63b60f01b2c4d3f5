//! Graph augmentation: feature masking, edge removal and perturbation, and
//! PPR / heat-kernel diffusion.

use std::collections::HashSet;

use nalgebra::DMatrix;
use ndarray::Array2;
use rand::seq::index::sample;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MagError, Result};
use crate::graph::{Adjacency, Graph};

/// Dense diffusion is refused above this node count.
pub const MAX_DENSE_DIFFUSION_NODES: usize = 12_000;

fn default_alpha() -> f64 {
    0.15
}

fn default_time() -> f64 {
    5.0
}

fn default_keep_eps() -> f64 {
    1e-4
}

/// One augmentation step, as written in run configs
/// (`{"op": "mask_features", "p": 0.2}`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case", deny_unknown_fields)]
pub enum AugmentStep {
    MaskFeatures {
        p: f64,
        #[serde(default)]
        per_node: bool,
    },
    RemoveEdges {
        p: f64,
    },
    FlipEdges {
        p: f64,
    },
    Ppr {
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_keep_eps")]
        keep_eps: f64,
    },
    Heat {
        #[serde(default = "default_time")]
        t: f64,
        #[serde(default = "default_keep_eps")]
        keep_eps: f64,
    },
}

impl AugmentStep {
    pub fn is_stochastic(&self) -> bool {
        matches!(
            self,
            AugmentStep::MaskFeatures { .. }
                | AugmentStep::RemoveEdges { .. }
                | AugmentStep::FlipEdges { .. }
        )
    }

    pub fn validate(&self) -> Result<()> {
        let prob = |name: &str, p: f64| {
            if (0.0..=1.0).contains(&p) {
                Ok(())
            } else {
                Err(MagError::Config(format!(
                    "{name} ratio must lie in [0, 1], got {p}"
                )))
            }
        };
        let eps = |e: f64| {
            if e >= 0.0 && e.is_finite() {
                Ok(())
            } else {
                Err(MagError::Config(format!("keep_eps must be >= 0, got {e}")))
            }
        };
        match *self {
            AugmentStep::MaskFeatures { p, .. } => prob("mask_features", p),
            AugmentStep::RemoveEdges { p } => prob("remove_edges", p),
            AugmentStep::FlipEdges { p } => prob("flip_edges", p),
            AugmentStep::Ppr { alpha, keep_eps } => {
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(MagError::Config(format!(
                        "ppr alpha must lie in (0, 1), got {alpha}"
                    )));
                }
                eps(keep_eps)
            }
            AugmentStep::Heat { t, keep_eps } => {
                if !(t > 0.0 && t.is_finite()) {
                    return Err(MagError::Config(format!("heat time must be > 0, got {t}")));
                }
                eps(keep_eps)
            }
        }
    }

    /// Short label used in sweep output (`MF`, `RE`, ...).
    pub fn short_name(&self) -> &'static str {
        match self {
            AugmentStep::MaskFeatures { .. } => "MF",
            AugmentStep::RemoveEdges { .. } => "RE",
            AugmentStep::FlipEdges { .. } => "FE",
            AugmentStep::Ppr { .. } => "PPR",
            AugmentStep::Heat { .. } => "HK",
        }
    }
}

/// Zeroes the same random subset of feature columns in every row; each
/// column is kept with probability `1 - p`.
pub fn mask_features<R: Rng + ?Sized>(x: &Array2<f64>, p: f64, rng: &mut R) -> Array2<f64> {
    let keep: Vec<bool> = (0..x.ncols()).map(|_| rng.random::<f64>() >= p).collect();
    let mut out = x.clone();
    for mut row in out.rows_mut() {
        for (v, &k) in row.iter_mut().zip(&keep) {
            if !k {
                *v = 0.0;
            }
        }
    }
    out
}

/// Variant drawing an independent mask for every row.
pub fn mask_features_per_node<R: Rng + ?Sized>(
    x: &Array2<f64>,
    p: f64,
    rng: &mut R,
) -> Array2<f64> {
    let mut out = x.clone();
    for v in out.iter_mut() {
        if rng.random::<f64>() < p {
            *v = 0.0;
        }
    }
    out
}

fn round_count(p: f64, e: usize) -> usize {
    ((p * e as f64).round() as usize).min(e)
}

/// Deletes `round(p·E)` undirected edges chosen uniformly.
pub fn remove_edges<R: Rng + ?Sized>(adj: &Adjacency, p: f64, rng: &mut R) -> Adjacency {
    let edges: Vec<(usize, usize)> = adj.edges().collect();
    let drop = round_count(p, edges.len());
    if drop == 0 {
        return adj.clone();
    }
    let mut removed = vec![false; edges.len()];
    for k in sample(rng, edges.len(), drop) {
        removed[k] = true;
    }
    let kept = edges
        .into_iter()
        .zip(removed)
        .filter(|(_, r)| !r)
        .map(|(e, _)| e);
    Adjacency::from_edges(adj.n(), kept).expect("subset of a valid edge set")
}

/// The symmetric perturbation location matrix, stored as its `u < v` pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlipLocations {
    pub pairs: Vec<(usize, usize)>,
}

/// Chooses `round(p·E)` pairs: half of them existing edges, the rest
/// non-edges (never self-pairs).
pub fn sample_flip_locations<R: Rng + ?Sized>(
    adj: &Adjacency,
    p: f64,
    rng: &mut R,
) -> Result<FlipLocations> {
    let edges: Vec<(usize, usize)> = adj.edges().collect();
    let total = round_count(p, edges.len());
    let n_remove = total / 2;
    let n_add = total - n_remove;
    let n = adj.n();
    let all_pairs = n * n.saturating_sub(1) / 2;
    let non_edges = all_pairs - edges.len();
    if n_add > non_edges {
        return Err(MagError::Capacity(format!(
            "flip_edges needs {n_add} non-edges but the graph has only {non_edges}"
        )));
    }
    let mut pairs: Vec<(usize, usize)> = sample(rng, edges.len(), n_remove)
        .into_iter()
        .map(|k| edges[k])
        .collect();
    if n_add > 0 {
        if non_edges <= 4 * n_add {
            let candidates: Vec<(usize, usize)> = (0..n)
                .flat_map(|u| ((u + 1)..n).map(move |v| (u, v)))
                .filter(|&(u, v)| !adj.has_edge(u, v))
                .collect();
            pairs.extend(
                sample(rng, candidates.len(), n_add)
                    .into_iter()
                    .map(|k| candidates[k]),
            );
        } else {
            let mut seen = HashSet::with_capacity(n_add);
            while seen.len() < n_add {
                let u = rng.random_range(0..n);
                let v = rng.random_range(0..n);
                if u == v {
                    continue;
                }
                let pair = (u.min(v), u.max(v));
                if !adj.has_edge(pair.0, pair.1) && seen.insert(pair) {
                    pairs.push(pair);
                }
            }
        }
    }
    Ok(FlipLocations { pairs })
}

/// `A ⊙ (1 − L) + (1 − A) ⊙ L`: toggles every listed pair.
pub fn apply_flip(adj: &Adjacency, locations: &FlipLocations) -> Adjacency {
    let toggles: HashSet<(usize, usize)> = locations.pairs.iter().copied().collect();
    let kept = adj.edges().filter(|e| !toggles.contains(e));
    let added = toggles
        .iter()
        .copied()
        .filter(|&(u, v)| !adj.has_edge(u, v));
    Adjacency::from_edges(adj.n(), kept.chain(added).collect::<Vec<_>>())
        .expect("toggled pairs are valid off-diagonal pairs")
}

pub fn flip_edges<R: Rng + ?Sized>(adj: &Adjacency, p: f64, rng: &mut R) -> Result<Adjacency> {
    let loc = sample_flip_locations(adj, p, rng)?;
    Ok(apply_flip(adj, &loc))
}

fn check_degrees(adj: &Adjacency) -> Result<()> {
    if let Some(i) = (0..adj.n()).find(|&i| adj.degree(i) == 0) {
        return Err(MagError::DegenerateDegree(i));
    }
    if adj.n() > MAX_DENSE_DIFFUSION_NODES {
        return Err(MagError::Capacity(format!(
            "dense diffusion is limited to {MAX_DENSE_DIFFUSION_NODES} nodes, graph has {}",
            adj.n()
        )));
    }
    Ok(())
}

/// Dense PPR matrix `α (I − (1−α) D^{-1/2} A D^{-1/2})^{-1}`, solved by
/// Cholesky factorization and checked by residual.
pub fn ppr_matrix(adj: &Adjacency, alpha: f64) -> Result<Array2<f64>> {
    check_degrees(adj)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(MagError::Config(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let n = adj.n();
    let inv_sqrt: Vec<f64> = (0..n)
        .map(|i| 1.0 / (adj.degree(i) as f64).sqrt())
        .collect();
    let decay = 1.0 - alpha;
    let mut m = DMatrix::<f64>::identity(n, n);
    for i in 0..n {
        for &j in adj.neighbors(i) {
            m[(i, j)] -= decay * inv_sqrt[i] * inv_sqrt[j];
        }
    }
    let inv = m
        .cholesky()
        .ok_or_else(|| MagError::Numerical("PPR system is not positive definite".into()))?
        .inverse();

    // residual of (I - (1-α)T) · inv = I, using the sparse T
    let mut worst = 0.0f64;
    for i in 0..n {
        for c in 0..n {
            let mut acc = inv[(i, c)];
            for &j in adj.neighbors(i) {
                acc -= decay * inv_sqrt[i] * inv_sqrt[j] * inv[(j, c)];
            }
            let target = if i == c { 1.0 } else { 0.0 };
            worst = worst.max((acc - target).abs());
        }
    }
    if worst > 1e-8 {
        return Err(MagError::Numerical(format!(
            "PPR solve residual {worst:e} exceeds 1e-8"
        )));
    }
    Ok(Array2::from_shape_fn((n, n), |(i, j)| alpha * inv[(i, j)]))
}

/// Number of Taylor terms after which the Poisson tail of `e^{-t} Σ t^k/k!`
/// drops below `tol`.
pub fn heat_terms(t: f64, tol: f64) -> usize {
    let mut term = (-t).exp();
    let mut cumulative = term;
    let mut k = 0usize;
    while 1.0 - cumulative >= tol && k < 10_000 {
        k += 1;
        term *= t / k as f64;
        cumulative += term;
    }
    k
}

/// Dense heat kernel `exp(t·A·D^{-1} − t·I)` by truncated Taylor series with
/// tail mass below 1e-9.
pub fn heat_matrix(adj: &Adjacency, t: f64) -> Result<Array2<f64>> {
    check_degrees(adj)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(MagError::Config(format!("heat time must be > 0, got {t}")));
    }
    let n = adj.n();
    let inv_deg: Vec<f64> = (0..n).map(|i| 1.0 / adj.degree(i) as f64).collect();
    let k_max = heat_terms(t, 1e-9);
    let scale = (-t).exp();
    let mut term = Array2::<f64>::eye(n) * scale;
    let mut sum = term.clone();
    for k in 1..=k_max {
        let factor = t / k as f64;
        let mut next = Array2::<f64>::zeros((n, n));
        for i in 0..n {
            let mut row = next.row_mut(i);
            for &j in adj.neighbors(i) {
                row.scaled_add(factor * inv_deg[j], &term.row(j));
            }
        }
        sum += &next;
        term = next;
    }
    Ok(sum)
}

/// Keeps off-diagonal pairs whose weight (in either direction) reaches
/// `keep_eps`, as an unweighted symmetric adjacency.
pub fn sparsify(s: &Array2<f64>, keep_eps: f64) -> Adjacency {
    let n = s.nrows();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            if s[[i, j]].abs().max(s[[j, i]].abs()) >= keep_eps {
                edges.push((i, j));
            }
        }
    }
    Adjacency::from_edges(n, edges).expect("pairs are in range and off-diagonal")
}

pub fn ppr_diffuse(adj: &Adjacency, alpha: f64, keep_eps: f64) -> Result<Adjacency> {
    Ok(sparsify(&ppr_matrix(adj, alpha)?, keep_eps))
}

pub fn heat_diffuse(adj: &Adjacency, t: f64, keep_eps: f64) -> Result<Adjacency> {
    Ok(sparsify(&heat_matrix(adj, t)?, keep_eps))
}

fn apply_step<R: Rng + ?Sized>(g: &Graph, step: &AugmentStep, rng: &mut R) -> Result<Graph> {
    match *step {
        AugmentStep::MaskFeatures { p, per_node } => {
            let x = if per_node {
                mask_features_per_node(g.features(), p, rng)
            } else {
                mask_features(g.features(), p, rng)
            };
            g.with_features(x)
        }
        AugmentStep::RemoveEdges { p } => g.with_adjacency(remove_edges(g.adjacency(), p, rng)),
        AugmentStep::FlipEdges { p } => g.with_adjacency(flip_edges(g.adjacency(), p, rng)?),
        AugmentStep::Ppr { alpha, keep_eps } => {
            g.with_adjacency(ppr_diffuse(g.adjacency(), alpha, keep_eps)?)
        }
        AugmentStep::Heat { t, keep_eps } => {
            g.with_adjacency(heat_diffuse(g.adjacency(), t, keep_eps)?)
        }
    }
}

/// Applies the steps in order. Structural steps replace the adjacency,
/// feature steps replace the feature matrix.
pub fn compose_augmentation<R: Rng + ?Sized>(
    g: &Graph,
    steps: &[AugmentStep],
    rng: &mut R,
) -> Result<Graph> {
    let mut out = g.clone();
    for step in steps {
        step.validate()?;
        out = apply_step(&out, step, rng)?;
    }
    Ok(out)
}

/// Repeated augmentation of one base graph. The leading run of
/// deterministic (diffusion) steps is evaluated once at construction; the
/// remaining steps are applied on every [`Augmenter::draw`].
#[derive(Debug, Clone)]
pub struct Augmenter {
    base: Graph,
    rest: Vec<AugmentStep>,
}

impl Augmenter {
    pub fn new(g: &Graph, steps: &[AugmentStep]) -> Result<Self> {
        for s in steps {
            s.validate()?;
        }
        let split = steps
            .iter()
            .position(AugmentStep::is_stochastic)
            .unwrap_or(steps.len());
        let mut never = NoRng;
        let base = compose_augmentation(g, &steps[..split], &mut never)?;
        Ok(Augmenter {
            base,
            rest: steps[split..].to_vec(),
        })
    }

    pub fn is_stochastic(&self) -> bool {
        !self.rest.is_empty()
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Graph> {
        compose_augmentation(&self.base, &self.rest, rng)
    }
}

/// An RNG for code paths that must not consume randomness.
struct NoRng;

impl rand::RngCore for NoRng {
    fn next_u32(&mut self) -> u32 {
        unreachable!("deterministic augmentation steps draw no randomness")
    }
    fn next_u64(&mut self) -> u64 {
        unreachable!("deterministic augmentation steps draw no randomness")
    }
    fn fill_bytes(&mut self, _dst: &mut [u8]) {
        unreachable!("deterministic augmentation steps draw no randomness")
    }
}
