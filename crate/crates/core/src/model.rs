//! Model parameters and the exact batch forward/backward pass over the
//! twelve-view pool.
//!
//! Subgraph features are never materialized: a visible position `r` of a
//! sampled node list reads its row straight from the graph (or from a
//! precomputed `X · W` table at inference), and the target position reads
//! zeros.

use std::collections::BTreeSet;

use ndarray::{Array1, Array2, ArrayView1, Axis};

use crate::contrast::{
    check_derangement, CombinationConfig, GraphSlot, ViewId, ViewKind, ViewTable,
};
use crate::error::{MagError, Result};
use crate::exec::Execution;
use crate::graph::Graph;
use crate::nn::{
    accumulate_projection, contrast_bce, contrast_bce_logit_grads, project_rows, sigmoid,
    BackboneParams, DiscriminatorParams,
};
use crate::rng::{stream, Purpose};
use crate::sampling::{rwr_sample, Subgraph};

/// Two GCN backbones plus one bilinear discriminator per contrast pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub backbones: [BackboneParams; 2],
    pub discriminators: Vec<DiscriminatorParams>,
}

impl ModelParams {
    /// Glorot-initialized parameters. Each matrix draws from its own stream,
    /// so adding pairs never changes the backbones.
    pub fn init(input_dim: usize, hidden_dim: usize, num_pairs: usize, seed: u64) -> Self {
        let backbones = [0u64, 1].map(|k| {
            BackboneParams::glorot(
                input_dim,
                hidden_dim,
                &mut stream(seed, Purpose::Init, &[k]),
            )
        });
        let discriminators = (0..num_pairs)
            .map(|j| {
                DiscriminatorParams::glorot(
                    hidden_dim,
                    &mut stream(seed, Purpose::Init, &[2 + j as u64]),
                )
            })
            .collect();
        ModelParams {
            backbones,
            discriminators,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.backbones[0].input_dim()
    }

    pub fn hidden_dim(&self) -> usize {
        self.backbones[0].hidden_dim()
    }

    pub fn num_pairs(&self) -> usize {
        self.discriminators.len()
    }

    /// Rejects parameters whose shapes do not fit the graph or combination.
    pub fn check_compatible(
        &self,
        input_dim: usize,
        combination: &CombinationConfig,
    ) -> Result<()> {
        let h = self.hidden_dim();
        let bad_backbone = self
            .backbones
            .iter()
            .any(|b| b.weight.dim() != (input_dim, h));
        let bad_disc = self.discriminators.iter().any(|d| d.weight.dim() != (h, h));
        if bad_backbone || bad_disc || self.num_pairs() != combination.len() {
            return Err(MagError::Dimension(format!(
                "parameters (backbones {:?}, {} discriminators) do not fit {} input features \
                 and {} pairs",
                self.backbones.each_ref().map(|b| b.weight.dim()),
                self.num_pairs(),
                input_dim,
                combination.len()
            )));
        }
        Ok(())
    }

    /// Named matrices in a fixed order: `backbone.0`, `backbone.1`,
    /// `discriminator.0`, ...
    pub fn named_matrices(&self) -> Vec<(String, &Array2<f64>)> {
        let mut out: Vec<(String, &Array2<f64>)> = self
            .backbones
            .iter()
            .enumerate()
            .map(|(k, b)| (format!("backbone.{k}"), &b.weight))
            .collect();
        out.extend(
            self.discriminators
                .iter()
                .enumerate()
                .map(|(j, d)| (format!("discriminator.{j}"), &d.weight)),
        );
        out
    }

    pub fn matrices(&self) -> Vec<&Array2<f64>> {
        self.named_matrices().into_iter().map(|(_, m)| m).collect()
    }

    pub fn matrices_mut(&mut self) -> Vec<&mut Array2<f64>> {
        let mut out: Vec<&mut Array2<f64>> =
            self.backbones.iter_mut().map(|b| &mut b.weight).collect();
        out.extend(self.discriminators.iter_mut().map(|d| &mut d.weight));
        out
    }

    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.matrices().iter().map(|m| m.dim()).collect()
    }

    /// Rebuilds parameters from matrices in [`ModelParams::named_matrices`]
    /// order.
    pub fn from_matrices(mut mats: Vec<Array2<f64>>) -> Result<Self> {
        if mats.len() < 2 {
            return Err(MagError::Dimension(
                "need at least two backbone matrices".into(),
            ));
        }
        let discs = mats.split_off(2);
        let second = mats.pop().expect("two matrices");
        let first = mats.pop().expect("two matrices");
        let params = ModelParams {
            backbones: [
                BackboneParams { weight: first },
                BackboneParams { weight: second },
            ],
            discriminators: discs
                .into_iter()
                .map(|weight| DiscriminatorParams { weight })
                .collect(),
        };
        let h = params.hidden_dim();
        if params.backbones[1].weight.dim() != params.backbones[0].weight.dim()
            || params
                .discriminators
                .iter()
                .any(|d| d.weight.dim() != (h, h))
        {
            return Err(MagError::Dimension("inconsistent parameter shapes".into()));
        }
        Ok(params)
    }
}

/// Gradients laid out like [`ModelParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub backbones: [Array2<f64>; 2],
    pub discriminators: Vec<Array2<f64>>,
}

impl Gradients {
    pub fn zeros_like(params: &ModelParams) -> Self {
        Gradients {
            backbones: params
                .backbones
                .each_ref()
                .map(|b| Array2::zeros(b.weight.dim())),
            discriminators: params
                .discriminators
                .iter()
                .map(|d| Array2::zeros(d.weight.dim()))
                .collect(),
        }
    }

    pub fn matrices(&self) -> Vec<&Array2<f64>> {
        let mut out: Vec<&Array2<f64>> = self.backbones.iter().collect();
        out.extend(self.discriminators.iter());
        out
    }
}

/// Feature access for one graph slot, optionally with `X · W_k` precomputed
/// for both backbones.
#[derive(Debug, Clone)]
pub struct GraphInput<'a> {
    graph: &'a Graph,
    projections: Option<[Array2<f64>; 2]>,
}

impl<'a> GraphInput<'a> {
    pub fn raw(graph: &'a Graph) -> Self {
        GraphInput {
            graph,
            projections: None,
        }
    }

    /// Precomputes `X · W` for both backbones; worthwhile when parameters are
    /// frozen and every node is visited.
    pub fn projected(graph: &'a Graph, params: &ModelParams) -> Self {
        GraphInput {
            graph,
            projections: Some(
                params
                    .backbones
                    .each_ref()
                    .map(|b| project_rows(graph.features(), &b.weight)),
            ),
        }
    }

    pub fn graph(&self) -> &'a Graph {
        self.graph
    }

    fn project(&self, node: usize, backbone: usize, params: &ModelParams, out: &mut [f64]) {
        match &self.projections {
            Some(p) => {
                for (o, v) in out.iter_mut().zip(p[backbone].row(node)) {
                    *o += v;
                }
            }
            None => accumulate_projection(
                self.graph.feature_row(node),
                &params.backbones[backbone].weight,
                out,
            ),
        }
    }
}

/// Original and (optionally) augmented graph inputs for a batch.
#[derive(Debug, Clone)]
pub struct Inputs<'a> {
    pub original: GraphInput<'a>,
    pub augmented: Option<GraphInput<'a>>,
}

impl<'a> Inputs<'a> {
    pub fn raw(original: &'a Graph, augmented: Option<&'a Graph>) -> Self {
        Inputs {
            original: GraphInput::raw(original),
            augmented: augmented.map(GraphInput::raw),
        }
    }

    fn slot(&self, slot: GraphSlot) -> Option<&GraphInput<'a>> {
        match slot {
            GraphSlot::Original => Some(&self.original),
            GraphSlot::Augmented => self.augmented.as_ref(),
        }
    }
}

/// One target: its neighbourhood on the original graph and, when augmented
/// views are in play, the same node list induced on the augmented graph.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePair {
    pub original: Subgraph,
    pub augmented: Option<Subgraph>,
}

impl SamplePair {
    fn slot(&self, slot: GraphSlot) -> Option<&Subgraph> {
        match slot {
            GraphSlot::Original => Some(&self.original),
            GraphSlot::Augmented => self.augmented.as_ref(),
        }
    }
}

/// Samples one neighbourhood per target on `original`, each from its own
/// stream keyed by `(tags.., target)`, and mirrors the node list onto
/// `augmented` when given.
#[allow(clippy::too_many_arguments)]
pub fn sample_pairs(
    original: &Graph,
    augmented: Option<&Graph>,
    targets: &[usize],
    subgraph_size: usize,
    restart_p: f64,
    seed: u64,
    purpose: Purpose,
    tags: &[u64],
    exec: Execution,
) -> Result<Vec<SamplePair>> {
    exec.map(targets, |&t| {
        let mut key = tags.to_vec();
        key.push(t as u64);
        let mut rng = stream(seed, purpose, &key);
        let nodes = rwr_sample(original.adjacency(), t, subgraph_size, restart_p, &mut rng)?;
        let augmented = match augmented {
            Some(a) => Some(Subgraph::on_nodes(a.adjacency(), nodes.clone())?),
            None => None,
        };
        Ok(SamplePair {
            original: Subgraph::on_nodes(original.adjacency(), nodes)?,
            augmented,
        })
    })
    .into_iter()
    .collect()
}

/// Which computations each of the four (graph, backbone) blocks needs.
#[derive(Debug, Clone, Copy, Default)]
struct BlockNeeds {
    subgraph: [bool; 4],
    node: [bool; 4],
}

fn block_of(v: ViewId) -> usize {
    v.index() / 3
}

fn block_slot(block: usize) -> GraphSlot {
    if block >= 2 {
        GraphSlot::Augmented
    } else {
        GraphSlot::Original
    }
}

fn block_view(block: usize, kind: ViewKind) -> ViewId {
    let offset = match kind {
        ViewKind::Subgraph => 1,
        ViewKind::MaskedNode => 2,
        ViewKind::Node => 3,
    };
    ViewId::new((3 * block + offset) as u8).expect("block in 0..4")
}

impl BlockNeeds {
    fn from_views(needed: &BTreeSet<ViewId>) -> Self {
        let mut out = BlockNeeds::default();
        for &v in needed {
            let b = block_of(v);
            match v.spec().kind {
                ViewKind::Node => out.node[b] = true,
                _ => out.subgraph[b] = true,
            }
        }
        out
    }

    fn uses_augmented(&self) -> bool {
        self.subgraph[2..].iter().chain(&self.node[2..]).any(|&x| x)
    }
}

/// Pre-activations kept for the backward pass of one target.
#[derive(Debug, Clone, Default)]
struct InstanceCache {
    subgraph: [Option<Array2<f64>>; 4],
    node: [Option<Array1<f64>>; 4],
}

/// Views of a batch plus what the backward pass needs.
#[derive(Debug, Clone)]
pub struct Forward {
    pub views: ViewTable,
    caches: Vec<InstanceCache>,
}

fn check_inputs(inputs: &Inputs<'_>, batch: &[SamplePair], needs: &BlockNeeds) -> Result<()> {
    if needs.uses_augmented()
        && (inputs.augmented.is_none() || batch.iter().any(|p| p.augmented.is_none()))
    {
        return Err(MagError::Config(
            "augmented views requested but no augmented graph or instances supplied".into(),
        ));
    }
    if batch.is_empty() {
        return Err(MagError::Sampling("empty batch".into()));
    }
    Ok(())
}

fn forward_one(
    params: &ModelParams,
    inputs: &Inputs<'_>,
    pair: &SamplePair,
    needs: &BlockNeeds,
) -> (InstanceCache, Vec<(ViewId, Array1<f64>)>) {
    let h = params.hidden_dim();
    let mut cache = InstanceCache::default();
    let mut rows = Vec::new();
    for block in 0..4 {
        if !(needs.subgraph[block] || needs.node[block]) {
            continue;
        }
        let slot = block_slot(block);
        let backbone = block % 2;
        let input = inputs.slot(slot).expect("checked by check_inputs");
        let sub = pair.slot(slot).expect("checked by check_inputs");
        if needs.subgraph[block] {
            let m = sub.nodes.len();
            let mut proj = Array2::zeros((m, h));
            for (r, mut row) in proj.rows_mut().into_iter().enumerate() {
                if sub.is_visible(r) {
                    input.project(
                        sub.nodes[r],
                        backbone,
                        params,
                        row.as_slice_mut().expect("standard layout"),
                    );
                }
            }
            let pre = sub.local_adj.matmul(&proj);
            let act = pre.mapv(|v| v.max(0.0));
            rows.push((
                block_view(block, ViewKind::Subgraph),
                act.mean_axis(Axis(0)).expect("non-empty subgraph"),
            ));
            rows.push((
                block_view(block, ViewKind::MaskedNode),
                act.row(0).to_owned(),
            ));
            cache.subgraph[block] = Some(pre);
        }
        if needs.node[block] {
            let mut pre = Array1::zeros(h);
            input.project(
                sub.target,
                backbone,
                params,
                pre.as_slice_mut().expect("contiguous"),
            );
            rows.push((block_view(block, ViewKind::Node), pre.mapv(|v| v.max(0.0))));
            cache.node[block] = Some(pre);
        }
    }
    (cache, rows)
}

/// Computes every view in `needed` (and, as a by-product, the sibling views
/// sharing a subgraph pass) for each target of the batch.
pub fn forward(
    params: &ModelParams,
    inputs: &Inputs<'_>,
    batch: &[SamplePair],
    needed: &BTreeSet<ViewId>,
    exec: Execution,
) -> Result<Forward> {
    let needs = BlockNeeds::from_views(needed);
    check_inputs(inputs, batch, &needs)?;
    let results = exec.map(batch, |pair| forward_one(params, inputs, pair, &needs));
    let h = params.hidden_dim();
    let mut tables: [Option<Array2<f64>>; 12] = Default::default();
    let mut caches = Vec::with_capacity(batch.len());
    for (i, (cache, rows)) in results.into_iter().enumerate() {
        for (v, row) in rows {
            tables[v.index()]
                .get_or_insert_with(|| Array2::zeros((batch.len(), h)))
                .row_mut(i)
                .assign(&row);
        }
        caches.push(cache);
    }
    let mut views = ViewTable::default();
    for v in ViewId::ALL {
        if let Some(t) = tables[v.index()].take() {
            views.insert(v, t);
        }
    }
    Ok(Forward { views, caches })
}

/// The views only, for callers that never differentiate.
pub fn compute_views(
    params: &ModelParams,
    inputs: &Inputs<'_>,
    batch: &[SamplePair],
    needed: &BTreeSet<ViewId>,
    exec: Execution,
) -> Result<ViewTable> {
    forward(params, inputs, batch, needed, exec).map(|f| f.views)
}

/// Per-target gradients w.r.t. the projected rows `P = X_sub · W` of each
/// block, and w.r.t. the projected target row for node views.
struct InstanceProjGrads {
    subgraph: [Option<Array2<f64>>; 4],
    node: [Option<Array1<f64>>; 4],
}

fn view_grad_row(grads: &ViewTable, v: ViewId, i: usize) -> Option<ArrayView1<'_, f64>> {
    grads.get(v).map(|g| g.row(i))
}

fn backward_one(
    cache: &InstanceCache,
    pair: &SamplePair,
    grads: &ViewTable,
    i: usize,
) -> InstanceProjGrads {
    let mut out = InstanceProjGrads {
        subgraph: Default::default(),
        node: Default::default(),
    };
    for block in 0..4 {
        if let Some(pre) = &cache.subgraph[block] {
            let sub = pair.slot(block_slot(block)).expect("present in forward");
            let m = pre.nrows();
            let mut d_act = Array2::zeros(pre.dim());
            if let Some(gs) = view_grad_row(grads, block_view(block, ViewKind::Subgraph), i) {
                let scale = 1.0 / m as f64;
                for mut row in d_act.rows_mut() {
                    row.scaled_add(scale, &gs);
                }
            }
            if let Some(gm) = view_grad_row(grads, block_view(block, ViewKind::MaskedNode), i) {
                d_act.row_mut(0).scaled_add(1.0, &gm);
            }
            ndarray::Zip::from(&mut d_act).and(pre).for_each(|g, &z| {
                if z <= 0.0 {
                    *g = 0.0
                }
            });
            // the normalized adjacency is symmetric, so Âᵀ·dZ = Â·dZ
            out.subgraph[block] = Some(sub.local_adj.matmul(&d_act));
        }
        if let Some(pre) = &cache.node[block] {
            if let Some(gz) = view_grad_row(grads, block_view(block, ViewKind::Node), i) {
                let mut dp = gz.to_owned();
                ndarray::Zip::from(&mut dp).and(pre).for_each(|g, &z| {
                    if z <= 0.0 {
                        *g = 0.0
                    }
                });
                out.node[block] = Some(dp);
            }
        }
    }
    out
}

/// `dW += x ⊗ dp`, skipping zero feature entries.
fn scatter_outer(dw: &mut Array2<f64>, x: ArrayView1<'_, f64>, dp: ArrayView1<'_, f64>) {
    for (k, &xk) in x.iter().enumerate() {
        if xk != 0.0 {
            dw.row_mut(k).scaled_add(xk, &dp);
        }
    }
}

/// Backbone gradients given upstream gradients for each computed view.
/// Per-target work runs under `exec`; accumulation into the weight
/// gradients is serial and in batch order.
pub fn backward(
    params: &ModelParams,
    inputs: &Inputs<'_>,
    batch: &[SamplePair],
    fwd: &Forward,
    view_grads: &ViewTable,
    exec: Execution,
) -> Result<[Array2<f64>; 2]> {
    if fwd.caches.len() != batch.len() {
        return Err(MagError::Dimension(format!(
            "forward pass covered {} targets, batch has {}",
            fwd.caches.len(),
            batch.len()
        )));
    }
    let per_instance = exec.map_range(batch.len(), |i| {
        backward_one(&fwd.caches[i], &batch[i], view_grads, i)
    });
    let mut dw = params
        .backbones
        .each_ref()
        .map(|b| Array2::zeros(b.weight.dim()));
    for (pair, g) in batch.iter().zip(&per_instance) {
        for block in 0..4 {
            let slot = block_slot(block);
            let backbone = block % 2;
            let Some(input) = inputs.slot(slot) else {
                continue;
            };
            let graph = input.graph();
            if let Some(dp) = &g.subgraph[block] {
                let sub = pair.slot(slot).expect("present in forward");
                for (r, &v) in sub.nodes.iter().enumerate() {
                    if sub.is_visible(r) {
                        scatter_outer(&mut dw[backbone], graph.feature_row(v), dp.row(r));
                    }
                }
            }
            if let Some(dp) = &g.node[block] {
                let sub = pair.slot(slot).expect("present in forward");
                scatter_outer(&mut dw[backbone], graph.feature_row(sub.target), dp.view());
            }
        }
    }
    Ok(dw)
}

fn add_view_grad(table: &mut ViewTable, v: ViewId, g: Array2<f64>) {
    match table.get(v) {
        Some(existing) => {
            let sum = existing + &g;
            table.insert(v, sum);
        }
        None => table.insert(v, g),
    }
}

/// Loss of every pair and the combined loss for one batch.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchLoss {
    pub total: f64,
    pub per_pair: Vec<f64>,
}

fn logits(a: &Array2<f64>, b: &Array2<f64>, bw: &Array2<f64>, perm: Option<&[usize]>) -> Vec<f64> {
    let bb = b.dot(&bw.t()); // row i = B · b_i
    (0..a.nrows())
        .map(|i| {
            let ai = perm.map_or(i, |p| p[i]);
            a.row(ai).dot(&bb.row(i))
        })
        .collect()
}

/// Combined loss of a batch under a fixed negative permutation.
pub fn batch_loss(
    params: &ModelParams,
    inputs: &Inputs<'_>,
    batch: &[SamplePair],
    combination: &CombinationConfig,
    perm: &[usize],
    exec: Execution,
) -> Result<BatchLoss> {
    let views = compute_views(params, inputs, batch, &combination.needed_views(), exec)?;
    losses_from_views(params, &views, combination, perm)
}

fn losses_from_views(
    params: &ModelParams,
    views: &ViewTable,
    combination: &CombinationConfig,
    perm: &[usize],
) -> Result<BatchLoss> {
    check_derangement(perm)?;
    let mut per_pair = Vec::with_capacity(combination.len());
    for (k, pair) in combination.pairs().iter().enumerate() {
        let a = views.require(pair.first())?;
        let b = views.require(pair.second())?;
        let bw = &params.discriminators[k].weight;
        let pos: Vec<f64> = logits(a, b, bw, None).into_iter().map(sigmoid).collect();
        let neg: Vec<f64> = logits(a, b, bw, Some(perm))
            .into_iter()
            .map(sigmoid)
            .collect();
        per_pair.push(contrast_bce(&pos, &neg));
    }
    let total = crate::contrast::combine_losses(&per_pair, combination.weights())?;
    Ok(BatchLoss { total, per_pair })
}

/// Combined loss and its exact gradient w.r.t. every parameter matrix.
pub fn loss_and_gradients(
    params: &ModelParams,
    inputs: &Inputs<'_>,
    batch: &[SamplePair],
    combination: &CombinationConfig,
    perm: &[usize],
    exec: Execution,
) -> Result<(BatchLoss, Gradients)> {
    if params.num_pairs() != combination.len() {
        return Err(MagError::Dimension(format!(
            "{} discriminators for {} pairs",
            params.num_pairs(),
            combination.len()
        )));
    }
    if perm.len() != batch.len() {
        return Err(MagError::Dimension(format!(
            "permutation of {} for a batch of {}",
            perm.len(),
            batch.len()
        )));
    }
    let fwd = forward(params, inputs, batch, &combination.needed_views(), exec)?;
    let loss = losses_from_views(params, &fwd.views, combination, perm)?;

    let mut grads = Gradients::zeros_like(params);
    let mut view_grads = ViewTable::default();
    for (k, (pair, &w)) in combination
        .pairs()
        .iter()
        .zip(combination.weights())
        .enumerate()
    {
        let a = fwd.views.require(pair.first())?;
        let b = fwd.views.require(pair.second())?;
        let bw = &params.discriminators[k].weight;
        let pos: Vec<f64> = logits(a, b, bw, None).into_iter().map(sigmoid).collect();
        let neg: Vec<f64> = logits(a, b, bw, Some(perm))
            .into_iter()
            .map(sigmoid)
            .collect();
        let (gp, gn) = contrast_bce_logit_grads(&pos, &neg);
        let n = batch.len();
        let h = params.hidden_dim();
        // ∂ℓ/∂(aᵀBb) = g  ⇒  ∂B += g a bᵀ, ∂a += g B b, ∂b += g Bᵀ a
        let bb = b.dot(&bw.t());
        let ba = a.dot(bw);
        let mut da = Array2::zeros((n, h));
        let mut db = Array2::zeros((n, h));
        let mut left = Array2::zeros((n, h));
        for i in 0..n {
            let (p, q) = (w * gp[i], w * gn[i]);
            let j = perm[i];
            da.row_mut(i).scaled_add(p, &bb.row(i));
            da.row_mut(j).scaled_add(q, &bb.row(i));
            db.row_mut(i).scaled_add(p, &ba.row(i));
            db.row_mut(i).scaled_add(q, &ba.row(j));
            left.row_mut(i).scaled_add(p, &a.row(i));
            left.row_mut(i).scaled_add(q, &a.row(j));
        }
        grads.discriminators[k] = left.t().dot(b);
        add_view_grad(&mut view_grads, pair.first(), da);
        add_view_grad(&mut view_grads, pair.second(), db);
    }
    grads.backbones = backward(params, inputs, batch, &fwd, &view_grads, exec)?;
    Ok((loss, grads))
}
