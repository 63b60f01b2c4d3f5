//! The twelve-view combination pool, contrast scales, per-pair losses and
//! their weighted combination.
//!
//! Views are numbered in blocks of three. The block selects the
//! (graph, backbone) slot: (original, GNN-1), (original, GNN-2),
//! (augmented, GNN-1), (augmented, GNN-2). Inside a block, offsets 1, 2 and 3
//! are the subgraph readout, the masked target row, and the plain node
//! embedding. So `[1,3]` is the node-subgraph contrast on the original graph
//! and `[4,9]` contrasts the GNN-2 subgraph of the original graph with the
//! GNN-1 node embedding of the augmented graph.

use std::collections::BTreeSet;
use std::fmt;

use ndarray::{Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::augment::AugmentStep;
use crate::error::{MagError, Result};
use crate::nn::{bilinear_score, contrast_bce, DiscriminatorParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GraphSlot {
    Original,
    Augmented,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Backbone {
    First,
    Second,
}

impl Backbone {
    pub fn index(self) -> usize {
        match self {
            Backbone::First => 0,
            Backbone::Second => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ViewKind {
    Subgraph,
    MaskedNode,
    Node,
}

/// Decoded meaning of a view id.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ViewSpec {
    pub graph: GraphSlot,
    pub backbone: Backbone,
    pub kind: ViewKind,
}

/// A view id in `1..=12`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct ViewId(u8);

impl TryFrom<u8> for ViewId {
    type Error = MagError;
    fn try_from(id: u8) -> Result<Self> {
        ViewId::new(id)
    }
}

impl From<ViewId> for u8 {
    fn from(v: ViewId) -> u8 {
        v.0
    }
}

impl fmt::Display for ViewId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl ViewId {
    pub const ALL: [ViewId; 12] = [
        ViewId(1),
        ViewId(2),
        ViewId(3),
        ViewId(4),
        ViewId(5),
        ViewId(6),
        ViewId(7),
        ViewId(8),
        ViewId(9),
        ViewId(10),
        ViewId(11),
        ViewId(12),
    ];

    pub fn new(id: u8) -> Result<Self> {
        if (1..=12).contains(&id) {
            Ok(ViewId(id))
        } else {
            Err(MagError::Config(format!("view id {id} outside 1..=12")))
        }
    }

    pub fn get(self) -> u8 {
        self.0
    }

    /// Zero-based position, handy for table indexing.
    pub fn index(self) -> usize {
        self.0 as usize - 1
    }

    pub fn encode(spec: ViewSpec) -> ViewId {
        let graph = match spec.graph {
            GraphSlot::Original => 0,
            GraphSlot::Augmented => 1,
        };
        let block = 2 * graph + spec.backbone.index() as u8;
        let offset = match spec.kind {
            ViewKind::Subgraph => 1,
            ViewKind::MaskedNode => 2,
            ViewKind::Node => 3,
        };
        ViewId(3 * block + offset)
    }

    pub fn spec(self) -> ViewSpec {
        let block = (self.0 - 1) / 3;
        let kind = match (self.0 - 1) % 3 {
            0 => ViewKind::Subgraph,
            1 => ViewKind::MaskedNode,
            _ => ViewKind::Node,
        };
        ViewSpec {
            graph: if block >= 2 {
                GraphSlot::Augmented
            } else {
                GraphSlot::Original
            },
            backbone: if block.is_multiple_of(2) {
                Backbone::First
            } else {
                Backbone::Second
            },
            kind,
        }
    }
}

pub fn decode_view(id: u8) -> Result<ViewSpec> {
    ViewId::new(id).map(ViewId::spec)
}

/// Contrast scale of a pair, determined by the two view kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scale {
    /// Plain node embedding against a subgraph readout.
    NodeSubgraph,
    /// Two node-level views (plain or masked).
    NodeNode,
    SubgraphSubgraph,
    /// Masked target row against a subgraph readout.
    MaskedNodeSubgraph,
}

impl Scale {
    pub const ALL: [Scale; 4] = [
        Scale::NodeSubgraph,
        Scale::NodeNode,
        Scale::SubgraphSubgraph,
        Scale::MaskedNodeSubgraph,
    ];

    pub fn classify(a: ViewKind, b: ViewKind) -> Scale {
        use ViewKind::*;
        match (a, b) {
            (Subgraph, Subgraph) => Scale::SubgraphSubgraph,
            (Subgraph, Node) | (Node, Subgraph) => Scale::NodeSubgraph,
            (Subgraph, MaskedNode) | (MaskedNode, Subgraph) => Scale::MaskedNodeSubgraph,
            _ => Scale::NodeNode,
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            Scale::NodeSubgraph => "N-NS",
            Scale::NodeNode => "NN",
            Scale::SubgraphSubgraph => "SS",
            Scale::MaskedNodeSubgraph => "M-NS",
        }
    }
}

/// An unordered pair of distinct views, stored smaller id first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContrastPair {
    first: ViewId,
    second: ViewId,
}

impl ContrastPair {
    pub fn new(a: u8, b: u8) -> Result<Self> {
        let (a, b) = (ViewId::new(a)?, ViewId::new(b)?);
        if a == b {
            return Err(MagError::Config(format!(
                "pair [{a},{b}] contrasts a view with itself"
            )));
        }
        Ok(ContrastPair {
            first: a.min(b),
            second: a.max(b),
        })
    }

    pub fn first(self) -> ViewId {
        self.first
    }

    pub fn second(self) -> ViewId {
        self.second
    }

    pub fn scale(self) -> Scale {
        Scale::classify(self.first.spec().kind, self.second.spec().kind)
    }

    pub fn uses_augmented(self) -> bool {
        [self.first, self.second]
            .iter()
            .any(|v| v.spec().graph == GraphSlot::Augmented)
    }
}

impl fmt::Display for ContrastPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{},{}]", self.first, self.second)
    }
}

/// Weighted list of contrast pairs defining one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawCombination", into = "RawCombination")]
pub struct CombinationConfig {
    pairs: Vec<ContrastPair>,
    weights: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCombination {
    combination: Vec<[u8; 2]>,
    weights: Vec<f64>,
}

impl TryFrom<RawCombination> for CombinationConfig {
    type Error = MagError;
    fn try_from(r: RawCombination) -> Result<Self> {
        CombinationConfig::new(
            &r.combination
                .iter()
                .map(|p| (p[0], p[1]))
                .collect::<Vec<_>>(),
            &r.weights,
        )
    }
}

impl From<CombinationConfig> for RawCombination {
    fn from(c: CombinationConfig) -> Self {
        RawCombination {
            combination: c.pairs.iter().map(|p| [p.first.0, p.second.0]).collect(),
            weights: c.weights,
        }
    }
}

impl CombinationConfig {
    pub fn new(pairs: &[(u8, u8)], weights: &[f64]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(MagError::Config(
                "combination needs at least one pair".into(),
            ));
        }
        if pairs.len() != weights.len() {
            return Err(MagError::Config(format!(
                "{} pairs but {} weights",
                pairs.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(MagError::Config(
                "weights must be finite and non-negative".into(),
            ));
        }
        if weights.iter().sum::<f64>() <= 0.0 {
            return Err(MagError::Config("weights must not all be zero".into()));
        }
        let pairs = pairs
            .iter()
            .map(|&(a, b)| ContrastPair::new(a, b))
            .collect::<Result<Vec<_>>>()?;
        let distinct: BTreeSet<_> = pairs.iter().collect();
        if distinct.len() != pairs.len() {
            return Err(MagError::Config("combination lists a pair twice".into()));
        }
        Ok(CombinationConfig {
            pairs,
            weights: weights.to_vec(),
        })
    }

    /// Equal unit weights.
    pub fn uniform(pairs: &[(u8, u8)]) -> Result<Self> {
        Self::new(pairs, &vec![1.0; pairs.len()])
    }

    pub fn pairs(&self) -> &[ContrastPair] {
        &self.pairs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn uses_augmented(&self) -> bool {
        self.pairs.iter().any(|p| p.uses_augmented())
    }

    pub fn needed_views(&self) -> BTreeSet<ViewId> {
        self.pairs
            .iter()
            .flat_map(|p| [p.first, p.second])
            .collect()
    }

    /// e.g. `[1,3]+[4,6]`.
    pub fn label(&self) -> String {
        self.pairs
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("+")
    }
}

/// Named combinations reproducing known models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Cola,
    Anemone,
    Gradate,
    LMag,
    MMag,
    #[serde(rename = "m-s")]
    MS,
    #[serde(rename = "m-sg")]
    MSG,
    #[serde(rename = "m-g")]
    MG,
}

impl Preset {
    pub const ALL: [Preset; 8] = [
        Preset::Cola,
        Preset::Anemone,
        Preset::Gradate,
        Preset::LMag,
        Preset::MMag,
        Preset::MS,
        Preset::MSG,
        Preset::MG,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Cola => "cola",
            Preset::Anemone => "anemone",
            Preset::Gradate => "gradate",
            Preset::LMag => "l-mag",
            Preset::MMag => "m-mag",
            Preset::MS => "m-s",
            Preset::MSG => "m-sg",
            Preset::MG => "m-g",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == name)
            .ok_or_else(|| MagError::Config(format!("unknown preset {name:?}")))
    }

    pub fn combination(self) -> CombinationConfig {
        let (pairs, weights): (&[(u8, u8)], &[f64]) = match self {
            Preset::Cola => (&[(1, 3)], &[1.0]),
            Preset::Anemone | Preset::MSG => (&[(1, 3), (5, 6)], &[0.3, 0.7]),
            Preset::Gradate => (&[(1, 3), (7, 9), (2, 3), (8, 9), (1, 7)], &[1.0; 5]),
            Preset::LMag => (&[(4, 9)], &[1.0]),
            Preset::MMag | Preset::MG => (&[(1, 3), (4, 6)], &[0.3, 0.7]),
            Preset::MS => (&[(1, 3), (2, 3)], &[0.3, 0.7]),
        };
        CombinationConfig::new(pairs, weights).expect("presets are valid")
    }

    /// Augmentation attached to the preset: masked features plus removed
    /// edges at ratio 0.2 when augmented views are used, nothing otherwise.
    pub fn augmentation(self) -> Vec<AugmentStep> {
        if self.combination().uses_augmented() {
            default_augmentation()
        } else {
            Vec::new()
        }
    }
}

/// Masked features followed by removed edges, both at ratio 0.2.
pub fn default_augmentation() -> Vec<AugmentStep> {
    vec![
        AugmentStep::MaskFeatures {
            p: 0.2,
            per_node: false,
        },
        AugmentStep::RemoveEdges { p: 0.2 },
    ]
}

/// Per-view embeddings for a batch: slot `k` holds a `batch × h` matrix for
/// view `k+1` when it was computed.
#[derive(Debug, Clone, Default)]
pub struct ViewTable {
    views: [Option<Array2<f64>>; 12],
}

impl ViewTable {
    pub fn insert(&mut self, id: ViewId, rows: Array2<f64>) {
        self.views[id.index()] = Some(rows);
    }

    pub fn get(&self, id: ViewId) -> Option<&Array2<f64>> {
        self.views[id.index()].as_ref()
    }

    pub fn require(&self, id: ViewId) -> Result<&Array2<f64>> {
        self.get(id)
            .ok_or_else(|| MagError::Config(format!("view {id} was not computed")))
    }

    pub fn computed(&self) -> Vec<ViewId> {
        ViewId::ALL
            .into_iter()
            .filter(|v| self.views[v.index()].is_some())
            .collect()
    }
}

/// `i ↦ (i + shift) mod n`, fixed-point free for `0 < shift < n`.
pub fn cyclic_permutation(n: usize, shift: usize) -> Result<Vec<usize>> {
    if n < 2 || shift.is_multiple_of(n) {
        return Err(MagError::Sampling(format!(
            "cyclic shift {shift} over {n} items has fixed points"
        )));
    }
    Ok((0..n).map(|i| (i + shift) % n).collect())
}

pub fn check_derangement(perm: &[usize]) -> Result<()> {
    if let Some(i) = perm.iter().enumerate().position(|(i, &p)| i == p) {
        return Err(MagError::Sampling(format!(
            "negative permutation maps position {i} to itself"
        )));
    }
    if perm.iter().any(|&p| p >= perm.len()) {
        return Err(MagError::Sampling(
            "negative permutation index out of range".into(),
        ));
    }
    Ok(())
}

/// Positive and negative discriminator scores for one pair:
/// `y_i = σ(a_iᵀ B b_i)` and `ŷ_i = σ(a_{perm(i)}ᵀ B b_i)`, where `a` is the
/// smaller view id.
pub fn pair_scores(
    views: &ViewTable,
    pair: ContrastPair,
    perm: &[usize],
    disc: &DiscriminatorParams,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_derangement(perm)?;
    let a = views.require(pair.first())?;
    let b = views.require(pair.second())?;
    if a.nrows() != perm.len() || b.nrows() != perm.len() {
        return Err(MagError::Dimension(format!(
            "pair {pair}: views have {} and {} rows, permutation has {}",
            a.nrows(),
            b.nrows(),
            perm.len()
        )));
    }
    let score = |x: ArrayView1<'_, f64>, y: ArrayView1<'_, f64>| bilinear_score(x, y, disc);
    let pos = (0..perm.len()).map(|i| score(a.row(i), b.row(i))).collect();
    let neg = (0..perm.len())
        .map(|i| score(a.row(perm[i]), b.row(i)))
        .collect();
    Ok((pos, neg))
}

/// Contrastive loss of one pair with its score batches.
pub fn pair_loss(
    views: &ViewTable,
    pair: ContrastPair,
    perm: &[usize],
    disc: &DiscriminatorParams,
) -> Result<(f64, Vec<f64>, Vec<f64>)> {
    let (pos, neg) = pair_scores(views, pair, perm, disc)?;
    Ok((contrast_bce(&pos, &neg), pos, neg))
}

/// `Σ w_k · loss_k`.
pub fn combine_losses(losses: &[f64], weights: &[f64]) -> Result<f64> {
    if losses.len() != weights.len() {
        return Err(MagError::Dimension(format!(
            "{} losses but {} weights",
            losses.len(),
            weights.len()
        )));
    }
    Ok(losses.iter().zip(weights).map(|(l, w)| l * w).sum())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scale_of(a: u8, b: u8) -> Scale {
        ContrastPair::new(a, b).unwrap().scale()
    }

    #[test]
    fn encode_decode_roundtrip() {
        for v in ViewId::ALL {
            assert_eq!(ViewId::encode(v.spec()), v);
        }
        assert!(decode_view(0).is_err());
        assert!(decode_view(13).is_err());
    }

    #[test]
    fn named_views() {
        let one = decode_view(1).unwrap();
        assert_eq!(
            (one.graph, one.backbone, one.kind),
            (GraphSlot::Original, Backbone::First, ViewKind::Subgraph)
        );
        assert_eq!(decode_view(2).unwrap().kind, ViewKind::MaskedNode);
        assert_eq!(decode_view(3).unwrap().kind, ViewKind::Node);
        let seven = decode_view(7).unwrap();
        assert_eq!(
            (seven.graph, seven.backbone, seven.kind),
            (GraphSlot::Augmented, Backbone::First, ViewKind::Subgraph)
        );
        let nine = decode_view(9).unwrap();
        assert_eq!(
            (nine.graph, nine.backbone),
            (GraphSlot::Augmented, Backbone::First)
        );
        assert_eq!(decode_view(4).unwrap().backbone, Backbone::Second);
        assert_eq!(decode_view(12).unwrap().backbone, Backbone::Second);
    }

    #[test]
    fn scales_of_named_pairs() {
        assert_eq!(scale_of(1, 3), Scale::NodeSubgraph);
        assert_eq!(scale_of(2, 3), Scale::NodeNode);
        assert_eq!(scale_of(5, 6), Scale::NodeNode);
        assert_eq!(scale_of(4, 6), Scale::NodeSubgraph);
        assert_eq!(scale_of(4, 9), Scale::NodeSubgraph);
        assert_eq!(scale_of(3, 4), Scale::NodeSubgraph);
        assert_eq!(scale_of(1, 7), Scale::SubgraphSubgraph);
        assert_eq!(scale_of(7, 9), Scale::NodeSubgraph);
        assert_eq!(scale_of(10, 12), Scale::NodeSubgraph);
        assert_eq!(scale_of(1, 2), Scale::MaskedNodeSubgraph);
    }

    #[test]
    fn pair_order_is_canonical() {
        let p = ContrastPair::new(9, 4).unwrap();
        assert_eq!((p.first().get(), p.second().get()), (4, 9));
        assert!(ContrastPair::new(3, 3).is_err());
    }

    #[test]
    fn combination_validation() {
        assert!(CombinationConfig::new(&[(1, 3)], &[1.0, 2.0]).is_err());
        assert!(CombinationConfig::new(&[(1, 3)], &[0.0]).is_err());
        assert!(CombinationConfig::new(&[(1, 3)], &[-1.0]).is_err());
        assert!(CombinationConfig::new(&[(1, 3), (3, 1)], &[1.0, 1.0]).is_err());
        assert!(CombinationConfig::new(&[], &[]).is_err());
        let c = CombinationConfig::new(&[(1, 3), (4, 6)], &[0.3, 0.7]).unwrap();
        assert_eq!(c.label(), "[1,3]+[4,6]");
        assert!(!c.uses_augmented());
        assert!(Preset::LMag.combination().uses_augmented());
    }

    #[test]
    fn combination_json() {
        let c: CombinationConfig =
            serde_json::from_str(r#"{"combination": [[1,3],[4,6]], "weights": [0.3, 0.7]}"#)
                .unwrap();
        assert_eq!(c, Preset::MMag.combination());
        assert!(serde_json::from_str::<CombinationConfig>(
            r#"{"combination": [[1,13]], "weights": [1]}"#
        )
        .is_err());
    }

    #[test]
    fn presets_resolve() {
        for p in Preset::ALL {
            assert_eq!(Preset::parse(p.name()).unwrap(), p);
        }
        assert_eq!(Preset::Cola.combination().label(), "[1,3]");
        assert_eq!(Preset::LMag.combination().label(), "[4,9]");
        assert_eq!(Preset::MMag.combination().weights(), &[0.3, 0.7]);
        assert_eq!(
            Preset::Gradate.combination().label(),
            "[1,3]+[7,9]+[2,3]+[8,9]+[1,7]"
        );
        assert!(Preset::parse("dominant").is_err());
    }

    #[test]
    fn cyclic_permutation_has_no_fixed_points() {
        assert_eq!(cyclic_permutation(3, 1).unwrap(), vec![1, 2, 0]);
        assert!(cyclic_permutation(3, 3).is_err());
        assert!(cyclic_permutation(1, 1).is_err());
        assert!(check_derangement(&[1, 0, 2]).is_err());
    }

    #[test]
    fn combine_cases() {
        assert_eq!(combine_losses(&[1.7], &[1.0]).unwrap(), 1.7);
        assert!((combine_losses(&[1.0, 2.0], &[0.3, 0.7]).unwrap() - 1.7).abs() < 1e-12);
        assert!(combine_losses(&[1.0], &[1.0, 1.0]).is_err());
    }
}
