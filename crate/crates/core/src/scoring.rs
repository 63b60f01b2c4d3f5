//! Multi-round inference, per-node anomaly scores and AUC.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::contrast::pair_scores;
use crate::error::{MagError, Result};
use crate::exec::Execution;
use crate::graph::Graph;
use crate::model::{compute_views, sample_pairs, GraphInput, Inputs, ModelParams};
use crate::rng::{stream, Purpose};
use crate::trainer::{make_batches, negative_permutation, TrainConfig};

fn default_rounds() -> usize {
    256
}

fn default_refresh() -> bool {
    true
}

/// Inference settings; everything else comes from the training config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScoreConfig {
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    /// Draw a fresh augmented graph every round (otherwise one for all).
    #[serde(default = "default_refresh")]
    pub refresh_augmentation: bool,
    #[serde(default)]
    pub seed: u64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            rounds: default_rounds(),
            refresh_augmentation: true,
            seed: 0,
        }
    }
}

/// Positive and negative scores for every pair, as `n × R` matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundScores {
    pub positive: Vec<Array2<f64>>,
    pub negative: Vec<Array2<f64>>,
}

/// Runs `R` inference rounds. Each round draws fresh neighbourhoods, fresh
/// negatives and (unless frozen) a fresh augmented graph.
pub fn score_rounds(
    g: &Graph,
    params: &ModelParams,
    train: &TrainConfig,
    cfg: &ScoreConfig,
    exec: Execution,
) -> Result<RoundScores> {
    if cfg.rounds == 0 {
        return Err(MagError::Config("rounds must be at least 1".into()));
    }
    train.validate()?;
    params.check_compatible(g.dim(), &train.combination)?;
    if params.hidden_dim() != train.hidden_dim {
        return Err(MagError::Dimension(format!(
            "parameters have hidden size {}, config says {}",
            params.hidden_dim(),
            train.hidden_dim
        )));
    }
    let combination = &train.combination;
    let needed = combination.needed_views();
    let n = g.n();
    let seed = cfg.seed;
    let augmenter = train.augmenter(g)?;
    let frozen = match &augmenter {
        Some(a) if !(cfg.refresh_augmentation && a.is_stochastic()) => {
            Some(a.draw(&mut stream(seed, Purpose::InferAugment, &[0]))?)
        }
        _ => None,
    };
    let original = GraphInput::projected(g, params);
    let frozen_input = frozen.as_ref().map(|a| GraphInput::projected(a, params));
    let mut positive = vec![Array2::zeros((n, cfg.rounds)); combination.len()];
    let mut negative = positive.clone();
    for r in 0..cfg.rounds {
        let tag = r as u64;
        let fresh = match (&augmenter, &frozen) {
            (Some(a), None) => Some(a.draw(&mut stream(seed, Purpose::InferAugment, &[tag]))?),
            _ => None,
        };
        let aug_graph = fresh.as_ref().or(frozen.as_ref());
        let inputs = Inputs {
            original: original.clone(),
            augmented: match (&fresh, &frozen_input) {
                (Some(a), _) => Some(GraphInput::projected(a, params)),
                (None, Some(f)) => Some(f.clone()),
                (None, None) => None,
            },
        };
        let batches = make_batches(
            n,
            train.batch_size,
            &mut stream(seed, Purpose::InferBatches, &[tag]),
        )?;
        for (j, targets) in batches.iter().enumerate() {
            let batch = sample_pairs(
                g,
                aug_graph,
                targets,
                train.subgraph_size,
                train.restart_p,
                seed,
                Purpose::InferSample,
                &[tag],
                exec,
            )?;
            let perm = negative_permutation(
                targets.len(),
                &mut stream(seed, Purpose::InferNegatives, &[tag, j as u64]),
            )?;
            let views = compute_views(params, &inputs, &batch, &needed, exec)?;
            for (k, pair) in combination.pairs().iter().enumerate() {
                let (pos, neg) = pair_scores(&views, *pair, &perm, &params.discriminators[k])?;
                for (i, &t) in targets.iter().enumerate() {
                    positive[k][[t, r]] = pos[i];
                    negative[k][[t, r]] = neg[i];
                }
            }
        }
    }
    Ok(RoundScores { positive, negative })
}

/// Round statistics of one node under one pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairScore {
    /// Mean of `negative − positive` over rounds.
    pub mean: f64,
    /// Population standard deviation of the same differences.
    pub std: f64,
    /// `mean + std`.
    pub score: f64,
}

pub fn anomaly_score(positive: &[f64], negative: &[f64]) -> Result<PairScore> {
    if positive.is_empty() || positive.len() != negative.len() {
        return Err(MagError::Dimension(format!(
            "need equal, non-empty round records, got {} and {}",
            positive.len(),
            negative.len()
        )));
    }
    let r = positive.len() as f64;
    let mut diffs: Vec<f64> = negative.iter().zip(positive).map(|(n, p)| n - p).collect();
    // a fixed summation order makes the result independent of round order
    diffs.sort_by(f64::total_cmp);
    let mean = diffs.iter().sum::<f64>() / r;
    let var = diffs.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / r;
    let std = var.sqrt();
    Ok(PairScore {
        mean,
        std,
        score: mean + std,
    })
}

/// `Σ_k w_k · f_k` per node.
pub fn combined_score(per_pair: &[Vec<f64>], weights: &[f64]) -> Result<Vec<f64>> {
    if per_pair.len() != weights.len() || per_pair.is_empty() {
        return Err(MagError::Dimension(format!(
            "{} score vectors but {} weights",
            per_pair.len(),
            weights.len()
        )));
    }
    let n = per_pair[0].len();
    if per_pair.iter().any(|s| s.len() != n) {
        return Err(MagError::Dimension("score vectors differ in length".into()));
    }
    Ok((0..n)
        .map(|i| per_pair.iter().zip(weights).map(|(s, w)| w * s[i]).sum())
        .collect())
}

/// Rank-based (Mann–Whitney) AUC; tied scores share their average rank.
pub fn compute_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(MagError::Dimension(format!(
            "{} scores for {} labels",
            scores.len(),
            labels.len()
        )));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(MagError::Numerical("AUC over NaN scores".into()));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    let negatives = labels.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(MagError::Undefined(
            "AUC needs at least one anomalous and one normal node".into(),
        ));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // twice the rank sum keeps every quantity an exact integer
    let mut twice_rank_sum: u128 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1 averaged, doubled
        let twice_avg = (i + 1 + j + 1) as u128;
        for &k in &order[i..=j] {
            if labels[k] {
                twice_rank_sum += twice_avg;
            }
        }
        i = j + 1;
    }
    let p = positives as u128;
    let twice_u = twice_rank_sum - p * (p + 1);
    Ok(twice_u as f64 / (2.0 * positives as f64 * negatives as f64))
}

/// Per-node scores for one trained model.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreReport {
    pub rounds: usize,
    pub seed: u64,
    /// `per_pair[k][i]` for pair `k`, node `i`.
    pub per_pair: Vec<Vec<PairScore>>,
    pub scores: Vec<f64>,
    pub auc: Option<f64>,
}

pub fn summarize(rounds: &RoundScores, weights: &[f64], seed: u64) -> Result<ScoreReport> {
    let per_pair: Vec<Vec<PairScore>> = rounds
        .positive
        .iter()
        .zip(&rounds.negative)
        .map(|(pos, neg)| {
            pos.rows()
                .into_iter()
                .zip(neg.rows())
                .map(|(p, q)| anomaly_score(&p.to_vec(), &q.to_vec()))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let f: Vec<Vec<f64>> = per_pair
        .iter()
        .map(|s| s.iter().map(|x| x.score).collect())
        .collect();
    Ok(ScoreReport {
        rounds: rounds.positive.first().map_or(0, |m| m.ncols()),
        seed,
        scores: combined_score(&f, weights)?,
        per_pair,
        auc: None,
    })
}

/// Scores every node and, when the graph carries labels, the AUC.
pub fn score(
    g: &Graph,
    params: &ModelParams,
    train: &TrainConfig,
    cfg: &ScoreConfig,
    exec: Execution,
) -> Result<ScoreReport> {
    let rounds = score_rounds(g, params, train, cfg, exec)?;
    let mut report = summarize(&rounds, train.combination.weights(), cfg.seed)?;
    if let Some(mask) = g.anomaly_mask() {
        report.auc = match compute_auc(&report.scores, &mask) {
            Ok(a) => Some(a),
            Err(MagError::Undefined(_)) => None,
            Err(e) => return Err(e),
        };
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_cases() {
        let s = anomaly_score(&[1.0; 4], &[0.0; 4]).unwrap();
        assert_eq!(s.score, -1.0);
        let s = anomaly_score(&[0.5; 3], &[0.5; 3]).unwrap();
        assert_eq!(s.score, 0.0);
        let s = anomaly_score(&[0.0, 0.0], &[0.0, 1.0]).unwrap();
        assert_eq!((s.mean, s.std, s.score), (0.5, 0.5, 1.0));
        assert!(anomaly_score(&[], &[]).is_err());
    }

    #[test]
    fn combined_cases() {
        assert_eq!(
            combined_score(&[vec![0.2, 0.4]], &[1.0]).unwrap(),
            vec![0.2, 0.4]
        );
        assert_eq!(
            combined_score(&[vec![0.0], vec![1.0]], &[0.3, 0.7]).unwrap(),
            vec![0.7]
        );
        assert!(combined_score(&[vec![0.0]], &[0.3, 0.7]).is_err());
    }

    #[test]
    fn auc_cases() {
        assert_eq!(
            compute_auc(&[0.1, 0.2, 0.9], &[false, false, true]).unwrap(),
            1.0
        );
        assert_eq!(
            compute_auc(&[0.3; 4], &[false, true, false, true]).unwrap(),
            0.5
        );
        assert_eq!(compute_auc(&[0.9, 0.1], &[false, true]).unwrap(), 0.0);
        assert!(matches!(
            compute_auc(&[0.1, 0.2], &[true, true]),
            Err(MagError::Undefined(_))
        ));
    }
}
