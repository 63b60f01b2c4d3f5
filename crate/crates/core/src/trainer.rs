//! Training loop: batching, per-epoch augmentation refresh, combined loss,
//! one Adam step per batch.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::augment::{AugmentStep, Augmenter};
use crate::contrast::{cyclic_permutation, CombinationConfig, Preset};
use crate::error::{MagError, Result};
use crate::exec::Execution;
use crate::graph::Graph;
use crate::model::{loss_and_gradients, sample_pairs, Inputs, ModelParams};
use crate::nn::{AdamConfig, AdamState};
use crate::rng::{stream, Purpose};

fn default_epochs() -> usize {
    100
}
fn default_lr() -> f64 {
    1e-3
}
fn default_hidden() -> usize {
    64
}
fn default_batch() -> usize {
    300
}
fn default_subgraph() -> usize {
    4
}
fn default_restart() -> f64 {
    0.5
}

/// Training hyperparameters together with the model definition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    #[serde(default = "default_hidden")]
    pub hidden_dim: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_subgraph")]
    pub subgraph_size: usize,
    #[serde(default = "default_restart")]
    pub restart_p: f64,
    pub combination: CombinationConfig,
    #[serde(default)]
    pub augmentation: Vec<AugmentStep>,
    #[serde(default)]
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(combination: CombinationConfig, augmentation: Vec<AugmentStep>) -> Self {
        TrainConfig {
            epochs: default_epochs(),
            lr: default_lr(),
            hidden_dim: default_hidden(),
            batch_size: default_batch(),
            subgraph_size: default_subgraph(),
            restart_p: default_restart(),
            combination,
            augmentation,
            seed: 0,
        }
    }

    pub fn from_preset(preset: Preset) -> Self {
        Self::new(preset.combination(), preset.augmentation())
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(MagError::Config("epochs must be at least 1".into()));
        }
        if self.batch_size < 2 {
            return Err(MagError::Config(
                "batch_size must be at least 2 so every target has a negative".into(),
            ));
        }
        if self.subgraph_size == 0 {
            return Err(MagError::Config("subgraph_size must be at least 1".into()));
        }
        if self.hidden_dim == 0 {
            return Err(MagError::Config("hidden_dim must be at least 1".into()));
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(MagError::Config(format!(
                "lr must be positive, got {}",
                self.lr
            )));
        }
        if !(self.restart_p > 0.0 && self.restart_p <= 1.0) {
            return Err(MagError::Config(format!(
                "restart_p must lie in (0, 1], got {}",
                self.restart_p
            )));
        }
        for step in &self.augmentation {
            step.validate()?;
        }
        if self.combination.uses_augmented() && self.augmentation.is_empty() {
            return Err(MagError::Config(format!(
                "combination {} uses augmented views (7-12) but no augmentation is configured",
                self.combination.label()
            )));
        }
        Ok(())
    }

    /// The augmenter, if the combination needs an augmented graph.
    pub fn augmenter(&self, g: &Graph) -> Result<Option<Augmenter>> {
        if self.combination.uses_augmented() {
            Augmenter::new(g, &self.augmentation).map(Some)
        } else {
            Ok(None)
        }
    }
}

/// A random permutation of `0..n` cut into chunks of `batch_size`; a final
/// chunk of fewer than two nodes joins the previous one.
pub fn make_batches<R: Rng + ?Sized>(
    n: usize,
    batch_size: usize,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>> {
    if n < 2 {
        return Err(MagError::Config(format!(
            "need at least 2 nodes to batch, got {n}"
        )));
    }
    if batch_size < 2 {
        return Err(MagError::Config("batch_size must be at least 2".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut batches: Vec<Vec<usize>> = order.chunks(batch_size).map(<[usize]>::to_vec).collect();
    if batches.len() > 1 && batches.last().is_some_and(|b| b.len() < 2) {
        let tail = batches.pop().expect("non-empty");
        batches.last_mut().expect("at least one batch").extend(tail);
    }
    Ok(batches)
}

/// Cyclic negative permutation for a batch with a random non-zero shift.
pub fn negative_permutation<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Result<Vec<usize>> {
    if len < 2 {
        return Err(MagError::Sampling(format!(
            "batch of {len} has no negatives"
        )));
    }
    cyclic_permutation(len, rng.random_range(1..len))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub loss: f64,
    pub seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochRecord>,
    pub checkpoint: Option<std::path::PathBuf>,
}

impl TrainLog {
    pub fn losses(&self) -> Vec<f64> {
        self.epochs.iter().map(|e| e.loss).collect()
    }
}

pub fn train(g: &Graph, cfg: &TrainConfig, exec: Execution) -> Result<(ModelParams, TrainLog)> {
    train_with(g, cfg, exec, |_| {})
}

/// [`train`] with a callback after every epoch.
pub fn train_with<F: FnMut(&EpochRecord)>(
    g: &Graph,
    cfg: &TrainConfig,
    exec: Execution,
    mut on_epoch: F,
) -> Result<(ModelParams, TrainLog)> {
    cfg.validate()?;
    let seed = cfg.seed;
    let mut params = ModelParams::init(g.dim(), cfg.hidden_dim, cfg.combination.len(), seed);
    let mut adam = AdamState::new(
        AdamConfig {
            lr: cfg.lr,
            ..AdamConfig::default()
        },
        &params.shapes(),
    );
    let augmenter = cfg.augmenter(g)?;
    let fixed_aug = match &augmenter {
        Some(a) if !a.is_stochastic() => Some(a.draw(&mut stream(seed, Purpose::Augment, &[0]))?),
        _ => None,
    };
    let mut log = TrainLog::default();
    for epoch in 0..cfg.epochs {
        let start = Instant::now();
        let refreshed = match (&augmenter, &fixed_aug) {
            (Some(a), None) => {
                Some(a.draw(&mut stream(seed, Purpose::Augment, &[epoch as u64]))?)
            }
            _ => None,
        };
        let aug = refreshed.as_ref().or(fixed_aug.as_ref());
        let inputs = Inputs::raw(g, aug);
        let batches = make_batches(
            g.n(),
            cfg.batch_size,
            &mut stream(seed, Purpose::Batches, &[epoch as u64]),
        )?;
        let mut total = 0.0;
        for (j, targets) in batches.iter().enumerate() {
            let batch = sample_pairs(
                g,
                aug,
                targets,
                cfg.subgraph_size,
                cfg.restart_p,
                seed,
                Purpose::Sample,
                &[epoch as u64],
                exec,
            )?;
            let perm = negative_permutation(
                targets.len(),
                &mut stream(seed, Purpose::Negatives, &[epoch as u64, j as u64]),
            )?;
            let (loss, grads) =
                loss_and_gradients(&params, &inputs, &batch, &cfg.combination, &perm, exec)?;
            if !loss.total.is_finite() {
                return Err(MagError::Numerical(format!(
                    "non-finite loss {} at epoch {epoch}, batch {j} (per-pair {:?})",
                    loss.total, loss.per_pair
                )));
            }
            adam.step(&mut params.matrices_mut(), &grads.matrices())?;
            total += loss.total;
        }
        let record = EpochRecord {
            epoch: epoch + 1,
            loss: total / batches.len() as f64,
            seconds: start.elapsed().as_secs_f64(),
        };
        on_epoch(&record);
        log.epochs.push(record);
    }
    Ok((params, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn batch_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let b = make_batches(600, 300, &mut rng).unwrap();
        assert_eq!(b.iter().map(Vec::len).collect::<Vec<_>>(), vec![300, 300]);
        let b = make_batches(301, 300, &mut rng).unwrap();
        assert_eq!(b.iter().map(Vec::len).collect::<Vec<_>>(), vec![301]);
        let b = make_batches(7, 3, &mut rng).unwrap();
        assert_eq!(b.iter().map(Vec::len).collect::<Vec<_>>(), vec![3, 4]);
        let mut all: Vec<usize> = b.concat();
        all.sort_unstable();
        assert_eq!(all, (0..7).collect::<Vec<_>>());
        assert!(make_batches(1, 300, &mut rng).is_err());
    }

    #[test]
    fn batching_is_seeded() {
        let a = make_batches(50, 8, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        let b = make_batches(50, 8, &mut ChaCha8Rng::seed_from_u64(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn config_validation() {
        let mut cfg = TrainConfig::from_preset(Preset::Cola);
        assert!(cfg.validate().is_ok());
        cfg.epochs = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = TrainConfig::from_preset(Preset::LMag);
        assert!(cfg.validate().is_ok());
        cfg.augmentation.clear();
        assert!(matches!(cfg.validate(), Err(MagError::Config(_))));
    }

    #[test]
    fn config_json_defaults() {
        let cfg: TrainConfig =
            serde_json::from_str(r#"{"combination": {"combination": [[1,3]], "weights": [1.0]}}"#)
                .unwrap();
        assert_eq!(cfg, TrainConfig::from_preset(Preset::Cola));
        assert!(serde_json::from_str::<TrainConfig>(
            r#"{"combination": {"combination": [[1,3]], "weights": [1.0]}, "epoch": 3}"#
        )
        .is_err());
    }
}
