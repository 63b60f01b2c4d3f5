//! The JSON run configuration shared by every subcommand.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use mag_core::augment::AugmentStep;
use mag_core::contrast::{CombinationConfig, Preset};
use mag_core::injection::InjectionSpec;
use mag_core::scoring::ScoreConfig;
use mag_core::trainer::TrainConfig;
use mag_core::{MagError, Result};
use serde::{Deserialize, Serialize};

/// A dataset directory holding `edges.txt`, `features.csv` and optionally
/// `labels.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub dir: PathBuf,
}

impl DatasetSpec {
    pub fn edges(&self) -> PathBuf {
        self.dir.join("edges.txt")
    }

    pub fn features(&self) -> PathBuf {
        self.dir.join("features.csv")
    }

    pub fn labels(&self) -> PathBuf {
        self.dir.join("labels.csv")
    }
}

fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2, 3, 4]
}

fn default_rounds() -> usize {
    256
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub datasets: BTreeMap<String, DatasetSpec>,
    /// Dataset used by single-dataset commands; optional when only one is
    /// listed.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dataset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub injection: Option<InjectionSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub combination: Option<Vec<[u8; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub augmentation: Option<Vec<AugmentStep>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epochs: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lr: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub subgraph_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restart_p: Option<f64>,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    #[serde(default = "default_true")]
    pub refresh_augmentation: bool,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| MagError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| MagError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Checks everything that can be checked without touching data.
    pub fn validate(&self) -> Result<()> {
        if self.datasets.is_empty() {
            return Err(MagError::Config("config lists no datasets".into()));
        }
        if let Some(name) = &self.dataset {
            if !self.datasets.contains_key(name) {
                return Err(MagError::Config(format!("dataset {name:?} is not listed")));
            }
        }
        if self.seeds.is_empty() {
            return Err(MagError::Config("seeds must not be empty".into()));
        }
        if self.rounds == 0 {
            return Err(MagError::Config("rounds must be at least 1".into()));
        }
        self.train_config()?.validate()
    }

    pub fn selected_dataset(&self) -> Result<(&str, &DatasetSpec)> {
        match &self.dataset {
            Some(name) => Ok((name.as_str(), &self.datasets[name])),
            None if self.datasets.len() == 1 => {
                let (k, v) = self.datasets.iter().next().expect("one entry");
                Ok((k.as_str(), v))
            }
            None => Err(MagError::Config(
                "several datasets listed; set \"dataset\" or pass --dataset".into(),
            )),
        }
    }

    fn combination(&self) -> Result<(CombinationConfig, Option<Preset>)> {
        match (&self.preset, &self.combination) {
            (Some(_), Some(_)) => Err(MagError::Config(
                "give either \"preset\" or \"combination\", not both".into(),
            )),
            (Some(name), None) => {
                let preset = Preset::parse(name)?;
                let base = preset.combination();
                let combo = match &self.weights {
                    Some(w) => {
                        let pairs: Vec<(u8, u8)> = base
                            .pairs()
                            .iter()
                            .map(|p| (p.first().get(), p.second().get()))
                            .collect();
                        CombinationConfig::new(&pairs, w)?
                    }
                    None => base,
                };
                Ok((combo, Some(preset)))
            }
            (None, Some(pairs)) => {
                let pairs: Vec<(u8, u8)> = pairs.iter().map(|p| (p[0], p[1])).collect();
                let combo = match &self.weights {
                    Some(w) => CombinationConfig::new(&pairs, w)?,
                    None => CombinationConfig::uniform(&pairs)?,
                };
                Ok((combo, None))
            }
            (None, None) => {
                if self.weights.is_some() {
                    return Err(MagError::Config("\"weights\" without a combination".into()));
                }
                Ok((Preset::Cola.combination(), Some(Preset::Cola)))
            }
        }
    }

    /// Training config: preset or explicit combination plus hyperparameter
    /// overrides. Presets bring their own augmentation unless one is given.
    pub fn train_config(&self) -> Result<TrainConfig> {
        let (combination, preset) = self.combination()?;
        let augmentation = match (&self.augmentation, preset) {
            (Some(a), _) => a.clone(),
            (None, Some(p)) => p.augmentation(),
            (None, None) => Vec::new(),
        };
        let mut cfg = TrainConfig::new(combination, augmentation);
        if let Some(v) = self.epochs {
            cfg.epochs = v;
        }
        if let Some(v) = self.lr {
            cfg.lr = v;
        }
        if let Some(v) = self.hidden_dim {
            cfg.hidden_dim = v;
        }
        if let Some(v) = self.batch_size {
            cfg.batch_size = v;
        }
        if let Some(v) = self.subgraph_size {
            cfg.subgraph_size = v;
        }
        if let Some(v) = self.restart_p {
            cfg.restart_p = v;
        }
        Ok(cfg)
    }

    pub fn score_config(&self) -> ScoreConfig {
        ScoreConfig {
            rounds: self.rounds,
            refresh_augmentation: self.refresh_augmentation,
            seed: 0,
        }
    }

    /// Injection protocol for a named dataset: the configured one, or the
    /// 600-anomaly protocol for `pubmed` and the 150-anomaly one otherwise.
    pub fn injection_for(&self, name: &str) -> InjectionSpec {
        match &self.injection {
            Some(s) => s.clone(),
            None if name.eq_ignore_ascii_case("pubmed") => InjectionSpec::citation_large(),
            None => InjectionSpec::citation_small(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(json: &str) -> Result<RunConfig> {
        let cfg: RunConfig =
            serde_json::from_str(json).map_err(|e| MagError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    const DS: &str = r#""datasets": {"cora": {"dir": "data/cora"}}"#;

    #[test]
    fn presets_expand() {
        let cfg = parse(&format!(r#"{{{DS}, "preset": "m-mag"}}"#)).unwrap();
        let t = cfg.train_config().unwrap();
        assert_eq!(t.combination.label(), "[1,3]+[4,6]");
        assert_eq!(t.combination.weights(), &[0.3, 0.7]);
        let cfg = parse(&format!(r#"{{{DS}, "preset": "l-mag"}}"#)).unwrap();
        assert_eq!(cfg.train_config().unwrap().augmentation.len(), 2);
    }

    #[test]
    fn unknown_keys_and_bad_combinations_are_rejected() {
        assert!(parse(&format!(r#"{{{DS}, "epoch": 3}}"#)).is_err());
        assert!(parse(&format!(r#"{{{DS}, "combination": [[1,9]]}}"#)).is_err());
        assert!(parse(&format!(
            r#"{{{DS}, "combination": [[1,9]], "augmentation": []}}"#
        ))
        .is_err());
        assert!(parse(&format!(
            r#"{{{DS}, "combination": [[1,9]], "augmentation": [{{"op": "remove_edges", "p": 0.2}}]}}"#
        ))
        .is_ok());
        assert!(parse(&format!(
            r#"{{{DS}, "preset": "l-mag", "augmentation": []}}"#
        ))
        .is_err());
        assert!(parse(&format!(r#"{{{DS}, "preset": "nope"}}"#)).is_err());
        assert!(parse(&format!(
            r#"{{{DS}, "preset": "cola", "combination": [[1,3]]}}"#
        ))
        .is_err());
    }

    #[test]
    fn dataset_selection() {
        let cfg = parse(r#"{"datasets": {"a": {"dir": "x"}, "b": {"dir": "y"}}}"#).unwrap();
        assert!(cfg.selected_dataset().is_err());
        assert!(parse(r#"{"datasets": {"a": {"dir": "x"}}, "dataset": "b"}"#).is_err());
        assert_eq!(cfg.injection_for("Pubmed").total(), 600);
        assert_eq!(cfg.injection_for("cora").total(), 150);
    }
}
