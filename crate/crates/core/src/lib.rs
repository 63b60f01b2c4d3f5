//! Multi-view graph contrastive anomaly detection.
//!
//! A graph is sampled into small neighbourhoods around each target node,
//! two GCN backbones embed those neighbourhoods on the original and on an
//! augmented graph, and bilinear discriminators contrast selected pairs of the
//! resulting twelve views. Nodes whose views disagree are scored as anomalous.

pub mod augment;
pub mod checkpoint;
pub mod contrast;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod graph;
pub mod injection;
pub mod model;
pub mod nn;
pub mod rng;
pub mod sampling;
pub mod scoring;
pub mod synthetic;
pub mod trainer;

pub use error::{MagError, Result};
pub use exec::Execution;
pub use graph::{Adjacency, AnomalyKind, Graph};
