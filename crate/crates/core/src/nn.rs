//! Numerical building blocks: one-layer GCN, mean readout, bilinear
//! discriminator, contrastive BCE and Adam.

use ndarray::{Array1, Array2, ArrayView1};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{MagError, Result};
use crate::graph::NormalizedAdjacency;

/// Lower clamp applied to scores (and to `1 - score`) inside the log.
pub const SCORE_FLOOR: f64 = 1e-7;

/// GCN weight `W` of shape `d × h`.
#[derive(Debug, Clone, PartialEq)]
pub struct BackboneParams {
    pub weight: Array2<f64>,
}

/// Bilinear weight `B` of shape `h × h`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscriminatorParams {
    pub weight: Array2<f64>,
}

/// Uniform initialization in `±sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Array2<f64> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_simple_fn((rows, cols), || rng.random_range(-bound..=bound))
}

impl BackboneParams {
    pub fn glorot<R: Rng + ?Sized>(d: usize, h: usize, rng: &mut R) -> Self {
        BackboneParams {
            weight: glorot_uniform(d, h, rng),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.weight.nrows()
    }

    pub fn hidden_dim(&self) -> usize {
        self.weight.ncols()
    }
}

impl DiscriminatorParams {
    pub fn glorot<R: Rng + ?Sized>(h: usize, rng: &mut R) -> Self {
        DiscriminatorParams {
            weight: glorot_uniform(h, h, rng),
        }
    }
}

/// `out += x · W` for a single row, skipping zero entries of `x`.
#[inline]
pub fn accumulate_projection(x: ArrayView1<'_, f64>, w: &Array2<f64>, out: &mut [f64]) {
    for (k, &xk) in x.iter().enumerate() {
        if xk != 0.0 {
            let wrow = w.row(k);
            for (o, &wv) in out.iter_mut().zip(wrow.iter()) {
                *o += xk * wv;
            }
        }
    }
}

/// `X · W`, exploiting sparsity of the feature rows.
pub fn project_rows(x: &Array2<f64>, w: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros((x.nrows(), w.ncols()));
    for (r, mut o) in out.rows_mut().into_iter().enumerate() {
        accumulate_projection(x.row(r), w, o.as_slice_mut().expect("standard layout"));
    }
    out
}

pub fn relu_inplace(a: &mut Array2<f64>) {
    a.mapv_inplace(|v| v.max(0.0));
}

/// `relu(Â · X · W)`.
pub fn gcn_forward(
    adj: &NormalizedAdjacency,
    x: &Array2<f64>,
    w: &BackboneParams,
) -> Result<Array2<f64>> {
    if x.nrows() != adj.n() || x.ncols() != w.input_dim() {
        return Err(MagError::Dimension(format!(
            "gcn_forward: adjacency {}×{}, features {}×{}, weight {}×{}",
            adj.n(),
            adj.n(),
            x.nrows(),
            x.ncols(),
            w.weight.nrows(),
            w.weight.ncols()
        )));
    }
    let mut h = adj.matmul(&project_rows(x, &w.weight));
    relu_inplace(&mut h);
    Ok(h)
}

/// `relu(x · W)`: the GCN on a lone node with only its self-loop.
pub fn node_embed(x: ArrayView1<'_, f64>, w: &BackboneParams) -> Result<Array1<f64>> {
    if x.len() != w.input_dim() {
        return Err(MagError::Dimension(format!(
            "node_embed: feature length {} vs weight input dim {}",
            x.len(),
            w.input_dim()
        )));
    }
    let mut z = Array1::zeros(w.hidden_dim());
    accumulate_projection(x, &w.weight, z.as_slice_mut().expect("contiguous"));
    z.mapv_inplace(|v| v.max(0.0));
    Ok(z)
}

/// Column means of `H`.
pub fn readout_mean(h: &Array2<f64>) -> Array1<f64> {
    h.mean_axis(ndarray::Axis(0))
        .expect("readout of an empty subgraph")
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `aᵀ B b`.
pub fn bilinear_logit(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>, bw: &Array2<f64>) -> f64 {
    a.dot(&bw.dot(&b))
}

pub fn bilinear_score(
    a: ArrayView1<'_, f64>,
    b: ArrayView1<'_, f64>,
    disc: &DiscriminatorParams,
) -> f64 {
    sigmoid(bilinear_logit(a, b, &disc.weight))
}

/// `−(1/n) Σ [log y⁺ + log(1 − y⁻)]` with both arguments clamped at
/// [`SCORE_FLOOR`].
pub fn contrast_bce(pos: &[f64], neg: &[f64]) -> f64 {
    assert_eq!(
        pos.len(),
        neg.len(),
        "positive and negative batches differ in size"
    );
    assert!(!pos.is_empty(), "contrast_bce on an empty batch");
    let total: f64 = pos
        .iter()
        .zip(neg)
        .map(|(&yp, &yn)| yp.max(SCORE_FLOOR).ln() + (1.0 - yn).max(SCORE_FLOOR).ln())
        .sum();
    -total / pos.len() as f64
}

/// Derivatives of [`contrast_bce`] w.r.t. the positive and negative logits.
/// Zero wherever the clamp is active.
pub fn contrast_bce_logit_grads(pos: &[f64], neg: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = pos.len() as f64;
    let gp = pos
        .iter()
        .map(|&y| if y > SCORE_FLOOR { -(1.0 - y) / n } else { 0.0 })
        .collect();
    let gn = neg
        .iter()
        .map(|&y| if 1.0 - y > SCORE_FLOOR { y / n } else { 0.0 })
        .collect();
    (gp, gn)
}

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// First/second moment accumulators mirroring a list of parameter matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step: u64,
    first: Vec<Array2<f64>>,
    second: Vec<Array2<f64>>,
}

impl AdamState {
    pub fn new(config: AdamConfig, shapes: &[(usize, usize)]) -> Self {
        AdamState {
            config,
            step: 0,
            first: shapes.iter().map(|&s| Array2::zeros(s)).collect(),
            second: shapes.iter().map(|&s| Array2::zeros(s)).collect(),
        }
    }

    /// One bias-corrected Adam update. Refuses non-finite gradients without
    /// touching any parameter.
    pub fn step(&mut self, params: &mut [&mut Array2<f64>], grads: &[&Array2<f64>]) -> Result<()> {
        if params.len() != self.first.len() || grads.len() != self.first.len() {
            return Err(MagError::Dimension(format!(
                "adam: {} accumulators, {} parameters, {} gradients",
                self.first.len(),
                params.len(),
                grads.len()
            )));
        }
        for (i, g) in grads.iter().enumerate() {
            if g.dim() != self.first[i].dim() || params[i].dim() != self.first[i].dim() {
                return Err(MagError::Dimension(format!(
                    "adam: shape mismatch on parameter {i}"
                )));
            }
            if let Some(bad) = g.iter().find(|v| !v.is_finite()) {
                return Err(MagError::Numerical(format!(
                    "non-finite gradient {bad} in parameter {i}; aborting training"
                )));
            }
        }
        self.step += 1;
        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        let bc1 = 1.0 - beta1.powi(self.step as i32);
        let bc2 = 1.0 - beta2.powi(self.step as i32);
        for (i, p) in params.iter_mut().enumerate() {
            ndarray::Zip::from(&mut **p)
                .and(&mut self.first[i])
                .and(&mut self.second[i])
                .and(grads[i])
                .for_each(|w, m, v, &g| {
                    *m = beta1 * *m + (1.0 - beta1) * g;
                    *v = beta2 * *v + (1.0 - beta2) * g * g;
                    let m_hat = *m / bc1;
                    let v_hat = *v / bc2;
                    *w -= lr * m_hat / (v_hat.sqrt() + eps);
                });
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Adjacency, NormalizedAdjacency};
    use ndarray::array;

    #[test]
    fn gcn_identity_propagation() {
        let adj = NormalizedAdjacency::identity(3);
        let x = array![[1.0, 0.0], [0.5, 2.0], [0.0, 3.0]];
        let w = BackboneParams {
            weight: Array2::eye(2),
        };
        assert_eq!(gcn_forward(&adj, &x, &w).unwrap(), x);
        assert_eq!(
            gcn_forward(&adj, &Array2::zeros((3, 2)), &w).unwrap(),
            Array2::<f64>::zeros((3, 2))
        );
    }

    #[test]
    fn gcn_two_nodes_by_hand() {
        let adj = NormalizedAdjacency::from_adjacency(&Adjacency::from_edges(2, [(0, 1)]).unwrap());
        let x = array![[2.0, 0.0], [0.0, 2.0]];
        let w = BackboneParams {
            weight: Array2::eye(2),
        };
        assert_eq!(
            gcn_forward(&adj, &x, &w).unwrap(),
            array![[1.0, 1.0], [1.0, 1.0]]
        );
    }

    #[test]
    fn gcn_shape_mismatch() {
        let w = BackboneParams {
            weight: Array2::eye(2),
        };
        let err = gcn_forward(
            &NormalizedAdjacency::identity(2),
            &Array2::zeros((2, 3)),
            &w,
        );
        assert!(matches!(err, Err(MagError::Dimension(_))));
    }

    #[test]
    fn node_embed_is_relu_and_matches_single_node_gcn() {
        let w = BackboneParams {
            weight: Array2::eye(3),
        };
        let x = array![1.5, -2.0, 0.25];
        assert_eq!(node_embed(x.view(), &w).unwrap(), array![1.5, 0.0, 0.25]);
        assert_eq!(
            node_embed(Array1::zeros(3).view(), &w).unwrap(),
            Array1::<f64>::zeros(3)
        );

        let w = BackboneParams {
            weight: array![[0.3, -1.1], [2.0, 0.7], [-0.4, 0.9]],
        };
        let z = node_embed(x.view(), &w).unwrap();
        let block = x.clone().into_shape_with_order((1, 3)).unwrap();
        let h = gcn_forward(&NormalizedAdjacency::identity(1), &block, &w).unwrap();
        assert_eq!(z, h.row(0));
    }

    #[test]
    fn readout_cases() {
        assert_eq!(readout_mean(&array![[3.0, 4.0]]), array![3.0, 4.0]);
        assert_eq!(
            readout_mean(&array![[1.0, 2.0], [1.0, 2.0]]),
            array![1.0, 2.0]
        );
        assert_eq!(
            readout_mean(&array![[0.0, 2.0], [2.0, 0.0]]),
            array![1.0, 1.0]
        );
    }

    #[test]
    fn bilinear_cases() {
        let zero = DiscriminatorParams {
            weight: Array2::zeros((2, 2)),
        };
        let eye = DiscriminatorParams {
            weight: Array2::eye(2),
        };
        let a = array![1.0, 0.0];
        assert_eq!(bilinear_score(a.view(), a.view(), &zero), 0.5);
        assert_eq!(bilinear_score(Array1::zeros(2).view(), a.view(), &eye), 0.5);
        assert!((bilinear_score(a.view(), a.view(), &eye) - 0.731_058_578_6).abs() < 1e-9);
    }

    #[test]
    fn bce_cases() {
        assert!((contrast_bce(&[0.5], &[0.5]) - 2.0 * 2f64.ln()).abs() < 1e-12);
        assert!(contrast_bce(&[1.0 - 1e-12], &[1e-12]) < 1e-10);
        let s = sigmoid(1.0);
        assert!((contrast_bce(&[s], &[1.0 - s]) - 0.626_523_6).abs() < 1e-6);
        // clamping keeps the loss finite
        assert!(contrast_bce(&[0.0], &[1.0]).is_finite());
    }

    #[test]
    fn adam_zero_gradient_leaves_params() {
        let mut w = array![[1.0, -2.0]];
        let mut st = AdamState::new(AdamConfig::default(), &[(1, 2)]);
        st.step(&mut [&mut w], &[&Array2::zeros((1, 2))]).unwrap();
        assert_eq!(w, array![[1.0, -2.0]]);
        assert_eq!(st.step, 1);
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut w = array![[0.0, 0.0]];
        let mut st = AdamState::new(AdamConfig::default(), &[(1, 2)]);
        st.step(&mut [&mut w], &[&array![[3.0, -0.5]]]).unwrap();
        // bias-corrected m/sqrt(v) = sign(g) on the first step
        assert!((w[[0, 0]] + 1e-3).abs() < 1e-9);
        assert!((w[[0, 1]] - 1e-3).abs() < 1e-9);
    }

    #[test]
    fn adam_constant_gradient_decreases_monotonically() {
        let mut w = array![[5.0]];
        let mut st = AdamState::new(AdamConfig::default(), &[(1, 1)]);
        let mut prev = w[[0, 0]];
        for _ in 0..100 {
            st.step(&mut [&mut w], &[&array![[0.7]]]).unwrap();
            assert!(w[[0, 0]] < prev);
            prev = w[[0, 0]];
        }
    }

    #[test]
    fn adam_rejects_non_finite() {
        let mut w = array![[1.0]];
        let mut st = AdamState::new(AdamConfig::default(), &[(1, 1)]);
        assert!(matches!(
            st.step(&mut [&mut w], &[&array![[f64::NAN]]]),
            Err(MagError::Numerical(_))
        ));
        assert_eq!(w, array![[1.0]]);
        assert_eq!(st.step, 0);
    }
}
