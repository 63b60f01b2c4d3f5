use mag_core::contrast::{cyclic_permutation, CombinationConfig};
use mag_core::graph::{Adjacency, Graph};
use mag_core::model::{batch_loss, loss_and_gradients, Inputs, ModelParams, SamplePair};
use mag_core::rng::{stream, Purpose};
use mag_core::sampling::{rwr_sample, Subgraph};
use mag_core::Execution;
use ndarray::Array2;
use proptest::prelude::*;
use rand::Rng;

const N: usize = 6;
const D: usize = 5;
const H: usize = 3;
const M: usize = 3;

fn random_graph(rng: &mut impl Rng) -> Graph {
    let mut edges = Vec::new();
    for u in 0..N {
        for v in (u + 1)..N {
            if rng.random::<f64>() < 0.45 {
                edges.push((u, v));
            }
        }
    }
    let x = Array2::from_shape_simple_fn((N, D), || {
        if rng.random::<f64>() < 0.3 {
            0.0
        } else {
            rng.random_range(-1.0..1.0)
        }
    });
    Graph::new(Adjacency::from_edges(N, edges).unwrap(), x, None).unwrap()
}

struct Case {
    original: Graph,
    augmented: Graph,
    batch: Vec<SamplePair>,
    combination: CombinationConfig,
    perm: Vec<usize>,
    params: ModelParams,
}

fn build_case(seed: u64, combination: CombinationConfig) -> Case {
    let mut rng = stream(seed, Purpose::Sample, &[]);
    let original = random_graph(&mut rng);
    let augmented = random_graph(&mut rng);
    let batch = (0..N)
        .map(|t| {
            let nodes = rwr_sample(original.adjacency(), t, M, 0.5, &mut rng).unwrap();
            SamplePair {
                original: Subgraph::on_nodes(original.adjacency(), nodes.clone()).unwrap(),
                augmented: Some(Subgraph::on_nodes(augmented.adjacency(), nodes).unwrap()),
            }
        })
        .collect();
    let shift = rng.random_range(1..N);
    let mut params = ModelParams::init(D, H, combination.len(), seed);
    // larger weights make the subgraph terms non-trivial at this tiny size
    for m in params.matrices_mut() {
        m.mapv_inplace(|v| 2.0 * v);
    }
    Case {
        original,
        augmented,
        batch,
        perm: cyclic_permutation(N, shift).unwrap(),
        combination,
        params,
    }
}

fn loss_at(case: &Case, params: &ModelParams) -> f64 {
    let inputs = Inputs::raw(&case.original, Some(&case.augmented));
    batch_loss(
        params,
        &inputs,
        &case.batch,
        &case.combination,
        &case.perm,
        Execution::Sequential,
    )
    .unwrap()
    .total
}

fn max_relative_error(case: &Case) -> f64 {
    let inputs = Inputs::raw(&case.original, Some(&case.augmented));
    let (_, grads) = loss_and_gradients(
        &case.params,
        &inputs,
        &case.batch,
        &case.combination,
        &case.perm,
        Execution::Sequential,
    )
    .unwrap();
    let analytic: Vec<Array2<f64>> = grads.matrices().into_iter().cloned().collect();
    let eps = 1e-6;
    let mut worst: f64 = 0.0;
    for (k, g) in analytic.iter().enumerate() {
        let mut numeric = Array2::zeros(g.dim());
        for idx in ndarray::indices(g.dim()) {
            let mut plus = case.params.clone();
            plus.matrices_mut()[k][idx] += eps;
            let mut minus = case.params.clone();
            minus.matrices_mut()[k][idx] -= eps;
            numeric[idx] = (loss_at(case, &plus) - loss_at(case, &minus)) / (2.0 * eps);
        }
        let diff = (g - &numeric).mapv(|v| v * v).sum().sqrt();
        let scale = g
            .mapv(|v| v * v)
            .sum()
            .sqrt()
            .max(numeric.mapv(|v| v * v).sum().sqrt());
        if scale > 1e-9 {
            worst = worst.max(diff / scale);
        } else {
            worst = worst.max(diff);
        }
    }
    worst
}

fn every_view_combination() -> CombinationConfig {
    CombinationConfig::new(
        &[(1, 3), (4, 9), (2, 11), (7, 12), (5, 6)],
        &[0.3, 0.7, 0.5, 1.1, 0.9],
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn analytic_gradients_match_central_differences(seed in any::<u64>()) {
        let case = build_case(seed, every_view_combination());
        let err = max_relative_error(&case);
        prop_assert!(err < 1e-4, "relative gradient error {err}");
    }
}

#[test]
fn gradients_for_named_presets() {
    for (seed, combo) in [
        (1, mag_core::contrast::Preset::Cola.combination()),
        (2, mag_core::contrast::Preset::Gradate.combination()),
        (3, mag_core::contrast::Preset::MMag.combination()),
        (4, mag_core::contrast::Preset::LMag.combination()),
    ] {
        let case = build_case(seed, combo);
        let err = max_relative_error(&case);
        assert!(err < 1e-4, "seed {seed}: relative gradient error {err}");
    }
}

#[test]
fn parallel_and_sequential_gradients_are_identical() {
    let case = build_case(11, every_view_combination());
    let inputs = Inputs::raw(&case.original, Some(&case.augmented));
    let run = |exec| {
        loss_and_gradients(
            &case.params,
            &inputs,
            &case.batch,
            &case.combination,
            &case.perm,
            exec,
        )
        .unwrap()
    };
    assert_eq!(run(Execution::Sequential), run(Execution::Parallel));
}

#[test]
fn every_parameter_matrix_receives_gradient() {
    let case = build_case(5, every_view_combination());
    let inputs = Inputs::raw(&case.original, Some(&case.augmented));
    let (_, grads) = loss_and_gradients(
        &case.params,
        &inputs,
        &case.batch,
        &case.combination,
        &case.perm,
        Execution::Sequential,
    )
    .unwrap();
    for (k, g) in grads.matrices().iter().enumerate() {
        assert!(
            g.iter().any(|v| v.abs() > 1e-8),
            "matrix {k} has no gradient"
        );
    }
}
