//! Central finite-difference validation of the analytic gradients on the
//! real architecture, sampled per layer type. The acceptance suite repeats
//! this at full sample size; here a smaller sample keeps the unit run quick.

use dlfit2_core::dataset::{build_training_set, GenMode, GenOptions};
use dlfit2_core::model::{loss_and_grads, LayerKind, ModelConfig, ModelParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

const EPSILON: f64 = 1e-3;
const RTOL: f64 = 1e-4;
const ATOL: f64 = 1e-8;

pub fn check_gradients(
    config: ModelConfig,
    param_seed: u64,
    sample_seed: u64,
    per_kind: usize,
) -> (usize, usize) {
    let dataset = build_training_set(&GenOptions {
        mode: GenMode::ExhaustiveComplete,
        n: config.n,
        count: 0,
        seed: 0,
        strong_canonical: false,
    })
    .unwrap();
    let batch = &dataset[..4.min(dataset.len())];

    let params = ModelParams::init(config, param_seed).unwrap();
    let (_, grads) = loss_and_grads(&params, batch).unwrap();

    let kinds = params.layer_kinds();
    let mut rng = ChaCha12Rng::seed_from_u64(sample_seed);
    let mut checked = 0;
    let mut failures = 0;
    for kind in [
        LayerKind::Embedding,
        LayerKind::AttnProj,
        LayerKind::AttnBias,
        LayerKind::LayerNorm,
        LayerKind::AttnFeedForward,
        LayerKind::Inducing,
        LayerKind::PoolSeed,
        LayerKind::FeedForward,
        LayerKind::Head,
    ] {
        let tensors: Vec<usize> = kinds
            .iter()
            .enumerate()
            .filter(|(_, k)| **k == kind)
            .map(|(i, _)| i)
            .collect();
        assert!(!tensors.is_empty(), "no tensors of kind {kind:?}");
        let total: usize = tensors.iter().map(|&t| params.tensor_len(t)).sum();
        let sample = per_kind.min(total);
        let mut taken = std::collections::BTreeSet::new();
        while taken.len() < sample {
            let tensor = tensors[rng.gen_range(0..tensors.len())];
            let offset = rng.gen_range(0..params.tensor_len(tensor));
            if !taken.insert((tensor, offset)) {
                continue;
            }
            let analytic = grads.get(tensor, offset);
            let original = params.get_param(tensor, offset);

            let mut plus = params.clone();
            plus.set_param(tensor, offset, original + EPSILON);
            let (loss_plus, _) = loss_and_grads(&plus, batch).unwrap();
            let mut minus = params.clone();
            minus.set_param(tensor, offset, original - EPSILON);
            let (loss_minus, _) = loss_and_grads(&minus, batch).unwrap();
            let numeric = (loss_plus - loss_minus) / (2.0 * EPSILON);

            let tolerance = ATOL + RTOL * analytic.abs().max(numeric.abs());
            if (analytic - numeric).abs() > tolerance {
                eprintln!(
                    "{kind:?} tensor {tensor} offset {offset}: analytic {analytic:.3e} vs numeric {numeric:.3e}"
                );
                failures += 1;
            }
            checked += 1;
        }
    }
    (checked, failures)
}

#[test]
fn analytic_gradients_match_finite_differences() {
    let config = ModelConfig {
        n: 2,
        dim: 16,
        enc_blocks: 1,
        heads: 2,
        inducing: 4,
        pool_seeds: 2,
        ff_hidden: 32,
        ff_layers: 2,
        dropout: 0.0,
        layer_norm: true,
    };
    let (checked, failures) = check_gradients(config, 11, 12, 25);
    assert_eq!(failures, 0, "{failures}/{checked} gradient checks failed");
    assert!(checked >= 9 * 25);
}
