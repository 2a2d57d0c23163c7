// Scratch harness for optimizer schedule exploration. Not part of the test
// suite; run with `cargo run --release -p dlfit2-core --example tune`.

use dlfit2_core::dataset::{build_training_set, GenMode, GenOptions};
use dlfit2_core::model::{batch_loss, train, ModelConfig, TrainConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(2);
    let lr: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0.2);
    let epochs: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(200);
    let momentum: f64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(0.0);
    let dim: usize = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(32);
    let batch: usize = args.get(6).and_then(|s| s.parse().ok()).unwrap_or(16);
    let dropout: f64 = args.get(7).and_then(|s| s.parse().ok()).unwrap_or(0.0);
    let augment: bool = args.get(8).map(|s| s == "aug").unwrap_or(false);

    let dataset = build_training_set(&GenOptions {
        mode: GenMode::ExhaustiveComplete,
        n,
        count: 0,
        seed: 0,
        strong_canonical: false,
    })
    .unwrap();
    println!("dataset: {} examples at n={n}", dataset.len());

    let config = TrainConfig {
        model: ModelConfig {
            n,
            dim,
            enc_blocks: if dim >= 64 { 2 } else { 1 },
            heads: 4,
            inducing: if dim >= 64 { 16 } else { 8 },
            pool_seeds: 1,
            ff_hidden: dim * 4,
            ff_layers: 2,
            dropout,
            layer_norm: true,
        },
        epochs,
        batch_size: batch,
        lr,
        weight_decay: 1e-4,
        momentum,
        seed: 0,
        val_fraction: 0.0,
        augment_partial: augment,
        stop_at_train_loss: None,
    };

    let started = std::time::Instant::now();
    let report = train(&config, &dataset).unwrap();
    let clean = batch_loss(&report.params, &dataset).unwrap();
    for stats in report.history.iter().step_by((epochs / 20).max(1)) {
        println!("epoch {:4}  train {:.5}", stats.epoch, stats.train_loss);
    }
    println!(
        "final running {:.5}  clean {:.5}  elapsed {:.1?}",
        report.history.last().unwrap().train_loss,
        clean,
        started.elapsed()
    );
}
