//! The permutation-invariant neural learner: tokenizer, autodiff tape,
//! set-attention trunk with per-body-length heads, SGD training, rule
//! decoding, and checkpoint files.

pub mod checkpoint;
pub mod decode;
pub mod graph;
pub mod net;
pub mod tokens;
pub mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointSidecar};
pub use decode::{decode, predict_program, ModelPredictor, DEFAULT_THRESHOLD};
pub use net::{forward, forward_all, HeadOutput, LayerKind, ModelConfig, ModelParams};
pub use tokens::{detokenize, tokenize, TokenSet};
pub use train::{batch_loss, loss_and_grads, train, EpochStats, GradSet, TrainConfig, TrainReport};
