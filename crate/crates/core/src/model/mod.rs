//! The multi-entry classification network and its training loop.

pub mod checkpoint;
pub mod config;
pub mod network;
pub mod optimizer;
pub mod train;

pub use checkpoint::{decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, CheckpointHeader};
pub use config::{HiddenSizes, MenetConfig, OptimizerKind};
pub use network::{argmax, cross_entropy, softmax, Activations, BranchSpec, Layout, MenetModel};
pub use optimizer::Optimizer;
pub use train::{accuracy, train, train_with_score, Dataset, EpochRecord, History};
