//! The TextCNN model, its training loop and evaluation.

mod config;
mod network;
mod train;

pub use config::ModelConfig;
pub use network::{BatchForward, Gradients, LossAndGradients, Model, Tower, TowerActivations, TowerStats};
pub use train::{evaluate, predict_all, train, EpochRecord, Trainer};
