//! Two-layer TextCNN for sentence classification together with the tooling
//! to look inside it: n-gram probing of every convolutional kernel, kernel
//! labeling, kernel-kernel correlation, activation graphs and bridge
//! detection.
//!
//! The crate is `no_std` and only needs `alloc`. Everything that touches the
//! filesystem (embedding files, checkpoints, reports, the CLI) lives in the
//! `textcnn` companion crate.

#![no_std]

extern crate alloc;

pub mod adam;
pub mod analysis;
pub mod data;
mod error;
pub mod gradcheck;
pub mod init;
pub mod layers;
pub mod model;
mod tensor;

pub use error::{Error, Result};
pub use tensor::Tensor;

/// Whether a layer runs with training behaviour (batch statistics, dropout)
/// or inference behaviour (running statistics, identity dropout).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Train,
    Infer,
}

/// Seeded generator used throughout, re-exported for callers that drive
/// dropout or build reproducible inputs.
pub mod rng {
    pub use rand::SeedableRng;
    pub use rand_chacha::ChaCha8Rng;
}
