//! Layer primitives with explicit forward and backward passes.

mod activation;
mod batchnorm;
mod conv;
mod dense;

pub use activation::{
    dropout, dropout_backward, dropout_seeded, maxpool_time, maxpool_time_backward, relu, relu_backward,
    relu_in_place,
};
pub use batchnorm::{
    batch_stats, batchnorm_backward, batchnorm_forward, BatchNormGrads, BatchNormParams, BatchStats,
    DEFAULT_EPSILON, DEFAULT_MOMENTUM,
};
pub use conv::{conv_valid_backward, conv_valid_forward, Conv1d, ConvGrads, ConvKernelGrads, ConvKernelParams};
pub use dense::{argmax, dense_logits, dense_softmax_xent, softmax, SoftmaxXent};
