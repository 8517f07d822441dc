use alloc::vec::Vec;

use crate::tensor::{axpy, dot};
use crate::{Error, Result, Tensor};

/// Numerically stable softmax (max-subtracted).
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| libm::exp(z - max)).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// `weights · features + bias` for a `|C| × F` weight matrix.
pub fn dense_logits(features: &[f64], weights: &Tensor, bias: &[f64]) -> Result<Vec<f64>> {
    if weights.cols() != features.len() {
        return Err(Error::shape("dense features", weights.cols(), features.len()));
    }
    if weights.rows() != bias.len() {
        return Err(Error::shape("dense bias", weights.rows(), bias.len()));
    }
    Ok((0..weights.rows())
        .map(|c| bias[c] + dot(weights.row(c), features))
        .collect())
}

#[derive(Clone, Debug, PartialEq)]
pub struct SoftmaxXent {
    pub loss: f64,
    pub logits: Vec<f64>,
    pub probs: Vec<f64>,
    pub grad_weights: Tensor,
    pub grad_bias: Vec<f64>,
    pub grad_features: Vec<f64>,
}

/// Dense projection, softmax and cross-entropy against `label`, with exact
/// gradients for all three inputs.
pub fn dense_softmax_xent(features: &[f64], weights: &Tensor, bias: &[f64], label: usize) -> Result<SoftmaxXent> {
    let logits = dense_logits(features, weights, bias)?;
    if label >= logits.len() {
        return Err(Error::LabelOutOfRange {
            label,
            classes: logits.len(),
        });
    }
    let probs = softmax(&logits);
    let loss = -libm::log(probs[label]);

    let mut grad_bias = probs.clone();
    grad_bias[label] -= 1.0;
    let mut grad_weights = Tensor::zeros(weights.shape());
    let mut grad_features = alloc::vec![0.0; features.len()];
    for (c, &g) in grad_bias.iter().enumerate() {
        axpy(g, features, grad_weights.row_mut(c));
        axpy(g, weights.row(c), &mut grad_features);
    }
    Ok(SoftmaxXent {
        loss,
        logits,
        probs,
        grad_weights,
        grad_bias,
        grad_features,
    })
}
