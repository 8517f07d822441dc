//! Per-channel batch normalization over an `N × C` batch.
//!
//! Normalization uses the biased (1/N) variance. Running statistics are an
//! exponential moving average with weight `momentum` on the new batch and are
//! only touched in train mode.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Mode, Result, Tensor};

pub const DEFAULT_MOMENTUM: f64 = 0.1;
pub const DEFAULT_EPSILON: f64 = 1e-5;

#[derive(Clone, Debug, PartialEq)]
pub struct BatchNormParams {
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub momentum: f64,
    pub epsilon: f64,
    /// Set once running statistics have been estimated or supplied.
    pub populated: bool,
}

/// Per-channel mean and biased variance of one batch.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchStats {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

impl BatchNormParams {
    pub fn new(channels: usize) -> Self {
        BatchNormParams {
            gamma: vec![1.0; channels],
            beta: vec![0.0; channels],
            running_mean: vec![0.0; channels],
            running_var: vec![1.0; channels],
            momentum: DEFAULT_MOMENTUM,
            epsilon: DEFAULT_EPSILON,
            populated: false,
        }
    }

    pub fn channels(&self) -> usize {
        self.gamma.len()
    }

    pub fn set_running_stats(&mut self, mean: Vec<f64>, var: Vec<f64>) -> Result<()> {
        let c = self.channels();
        if mean.len() != c || var.len() != c {
            return Err(Error::shape("running stats", c, mean.len().max(var.len())));
        }
        if var.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::invalid("running variance must be non-negative"));
        }
        self.running_mean = mean;
        self.running_var = var;
        self.populated = true;
        Ok(())
    }

    pub fn update_running(&mut self, stats: &BatchStats) {
        let m = self.momentum;
        for c in 0..self.channels() {
            self.running_mean[c] = (1.0 - m) * self.running_mean[c] + m * stats.mean[c];
            self.running_var[c] = (1.0 - m) * self.running_var[c] + m * stats.var[c];
        }
        self.populated = true;
    }

    fn check(&self, batch: &Tensor) -> Result<()> {
        if batch.rows() == 0 || batch.is_empty() {
            return Err(Error::Empty("batch"));
        }
        if batch.cols() != self.channels() {
            return Err(Error::shape("batch norm channels", self.channels(), batch.cols()));
        }
        Ok(())
    }

    /// Mean and inverse standard deviation used for normalization in `mode`.
    fn scale_terms(&self, batch: &Tensor, mode: Mode) -> Result<(Vec<f64>, Vec<f64>, Option<BatchStats>)> {
        match mode {
            Mode::Train => {
                let stats = batch_stats(batch);
                let inv = stats
                    .var
                    .iter()
                    .map(|v| 1.0 / libm::sqrt(v + self.epsilon))
                    .collect();
                Ok((stats.mean.clone(), inv, Some(stats)))
            }
            Mode::Infer => {
                if !self.populated {
                    return Err(Error::MissingRunningStats);
                }
                let inv = self
                    .running_var
                    .iter()
                    .map(|v| 1.0 / libm::sqrt(v + self.epsilon))
                    .collect();
                Ok((self.running_mean.clone(), inv, None))
            }
        }
    }

    /// Normalizes without touching running statistics. In train mode the
    /// batch statistics are returned so the caller can fold them in later.
    pub fn normalize(&self, batch: &Tensor, mode: Mode) -> Result<(Tensor, Option<BatchStats>)> {
        self.check(batch)?;
        let (mean, inv, stats) = self.scale_terms(batch, mode)?;
        let mut out = batch.clone();
        let c = self.channels();
        for row in out.data_mut().chunks_exact_mut(c) {
            for j in 0..c {
                row[j] = self.gamma[j] * (row[j] - mean[j]) * inv[j] + self.beta[j];
            }
        }
        Ok((out, stats))
    }

    /// Normalizes a single channel value with running statistics.
    pub fn infer_channel(&self, channel: usize, value: f64) -> Result<f64> {
        if !self.populated {
            return Err(Error::MissingRunningStats);
        }
        let inv = 1.0 / libm::sqrt(self.running_var[channel] + self.epsilon);
        Ok(self.gamma[channel] * (value - self.running_mean[channel]) * inv + self.beta[channel])
    }
}

pub fn batch_stats(batch: &Tensor) -> BatchStats {
    let c = batch.cols();
    let n = batch.rows() as f64;
    let mut mean = vec![0.0; c];
    for row in batch.data().chunks_exact(c) {
        for j in 0..c {
            mean[j] += row[j];
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; c];
    for row in batch.data().chunks_exact(c) {
        for j in 0..c {
            let d = row[j] - mean[j];
            var[j] += d * d;
        }
    }
    var.iter_mut().for_each(|v| *v /= n);
    BatchStats { mean, var }
}

/// Forward pass; in train mode the running statistics are updated.
pub fn batchnorm_forward(batch: &Tensor, params: &mut BatchNormParams, mode: Mode) -> Result<Tensor> {
    let (out, stats) = params.normalize(batch, mode)?;
    if let Some(stats) = stats {
        params.update_running(&stats);
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchNormGrads {
    pub input: Tensor,
    pub gamma: Vec<f64>,
    pub beta: Vec<f64>,
}

pub fn batchnorm_backward(
    batch: &Tensor,
    params: &BatchNormParams,
    grad_out: &Tensor,
    mode: Mode,
) -> Result<BatchNormGrads> {
    params.check(batch)?;
    if grad_out.shape() != batch.shape() {
        return Err(Error::shape("batch norm grad_out", batch.len(), grad_out.len()));
    }
    let (mean, inv, _) = params.scale_terms(batch, mode)?;
    let c = params.channels();
    let n = batch.rows() as f64;

    let mut grad_gamma = vec![0.0; c];
    let mut grad_beta = vec![0.0; c];
    for (x_row, g_row) in batch.data().chunks_exact(c).zip(grad_out.data().chunks_exact(c)) {
        for j in 0..c {
            let x_hat = (x_row[j] - mean[j]) * inv[j];
            grad_gamma[j] += g_row[j] * x_hat;
            grad_beta[j] += g_row[j];
        }
    }

    let mut grad_input = Tensor::zeros(batch.shape());
    match mode {
        Mode::Infer => {
            for (gi, g_row) in grad_input.data_mut().chunks_exact_mut(c).zip(grad_out.data().chunks_exact(c)) {
                for j in 0..c {
                    gi[j] = g_row[j] * params.gamma[j] * inv[j];
                }
            }
        }
        Mode::Train => {
            // dx = gamma·inv/N · (N·g − Σg − x̂·Σ(g·x̂))
            for ((gi, x_row), g_row) in grad_input
                .data_mut()
                .chunks_exact_mut(c)
                .zip(batch.data().chunks_exact(c))
                .zip(grad_out.data().chunks_exact(c))
            {
                for j in 0..c {
                    let x_hat = (x_row[j] - mean[j]) * inv[j];
                    gi[j] = params.gamma[j] * inv[j] / n
                        * (n * g_row[j] - grad_beta[j] - x_hat * grad_gamma[j]);
                }
            }
        }
    }
    Ok(BatchNormGrads {
        input: grad_input,
        gamma: grad_gamma,
        beta: grad_beta,
    })
}
