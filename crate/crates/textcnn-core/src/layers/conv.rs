//! Valid (unpadded) 1-D convolution over the time axis.
//!
//! Inputs are `T × C` matrices: one row per word position, one column per
//! channel. A kernel of window `h` sees `h` consecutive rows, which in
//! row-major layout is a contiguous slice of length `h·C`. Kernel weights are
//! stored in the same `h × C` row-major order so that each output position is
//! a single dot product.

use alloc::vec;
use alloc::vec::Vec;

use crate::tensor::{axpy, dot};
use crate::{Error, Result, Tensor};

/// A single convolution kernel.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvKernelParams {
    pub window: usize,
    pub in_channels: usize,
    /// `window × in_channels`, row-major.
    pub weights: Vec<f64>,
    pub bias: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvKernelGrads {
    pub input: Tensor,
    pub weights: Vec<f64>,
    pub bias: f64,
}

fn check_input(input: &Tensor, window: usize, in_channels: usize) -> Result<usize> {
    if input.cols() != in_channels {
        return Err(Error::shape("conv input channels", in_channels, input.cols()));
    }
    if input.rows() < window {
        return Err(Error::InputShorterThanWindow {
            len: input.rows(),
            window,
        });
    }
    Ok(input.rows() - window + 1)
}

pub fn conv_valid_forward(input: &Tensor, params: &ConvKernelParams) -> Result<Vec<f64>> {
    let positions = check_input(input, params.window, params.in_channels)?;
    let span = params.window * params.in_channels;
    if params.weights.len() != span {
        return Err(Error::shape("conv weights", span, params.weights.len()));
    }
    Ok((0..positions)
        .map(|p| params.bias + dot(&params.weights, input.rows_slice(p, params.window)))
        .collect())
}

pub fn conv_valid_backward(
    input: &Tensor,
    params: &ConvKernelParams,
    grad_out: &[f64],
) -> Result<ConvKernelGrads> {
    let positions = check_input(input, params.window, params.in_channels)?;
    if grad_out.len() != positions {
        return Err(Error::shape("conv grad_out", positions, grad_out.len()));
    }
    let span = params.window * params.in_channels;
    let c = params.in_channels;
    let mut grad_input = Tensor::zeros(&[input.rows(), c]);
    let mut grad_weights = vec![0.0; span];
    for (p, &g) in grad_out.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        axpy(g, input.rows_slice(p, params.window), &mut grad_weights);
        axpy(g, &params.weights, &mut grad_input.data_mut()[p * c..p * c + span]);
    }
    Ok(ConvKernelGrads {
        input: grad_input,
        weights: grad_weights,
        bias: grad_out.iter().sum(),
    })
}

/// A bank of `out_channels` kernels sharing a window and input width.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv1d {
    window: usize,
    in_channels: usize,
    /// `out_channels × (window · in_channels)`.
    weights: Tensor,
    bias: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvGrads {
    pub input: Option<Tensor>,
    pub weights: Tensor,
    pub bias: Vec<f64>,
}

impl Conv1d {
    pub fn zeros(window: usize, in_channels: usize, out_channels: usize) -> Self {
        Conv1d {
            window,
            in_channels,
            weights: Tensor::zeros(&[out_channels, window * in_channels]),
            bias: vec![0.0; out_channels],
        }
    }

    pub fn from_parts(window: usize, in_channels: usize, weights: Tensor, bias: Vec<f64>) -> Result<Self> {
        let span = window * in_channels;
        if weights.cols() != span {
            return Err(Error::shape("conv bank weights", span, weights.cols()));
        }
        if weights.rows() != bias.len() {
            return Err(Error::shape("conv bank bias", weights.rows(), bias.len()));
        }
        Ok(Conv1d {
            window,
            in_channels,
            weights,
            bias,
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    pub fn in_channels(&self) -> usize {
        self.in_channels
    }

    pub fn out_channels(&self) -> usize {
        self.bias.len()
    }

    pub fn weights(&self) -> &Tensor {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut Tensor {
        &mut self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    pub fn kernel(&self, k: usize) -> ConvKernelParams {
        ConvKernelParams {
            window: self.window,
            in_channels: self.in_channels,
            weights: self.weights.row(k).to_vec(),
            bias: self.bias[k],
        }
    }

    pub fn set_kernel(&mut self, k: usize, params: &ConvKernelParams) -> Result<()> {
        if params.window != self.window || params.in_channels != self.in_channels {
            return Err(Error::invalid("kernel geometry differs from its bank"));
        }
        self.weights.row_mut(k).copy_from_slice(&params.weights);
        self.bias[k] = params.bias;
        Ok(())
    }

    /// Responses of every kernel at one position; returns `out_channels` values.
    pub fn forward_at(&self, input: &Tensor, position: usize) -> Result<Vec<f64>> {
        let positions = check_input(input, self.window, self.in_channels)?;
        if position >= positions {
            return Err(Error::invalid("conv position out of range"));
        }
        let slice = input.rows_slice(position, self.window);
        Ok((0..self.out_channels())
            .map(|k| self.bias[k] + dot(self.weights.row(k), slice))
            .collect())
    }

    /// Returns a `(T - h + 1) × out_channels` matrix.
    pub fn forward(&self, input: &Tensor) -> Result<Tensor> {
        let positions = check_input(input, self.window, self.in_channels)?;
        let out = self.out_channels();
        let mut data = Vec::with_capacity(positions * out);
        for p in 0..positions {
            let slice = input.rows_slice(p, self.window);
            for k in 0..out {
                data.push(self.bias[k] + dot(self.weights.row(k), slice));
            }
        }
        Tensor::matrix(positions, out, data)
    }

    /// Accumulates weight and bias gradients into `grads` and returns the
    /// input gradient when asked for.
    pub fn backward_into(
        &self,
        input: &Tensor,
        grad_out: &Tensor,
        grads: &mut ConvGrads,
        want_input: bool,
    ) -> Result<Option<Tensor>> {
        let positions = check_input(input, self.window, self.in_channels)?;
        let out = self.out_channels();
        if grad_out.rows() != positions || grad_out.cols() != out {
            return Err(Error::shape("conv grad_out", positions * out, grad_out.len()));
        }
        let c = self.in_channels;
        let span = self.window * c;
        let mut grad_input = want_input.then(|| Tensor::zeros(&[input.rows(), c]));
        for p in 0..positions {
            let slice = input.rows_slice(p, self.window);
            let g_row = grad_out.row(p);
            for (k, &g) in g_row.iter().enumerate() {
                if g == 0.0 {
                    continue;
                }
                grads.bias[k] += g;
                axpy(g, slice, grads.weights.row_mut(k));
                if let Some(gi) = grad_input.as_mut() {
                    axpy(g, self.weights.row(k), &mut gi.data_mut()[p * c..p * c + span]);
                }
            }
        }
        Ok(grad_input)
    }

    pub fn backward(&self, input: &Tensor, grad_out: &Tensor, want_input: bool) -> Result<ConvGrads> {
        let mut grads = self.zero_grads();
        grads.input = self.backward_into(input, grad_out, &mut grads, want_input)?;
        Ok(grads)
    }

    pub fn zero_grads(&self) -> ConvGrads {
        ConvGrads {
            input: None,
            weights: Tensor::zeros(self.weights.shape()),
            bias: vec![0.0; self.out_channels()],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn kernel(window: usize, in_channels: usize, weights: Vec<f64>, bias: f64) -> ConvKernelParams {
        ConvKernelParams {
            window,
            in_channels,
            weights,
            bias,
        }
    }

    #[test]
    fn all_ones_kernel_sums_entries() {
        let input = Tensor::from_rows(&[[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
        let out = conv_valid_forward(&input, &kernel(3, 2, vec![1.0; 6], 0.0)).unwrap();
        assert_eq!(out, vec![4.0]);
    }

    #[test]
    fn sliding_window_sums() {
        let input = Tensor::from_rows(&[[1.0], [2.0], [3.0], [4.0]]).unwrap();
        let out = conv_valid_forward(&input, &kernel(3, 1, vec![1.0; 3], 0.0)).unwrap();
        assert_eq!(out, vec![6.0, 9.0]);
    }

    #[test]
    fn zero_kernel_outputs_bias() {
        let input = Tensor::from_rows(&[[0.3, -1.0], [2.0, 5.0], [1.0, 1.0], [7.0, 0.1]]).unwrap();
        let out = conv_valid_forward(&input, &kernel(2, 2, vec![0.0; 4], -0.75)).unwrap();
        assert_eq!(out, vec![-0.75; 3]);
    }

    #[test]
    fn short_input_is_rejected() {
        let input = Tensor::from_rows(&[[1.0], [2.0]]).unwrap();
        let err = conv_valid_forward(&input, &kernel(3, 1, vec![1.0; 3], 0.0)).unwrap_err();
        assert!(matches!(err, Error::InputShorterThanWindow { len: 2, window: 3 }));
        assert!(alloc::format!("{err}").contains("input shorter than window"));
    }

    #[test]
    fn channel_mismatch_is_rejected() {
        let input = Tensor::from_rows(&[[1.0], [2.0], [3.0]]).unwrap();
        assert!(matches!(
            conv_valid_forward(&input, &kernel(3, 2, vec![1.0; 6], 0.0)),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn backward_of_zero_grad_is_zero() {
        let input = Tensor::from_rows(&[[1.0, 2.0], [3.0, 4.0], [5.0, 6.0], [7.0, 8.0]]).unwrap();
        let k = kernel(3, 2, vec![0.5; 6], 1.0);
        let g = conv_valid_backward(&input, &k, &[0.0, 0.0]).unwrap();
        assert!(g.input.data().iter().all(|&v| v == 0.0));
        assert!(g.weights.iter().all(|&v| v == 0.0));
        assert_eq!(g.bias, 0.0);
    }

    #[test]
    fn single_position_weight_grad_is_scaled_input() {
        let input = Tensor::from_rows(&[[1.0, -2.0], [3.0, 0.5], [4.0, 6.0]]).unwrap();
        let k = kernel(3, 2, vec![0.1; 6], 0.0);
        let g = conv_valid_backward(&input, &k, &[2.5]).unwrap();
        let expected: Vec<f64> = input.data().iter().map(|v| 2.5 * v).collect();
        assert_eq!(g.weights, expected);
        assert!(conv_valid_backward(&input, &k, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn bank_matches_single_kernel_path() {
        let input = Tensor::from_rows(&[[1.0, 2.0], [0.0, -1.0], [3.0, 1.0], [2.0, 2.0]]).unwrap();
        let weights = Tensor::from_rows(&[[1.0, 0.0, 0.5, -1.0], [0.25, 0.25, 2.0, 1.0]]).unwrap();
        let bank = Conv1d::from_parts(2, 2, weights, vec![0.1, -0.2]).unwrap();
        let out = bank.forward(&input).unwrap();
        for k in 0..2 {
            let single = conv_valid_forward(&input, &bank.kernel(k)).unwrap();
            for (p, v) in single.iter().enumerate() {
                assert_eq!(out.get(p, k), *v);
            }
        }
        assert_eq!(bank.forward_at(&input, 2).unwrap(), out.row(2).to_vec());
    }
}
