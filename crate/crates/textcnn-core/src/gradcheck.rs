//! Central finite-difference gradient checking.

use alloc::vec::Vec;

use crate::{Error, Result};

/// Central differences `(f(x+eps) - f(x-eps)) / (2 eps)` for every coordinate.
pub fn numeric_gradient<F>(mut f: F, x: &[f64], eps: f64) -> Result<Vec<f64>>
where
    F: FnMut(&[f64]) -> f64,
{
    if !(eps > 0.0) {
        return Err(Error::invalid("finite-difference step must be positive"));
    }
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        probe[i] = x[i] + eps;
        let plus = f(&probe);
        probe[i] = x[i] - eps;
        let minus = f(&probe);
        probe[i] = x[i];
        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite("gradient check evaluation"));
        }
        grad.push((plus - minus) / (2.0 * eps));
    }
    Ok(grad)
}

/// `|a - n| / max(|a|, |n|, 1e-8)`.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(1e-8);
    (analytic - numeric).abs() / denom
}

/// Worst relative error between `analytic` and central differences of `f`
/// at `x`.
pub fn grad_check<F>(f: F, x: &[f64], analytic: &[f64], eps: f64) -> Result<f64>
where
    F: FnMut(&[f64]) -> f64,
{
    if analytic.len() != x.len() {
        return Err(Error::shape("analytic gradient", x.len(), analytic.len()));
    }
    let numeric = numeric_gradient(f, x, eps)?;
    Ok(analytic
        .iter()
        .zip(&numeric)
        .map(|(&a, &n)| relative_error(a, n))
        .fold(0.0, f64::max))
}

/// Randomized gradient checks of every layer's backward pass and of the
/// whole model, each against central differences.
pub mod suite {
    use alloc::vec::Vec;

    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    use super::grad_check;
    use crate::layers::{
        batchnorm_backward, conv_valid_backward, conv_valid_forward, dense_softmax_xent, dropout_backward,
        dropout_seeded, maxpool_time, maxpool_time_backward, relu, relu_backward, BatchNormParams,
        ConvKernelParams,
    };
    use crate::model::{Model, ModelConfig};
    use crate::{Mode, Result, Tensor};

    pub const LAYERS: [&str; 8] = [
        "conv", "batchnorm-train", "batchnorm-infer", "relu", "maxpool", "dropout", "dense-softmax", "model",
    ];

    fn uniform(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-scale..scale)).collect()
    }

    fn weighted_sum(out: &[f64], weights: &[f64]) -> f64 {
        out.iter().zip(weights).map(|(a, b)| a * b).sum()
    }

    /// Worst relative error of one random instance of `layer`.
    pub fn check_layer(layer: &str, seed: u64, eps: f64) -> Result<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        match layer {
            "conv" => conv(&mut rng, eps),
            "batchnorm-train" => batchnorm(&mut rng, eps, Mode::Train),
            "batchnorm-infer" => batchnorm(&mut rng, eps, Mode::Infer),
            "relu" => relu_check(&mut rng, eps),
            "maxpool" => maxpool(&mut rng, eps),
            "dropout" => dropout_check(&mut rng, eps, seed),
            "dense-softmax" => dense(&mut rng, eps),
            "model" => model(seed, eps),
            other => Err(crate::Error::invalid(alloc::format!("unknown layer {other}"))),
        }
    }

    fn conv(rng: &mut ChaCha8Rng, eps: f64) -> Result<f64> {
        let window = rng.gen_range(1..=4);
        let channels = rng.gen_range(1..=4);
        let rows = window + rng.gen_range(0..=4);
        let input = Tensor::matrix(rows, channels, uniform(rng, rows * channels, 1.0))?;
        let params = ConvKernelParams {
            window,
            in_channels: channels,
            weights: uniform(rng, window * channels, 1.0),
            bias: rng.gen_range(-1.0..1.0),
        };
        let r = uniform(rng, rows - window + 1, 1.0);
        let grads = conv_valid_backward(&input, &params, &r)?;

        let f_in = |x: &[f64]| {
            let t = Tensor::matrix(rows, channels, x.to_vec()).unwrap();
            weighted_sum(&conv_valid_forward(&t, &params).unwrap(), &r)
        };
        let e1 = grad_check(f_in, input.data(), grads.input.data(), eps)?;
        let f_w = |w: &[f64]| {
            let p = ConvKernelParams { weights: w.to_vec(), ..params.clone() };
            weighted_sum(&conv_valid_forward(&input, &p).unwrap(), &r)
        };
        let e2 = grad_check(f_w, &params.weights, &grads.weights, eps)?;
        let f_b = |b: &[f64]| {
            let p = ConvKernelParams { bias: b[0], ..params.clone() };
            weighted_sum(&conv_valid_forward(&input, &p).unwrap(), &r)
        };
        let e3 = grad_check(f_b, &[params.bias], &[grads.bias], eps)?;
        Ok(e1.max(e2).max(e3))
    }

    fn batchnorm(rng: &mut ChaCha8Rng, eps: f64, mode: Mode) -> Result<f64> {
        let n = rng.gen_range(2..=6);
        let c = rng.gen_range(1..=4);
        let batch = Tensor::matrix(n, c, uniform(rng, n * c, 2.0))?;
        let mut params = BatchNormParams::new(c);
        params.gamma = uniform(rng, c, 2.0);
        params.beta = uniform(rng, c, 1.0);
        if mode == Mode::Infer {
            let mean = uniform(rng, c, 1.0);
            let var = (0..c).map(|_| rng.gen_range(0.1..2.0)).collect();
            params.set_running_stats(mean, var)?;
        }
        let r = uniform(rng, n * c, 1.0);
        let g = Tensor::matrix(n, c, r.clone())?;
        let grads = batchnorm_backward(&batch, &params, &g, mode)?;

        let eval = |p: &BatchNormParams, x: &[f64]| {
            let t = Tensor::matrix(n, c, x.to_vec()).unwrap();
            weighted_sum(p.normalize(&t, mode).unwrap().0.data(), &r)
        };
        let e1 = grad_check(|x| eval(&params, x), batch.data(), grads.input.data(), eps)?;
        let e2 = grad_check(
            |gm| {
                let mut p = params.clone();
                p.gamma = gm.to_vec();
                eval(&p, batch.data())
            },
            &params.gamma,
            &grads.gamma,
            eps,
        )?;
        let e3 = grad_check(
            |bt| {
                let mut p = params.clone();
                p.beta = bt.to_vec();
                eval(&p, batch.data())
            },
            &params.beta,
            &grads.beta,
            eps,
        )?;
        Ok(e1.max(e2).max(e3))
    }

    /// Values kept away from the kink at 0 so differences never straddle it.
    fn away_from_zero(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n)
            .map(|_| {
                let m = rng.gen_range(0.01..2.0);
                if rng.gen::<bool>() { m } else { -m }
            })
            .collect()
    }

    fn relu_check(rng: &mut ChaCha8Rng, eps: f64) -> Result<f64> {
        let n = rng.gen_range(1..=12);
        let x = Tensor::vector(away_from_zero(rng, n));
        let r = uniform(rng, n, 1.0);
        let g = relu_backward(&x, &Tensor::vector(r.clone()))?;
        grad_check(|v| weighted_sum(relu(&Tensor::vector(v.to_vec())).data(), &r), x.data(), g.data(), eps)
    }

    fn maxpool(rng: &mut ChaCha8Rng, eps: f64) -> Result<f64> {
        let t = rng.gen_range(1..=6);
        let c = rng.gen_range(1..=4);
        // Distinct values spaced well beyond eps so the argmax is stable.
        let mut values: Vec<f64> = (0..t * c).map(|i| i as f64 * 0.1).collect();
        for i in (1..values.len()).rev() {
            values.swap(i, rng.gen_range(0..=i));
        }
        let m = Tensor::matrix(t, c, values)?;
        let r = uniform(rng, c, 1.0);
        let (_, arg) = maxpool_time(&m)?;
        let g = maxpool_time_backward(t, &arg, &r)?;
        grad_check(
            |v| weighted_sum(&maxpool_time(&Tensor::matrix(t, c, v.to_vec()).unwrap()).unwrap().0, &r),
            m.data(),
            g.data(),
            eps,
        )
    }

    fn dropout_check(rng: &mut ChaCha8Rng, eps: f64, seed: u64) -> Result<f64> {
        let n = rng.gen_range(1..=16);
        let keep = rng.gen_range(0.2..1.0);
        let x = uniform(rng, n, 1.0);
        let r = uniform(rng, n, 1.0);
        let (_, mask) = dropout_seeded(&x, keep, seed, Mode::Train)?;
        let g = dropout_backward(&r, &mask, keep);
        grad_check(
            |v| weighted_sum(&dropout_seeded(v, keep, seed, Mode::Train).unwrap().0, &r),
            &x,
            &g,
            eps,
        )
    }

    fn dense(rng: &mut ChaCha8Rng, eps: f64) -> Result<f64> {
        let f = rng.gen_range(1..=6);
        let c = rng.gen_range(2..=5);
        let features = uniform(rng, f, 1.0);
        let w = Tensor::matrix(c, f, uniform(rng, c * f, 1.0))?;
        let b = uniform(rng, c, 0.5);
        let label = rng.gen_range(0..c);
        let out = dense_softmax_xent(&features, &w, &b, label)?;
        let e1 = grad_check(
            |v| dense_softmax_xent(v, &w, &b, label).unwrap().loss,
            &features,
            &out.grad_features,
            eps,
        )?;
        let e2 = grad_check(
            |v| dense_softmax_xent(&features, &Tensor::matrix(c, f, v.to_vec()).unwrap(), &b, label).unwrap().loss,
            w.data(),
            out.grad_weights.data(),
            eps,
        )?;
        let e3 = grad_check(
            |v| dense_softmax_xent(&features, &w, v, label).unwrap().loss,
            &b,
            &out.grad_bias,
            eps,
        )?;
        Ok(e1.max(e2).max(e3))
    }

    /// End-to-end check on a two-sentence batch with embed_dim 4, two
    /// feature maps and a single window of 3, in train mode with dropout.
    pub fn model(seed: u64, eps: f64) -> Result<f64> {
        let config = ModelConfig {
            windows: alloc::vec![3],
            feature_maps: 2,
            embed_dim: 4,
            num_classes: 3,
            seed,
            ..ModelConfig::default()
        };
        let mut m = Model::new(config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        for p in m.trainable_mut() {
            for v in p.iter_mut() {
                *v += rng.gen_range(-0.1..0.1);
            }
        }
        let lens = [rng.gen_range(5..=8), rng.gen_range(5..=8)];
        let inputs: Vec<Tensor> = lens
            .iter()
            .map(|&l| Tensor::matrix(l, 4, uniform(&mut rng, l * 4, 1.0)).unwrap())
            .collect();
        let labels = [rng.gen_range(0..3), rng.gen_range(0..3)];
        let dropout_seed = rng.gen::<u64>();
        let lg = m.loss_and_gradients(
            &inputs,
            &labels,
            Mode::Train,
            Some(&mut ChaCha8Rng::seed_from_u64(dropout_seed)),
        )?;
        let mut worst: f64 = 0.0;
        for t in 0..lg.gradients.tensors.len() {
            let base = m.trainable()[t].to_vec();
            let f = |p: &[f64]| {
                let mut probe = m.clone();
                probe.trainable_mut()[t].copy_from_slice(p);
                probe
                    .loss(&inputs, &labels, Mode::Train, Some(&mut ChaCha8Rng::seed_from_u64(dropout_seed)))
                    .unwrap()
            };
            worst = worst.max(grad_check(f, &base, &lg.gradients.tensors[t], eps)?);
        }
        Ok(worst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_function_is_exact() {
        let w = [0.5, -1.25, 3.0];
        let f = |x: &[f64]| x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>();
        let err = grad_check(f, &[0.1, 0.2, -0.3], &w, 1e-5).unwrap();
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn square_at_one() {
        let g = numeric_gradient(|x| x[0] * x[0], &[1.0], 1e-3).unwrap();
        assert!((g[0] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn doubled_gradient_reports_half() {
        let err = grad_check(|x| x[0] * x[0] * x[0], &[1.3], &[2.0 * 3.0 * 1.69], 1e-5).unwrap();
        assert!((err - 0.5).abs() < 1e-6, "{err}");
    }

    #[test]
    fn non_finite_evaluation_errors() {
        assert_eq!(
            grad_check(|x| libm::sqrt(x[0]), &[0.0], &[0.0], 1e-5).unwrap_err(),
            Error::NonFinite("gradient check evaluation")
        );
        assert!(grad_check(|x| x[0], &[0.0], &[1.0], 0.0).is_err());
    }
}
