//! The TextCNN stack.
//!
//! Per tower: conv → bn → relu → conv → bn → relu → max-over-time. The pooled
//! vectors of all towers are concatenated, passed through dropout and a dense
//! softmax head. Batch norm in train mode pools statistics over every
//! position of every sentence in the batch.
//!
//! Conv biases are not trained: each conv feeds a batch norm that subtracts
//! the per-channel mean, so the bias has no effect on the output and its
//! gradient is identically zero.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ModelConfig;
use crate::data::EmbeddingTable;
use crate::init::glorot_uniform;
use crate::layers::{
    argmax, batchnorm_backward, dense_logits, dropout, dropout_backward, maxpool_time, relu_in_place, softmax,
    BatchNormParams, BatchStats, Conv1d,
};
use crate::tensor::{axpy, dot};
use crate::{Error, Mode, Result, Tensor};

#[derive(Clone, Debug, PartialEq)]
pub struct Tower {
    pub window: usize,
    pub conv1: Conv1d,
    pub bn1: BatchNormParams,
    pub conv2: Conv1d,
    pub bn2: BatchNormParams,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub towers: Vec<Tower>,
    /// `num_classes × feature_width`.
    pub head_weights: Tensor,
    pub head_bias: Vec<f64>,
    /// Completed training epochs.
    pub epoch: usize,
}

/// Post-bn-relu activations of one tower for every sentence in a batch.
#[derive(Clone, Debug, PartialEq)]
pub struct TowerActivations {
    pub window: usize,
    /// `(T − h + 1) × feature_maps` per sentence.
    pub layer1: Vec<Tensor>,
    /// `(T − 2h + 2) × feature_maps` per sentence.
    pub layer2: Vec<Tensor>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BatchForward {
    pub logits: Vec<Vec<f64>>,
    pub probs: Vec<Vec<f64>>,
    /// Pooled and concatenated features before dropout.
    pub features: Vec<Vec<f64>>,
    pub towers: Vec<TowerActivations>,
}

impl BatchForward {
    pub fn predictions(&self) -> Vec<usize> {
        self.probs.iter().map(|p| argmax(p)).collect()
    }
}

/// Batch statistics of both batch norms in one tower.
#[derive(Clone, Debug, PartialEq)]
pub struct TowerStats {
    pub bn1: Option<BatchStats>,
    pub bn2: Option<BatchStats>,
}

/// Gradients in the order of [`Model::trainable`].
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub tensors: Vec<Vec<f64>>,
}

pub struct LossAndGradients {
    pub loss: f64,
    pub gradients: Gradients,
    pub stats: Vec<TowerStats>,
    pub forward: BatchForward,
}

struct TowerCache {
    /// Stacked conv1 outputs of the whole batch and the row offset of each sentence.
    z1: Tensor,
    offsets1: Vec<usize>,
    z2: Tensor,
    offsets2: Vec<usize>,
    argmax: Vec<Vec<usize>>,
}

struct Cache {
    towers: Vec<TowerCache>,
    masks: Vec<Vec<f64>>,
    dropped: Vec<Vec<f64>>,
}

fn offsets(parts: &[Tensor]) -> Vec<usize> {
    let mut out = Vec::with_capacity(parts.len() + 1);
    let mut acc = 0;
    out.push(0);
    for p in parts {
        acc += p.rows();
        out.push(acc);
    }
    out
}

fn split_rows(stacked: &Tensor, offsets: &[usize]) -> Result<Vec<Tensor>> {
    offsets
        .windows(2)
        .map(|w| Tensor::matrix(w[1] - w[0], stacked.cols(), stacked.rows_slice(w[0], w[1] - w[0]).to_vec()))
        .collect()
}

impl Model {
    /// Fresh model with Glorot-uniform weights, zero biases and unit batch norm.
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let maps = config.feature_maps;
        let mut towers = Vec::with_capacity(config.windows.len());
        for &h in &config.windows {
            let mut conv1 = Conv1d::zeros(h, config.embed_dim, maps);
            glorot_uniform(&mut rng, h * config.embed_dim, h * maps, conv1.weights_mut().data_mut());
            let mut conv2 = Conv1d::zeros(h, maps, maps);
            glorot_uniform(&mut rng, h * maps, h * maps, conv2.weights_mut().data_mut());
            let bn = || {
                let mut bn = BatchNormParams::new(maps);
                bn.momentum = config.bn_momentum;
                bn.epsilon = config.bn_epsilon;
                bn
            };
            towers.push(Tower {
                window: h,
                conv1,
                bn1: bn(),
                conv2,
                bn2: bn(),
            });
        }
        let width = config.feature_width();
        let mut head_weights = Tensor::zeros(&[config.num_classes, width]);
        glorot_uniform(&mut rng, width, config.num_classes, head_weights.data_mut());
        Ok(Model {
            head_bias: vec![0.0; config.num_classes],
            config,
            towers,
            head_weights,
            epoch: 0,
        })
    }

    pub fn tower(&self, window: usize) -> Option<&Tower> {
        self.towers.iter().find(|t| t.window == window)
    }

    /// Embeds a sentence with OOV words as zero rows, right-padded to
    /// [`ModelConfig::min_len`].
    pub fn embed(&self, tokens: &[String], table: &EmbeddingTable) -> Result<Tensor> {
        if table.dim() != self.config.embed_dim {
            return Err(Error::shape("embedding dim", self.config.embed_dim, table.dim()));
        }
        Ok(table.embed_padded(tokens, self.config.min_len()))
    }

    /// Trainable parameters in a fixed order, one slice per tensor.
    pub fn trainable(&self) -> Vec<&[f64]> {
        let mut out: Vec<&[f64]> = Vec::new();
        for t in &self.towers {
            out.push(t.conv1.weights().data());
            out.push(&t.bn1.gamma);
            out.push(&t.bn1.beta);
            out.push(t.conv2.weights().data());
            out.push(&t.bn2.gamma);
            out.push(&t.bn2.beta);
        }
        out.push(self.head_weights.data());
        out.push(&self.head_bias);
        out
    }

    pub fn trainable_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out: Vec<&mut [f64]> = Vec::new();
        for t in &mut self.towers {
            let Tower { conv1, bn1, conv2, bn2, .. } = t;
            out.push(conv1.weights_mut().data_mut());
            out.push(&mut bn1.gamma);
            out.push(&mut bn1.beta);
            out.push(conv2.weights_mut().data_mut());
            out.push(&mut bn2.gamma);
            out.push(&mut bn2.beta);
        }
        out.push(self.head_weights.data_mut());
        out.push(&mut self.head_bias);
        out
    }

    pub fn trainable_names(&self) -> Vec<String> {
        let mut out = Vec::new();
        for t in &self.towers {
            for part in ["conv1.weight", "bn1.gamma", "bn1.beta", "conv2.weight", "bn2.gamma", "bn2.beta"] {
                out.push(format!("tower{}.{}", t.window, part));
            }
        }
        out.push("head.weight".into());
        out.push("head.bias".into());
        out
    }

    fn check_inputs(&self, inputs: &[Tensor]) -> Result<()> {
        if inputs.is_empty() {
            return Err(Error::Empty("batch"));
        }
        let min = self.config.min_len();
        for x in inputs {
            if x.cols() != self.config.embed_dim {
                return Err(Error::shape("input embedding dim", self.config.embed_dim, x.cols()));
            }
            if x.rows() < min {
                return Err(Error::invalid(format!(
                    "unpadded input of length {} (towers need at least {min})",
                    x.rows()
                )));
            }
        }
        Ok(())
    }

    /// Forward pass over a batch of embedded, padded sentences.
    ///
    /// In train mode batch norm uses batch statistics. Dropout is applied only
    /// in train mode and only when `dropout_rng` is given.
    pub fn forward_batch(
        &self,
        inputs: &[Tensor],
        mode: Mode,
        dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<BatchForward> {
        Ok(self.forward_internal(inputs, mode, dropout_rng)?.0)
    }

    /// Single-sentence forward in `mode` (train mode normalizes over the
    /// sentence's own positions and skips dropout).
    pub fn forward(&self, tokens: &[String], table: &EmbeddingTable, mode: Mode) -> Result<BatchForward> {
        let x = self.embed(tokens, table)?;
        self.forward_batch(&[x], mode, None)
    }

    fn forward_internal(
        &self,
        inputs: &[Tensor],
        mode: Mode,
        dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(BatchForward, Cache, Vec<TowerStats>)> {
        self.check_inputs(inputs)?;
        let n = inputs.len();
        let mut features = vec![Vec::with_capacity(self.config.feature_width()); n];
        let mut tower_acts = Vec::with_capacity(self.towers.len());
        let mut tower_caches = Vec::with_capacity(self.towers.len());
        let mut stats = Vec::with_capacity(self.towers.len());

        for tower in &self.towers {
            let z1_parts = inputs
                .iter()
                .map(|x| tower.conv1.forward(x))
                .collect::<Result<Vec<_>>>()?;
            let offsets1 = offsets(&z1_parts);
            let z1 = Tensor::vstack(&z1_parts)?;
            let (mut a1, s1) = tower.bn1.normalize(&z1, mode)?;
            relu_in_place(a1.data_mut());
            let a1_parts = split_rows(&a1, &offsets1)?;

            let z2_parts = a1_parts
                .iter()
                .map(|a| tower.conv2.forward(a))
                .collect::<Result<Vec<_>>>()?;
            let offsets2 = offsets(&z2_parts);
            let z2 = Tensor::vstack(&z2_parts)?;
            let (mut a2, s2) = tower.bn2.normalize(&z2, mode)?;
            relu_in_place(a2.data_mut());
            let a2_parts = split_rows(&a2, &offsets2)?;

            let mut argmaxes = Vec::with_capacity(n);
            for (i, part) in a2_parts.iter().enumerate() {
                let (pooled, arg) = maxpool_time(part)?;
                features[i].extend_from_slice(&pooled);
                argmaxes.push(arg);
            }
            tower_acts.push(TowerActivations {
                window: tower.window,
                layer1: a1_parts,
                layer2: a2_parts,
            });
            tower_caches.push(TowerCache {
                z1,
                offsets1,
                z2,
                offsets2,
                argmax: argmaxes,
            });
            stats.push(TowerStats { bn1: s1, bn2: s2 });
        }

        let keep = self.config.dropout_keep;
        let (dropped, masks) = match (mode, dropout_rng) {
            (Mode::Train, Some(rng)) => {
                let mut dropped = Vec::with_capacity(n);
                let mut masks = Vec::with_capacity(n);
                for f in &features {
                    let (d, m) = dropout(f, keep, rng, Mode::Train)?;
                    dropped.push(d);
                    masks.push(m);
                }
                (dropped, masks)
            }
            _ => (features.clone(), Vec::new()),
        };

        let mut logits = Vec::with_capacity(n);
        let mut probs = Vec::with_capacity(n);
        for d in &dropped {
            let z = dense_logits(d, &self.head_weights, &self.head_bias)?;
            probs.push(softmax(&z));
            logits.push(z);
        }
        let forward = BatchForward {
            logits,
            probs,
            features,
            towers: tower_acts,
        };
        let cache = Cache {
            towers: tower_caches,
            masks,
            dropped,
        };
        Ok((forward, cache, stats))
    }

    /// Mean cross-entropy over the batch and its exact gradient with respect
    /// to every trainable parameter.
    pub fn loss_and_gradients(
        &self,
        inputs: &[Tensor],
        labels: &[usize],
        mode: Mode,
        dropout_rng: Option<&mut ChaCha8Rng>,
    ) -> Result<LossAndGradients> {
        if labels.len() != inputs.len() {
            return Err(Error::shape("labels", inputs.len(), labels.len()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= self.config.num_classes) {
            return Err(Error::LabelOutOfRange {
                label: bad,
                classes: self.config.num_classes,
            });
        }
        let (forward, cache, stats) = self.forward_internal(inputs, mode, dropout_rng)?;
        let n = inputs.len();
        let scale = 1.0 / n as f64;
        let maps = self.config.feature_maps;
        let keep = self.config.dropout_keep;

        let mut loss = 0.0;
        let mut grad_head_w = Tensor::zeros(self.head_weights.shape());
        let mut grad_head_b = vec![0.0; self.head_bias.len()];
        let mut grad_features = Vec::with_capacity(n);
        for i in 0..n {
            let p = &forward.probs[i];
            loss -= libm::log(p[labels[i]]);
            let mut g_logits: Vec<f64> = p.iter().map(|v| v * scale).collect();
            g_logits[labels[i]] -= scale;
            let mut g_dropped = vec![0.0; self.config.feature_width()];
            for (c, &g) in g_logits.iter().enumerate() {
                grad_head_b[c] += g;
                axpy(g, &cache.dropped[i], grad_head_w.row_mut(c));
                axpy(g, self.head_weights.row(c), &mut g_dropped);
            }
            let g_feat = match cache.masks.get(i) {
                Some(mask) => dropout_backward(&g_dropped, mask, keep),
                None => g_dropped,
            };
            grad_features.push(g_feat);
        }
        loss *= scale;

        let mut tensors = Vec::with_capacity(self.towers.len() * 6 + 2);
        for (t, (tower, tc)) in self.towers.iter().zip(&cache.towers).enumerate() {
            let acts = &forward.towers[t];
            // max-pool → relu → bn2
            let mut g_a2 = Tensor::zeros(tc.z2.shape());
            for i in 0..n {
                let base = tc.offsets2[i];
                for (c, &row) in tc.argmax[i].iter().enumerate() {
                    let g = grad_features[i][t * maps + c];
                    if acts.layer2[i].get(row, c) > 0.0 {
                        g_a2.set(base + row, c, g);
                    }
                }
            }
            let bn2 = batchnorm_backward(&tc.z2, &tower.bn2, &g_a2, mode)?;

            // conv2 → relu → bn1
            let g_z2_parts = split_rows(&bn2.input, &tc.offsets2)?;
            let mut conv2_grads = tower.conv2.zero_grads();
            let mut g_a1_parts = Vec::with_capacity(n);
            for i in 0..n {
                let g_a1 = tower
                    .conv2
                    .backward_into(&acts.layer1[i], &g_z2_parts[i], &mut conv2_grads, true)?
                    .expect("input gradient requested");
                g_a1_parts.push(g_a1);
            }
            let mut g_y1 = Tensor::vstack(&g_a1_parts)?;
            for (g, &a) in g_y1.data_mut().iter_mut().zip(
                acts.layer1.iter().flat_map(|m| m.data().iter()),
            ) {
                if a <= 0.0 {
                    *g = 0.0;
                }
            }
            let bn1 = batchnorm_backward(&tc.z1, &tower.bn1, &g_y1, mode)?;

            // conv1; the embedding input is static so no input gradient
            let g_z1_parts = split_rows(&bn1.input, &tc.offsets1)?;
            let mut conv1_grads = tower.conv1.zero_grads();
            for i in 0..n {
                tower
                    .conv1
                    .backward_into(&inputs[i], &g_z1_parts[i], &mut conv1_grads, false)?;
            }

            tensors.push(conv1_grads.weights.into_data());
            tensors.push(bn1.gamma);
            tensors.push(bn1.beta);
            tensors.push(conv2_grads.weights.into_data());
            tensors.push(bn2.gamma);
            tensors.push(bn2.beta);
        }
        tensors.push(grad_head_w.into_data());
        tensors.push(grad_head_b);

        Ok(LossAndGradients {
            loss,
            gradients: Gradients { tensors },
            stats,
            forward,
        })
    }

    /// Mean cross-entropy without gradients.
    pub fn loss(&self, inputs: &[Tensor], labels: &[usize], mode: Mode, dropout_rng: Option<&mut ChaCha8Rng>) -> Result<f64> {
        let forward = self.forward_batch(inputs, mode, dropout_rng)?;
        let mut loss = 0.0;
        for (p, &l) in forward.probs.iter().zip(labels) {
            if l >= p.len() {
                return Err(Error::LabelOutOfRange { label: l, classes: p.len() });
            }
            loss -= libm::log(p[l]);
        }
        Ok(loss / labels.len() as f64)
    }

    /// Folds one batch's statistics into the running averages.
    pub fn update_running_stats(&mut self, stats: &[TowerStats]) {
        for (tower, s) in self.towers.iter_mut().zip(stats) {
            if let Some(b) = &s.bn1 {
                tower.bn1.update_running(b);
            }
            if let Some(b) = &s.bn2 {
                tower.bn2.update_running(b);
            }
        }
    }

    /// Class probabilities for one sentence in inference mode.
    pub fn predict(&self, tokens: &[String], table: &EmbeddingTable) -> Result<Vec<f64>> {
        let mut f = self.forward(tokens, table, Mode::Infer)?;
        Ok(f.probs.remove(0))
    }

    /// Logit for one class from pooled features, bypassing dropout.
    pub fn head_logit(&self, features: &[f64], class: usize) -> f64 {
        self.head_bias[class] + dot(self.head_weights.row(class), features)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gradcheck::grad_check;
    use alloc::string::ToString;

    fn tiny() -> ModelConfig {
        ModelConfig {
            windows: vec![2, 3],
            feature_maps: 3,
            embed_dim: 4,
            num_classes: 3,
            seed: 5,
            ..ModelConfig::default()
        }
    }

    fn inputs(seed: u64, lens: &[usize], dim: usize) -> Vec<Tensor> {
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        lens.iter()
            .map(|&l| {
                let data = (0..l * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                Tensor::matrix(l, dim, data).unwrap()
            })
            .collect()
    }

    #[test]
    fn head_shape_follows_config() {
        let m = Model::new(ModelConfig::new(300, 6)).unwrap();
        assert_eq!(m.head_weights.shape(), &[6, 192]);
        let one = Model::new(ModelConfig {
            windows: vec![3],
            feature_maps: 1,
            ..ModelConfig::new(8, 4)
        })
        .unwrap();
        assert_eq!(one.head_weights.shape(), &[4, 1]);
    }

    #[test]
    fn same_seed_same_parameters() {
        assert_eq!(Model::new(tiny()).unwrap(), Model::new(tiny()).unwrap());
        let other = Model::new(ModelConfig { seed: 6, ..tiny() }).unwrap();
        assert_ne!(Model::new(tiny()).unwrap(), other);
    }

    #[test]
    fn rejects_unpadded_input() {
        let m = Model::new(tiny()).unwrap();
        let short = inputs(1, &[4], 4);
        assert!(m.forward_batch(&short, Mode::Train, None).is_err());
        let ok = inputs(1, &[5], 4);
        assert!(m.forward_batch(&ok, Mode::Train, None).is_ok());
    }

    #[test]
    fn zero_everything_gives_uniform() {
        let mut m = Model::new(tiny()).unwrap();
        for p in m.trainable_mut() {
            p.iter_mut().for_each(|v| *v = 0.0);
        }
        let mut table = EmbeddingTable::new(4);
        table.insert("w", &[0.0; 4]).unwrap();
        let f = m.forward(&["w".to_string()], &table, Mode::Train).unwrap();
        for p in &f.probs[0] {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let m = Model::new(tiny()).unwrap();
        let xs = inputs(2, &[5, 7], 4);
        let labels = [0, 2];
        let seed = 11;
        let lg = m
            .loss_and_gradients(&xs, &labels, Mode::Train, Some(&mut ChaCha8Rng::seed_from_u64(seed)))
            .unwrap();
        let n_tensors = m.trainable().len();
        for t in 0..n_tensors {
            let base: Vec<f64> = m.trainable()[t].to_vec();
            let f = |p: &[f64]| {
                let mut probe = m.clone();
                probe.trainable_mut()[t].copy_from_slice(p);
                probe
                    .loss(&xs, &labels, Mode::Train, Some(&mut ChaCha8Rng::seed_from_u64(seed)))
                    .unwrap()
            };
            let err = grad_check(f, &base, &lg.gradients.tensors[t], 1e-5).unwrap();
            assert!(err < 1e-4, "{}: {err}", m.trainable_names()[t]);
        }
    }
}
