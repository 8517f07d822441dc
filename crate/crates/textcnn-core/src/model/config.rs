use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::adam::AdamConfig;
use crate::layers::{DEFAULT_EPSILON, DEFAULT_MOMENTUM};
use crate::{Error, Result};

/// Architecture and training hyperparameters.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default, deny_unknown_fields))]
pub struct ModelConfig {
    /// Filter window of each tower, ascending.
    pub windows: Vec<usize>,
    pub feature_maps: usize,
    /// Always 2; kept so configs state it explicitly.
    pub conv_layers_per_tower: usize,
    pub embed_dim: usize,
    pub num_classes: usize,
    pub dropout_keep: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    pub adam: AdamConfig,
    pub bn_momentum: f64,
    pub bn_epsilon: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            windows: vec![3, 4, 5],
            feature_maps: 64,
            conv_layers_per_tower: 2,
            embed_dim: 300,
            num_classes: 6,
            dropout_keep: 0.5,
            batch_size: 128,
            epochs: 10,
            seed: 0,
            adam: AdamConfig::default(),
            bn_momentum: DEFAULT_MOMENTUM,
            bn_epsilon: DEFAULT_EPSILON,
        }
    }
}

impl ModelConfig {
    pub fn new(embed_dim: usize, num_classes: usize) -> Self {
        ModelConfig {
            embed_dim,
            num_classes,
            ..ModelConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::invalid(m.to_string()));
        if self.windows.is_empty() {
            return fail("windows must be nonempty");
        }
        if self.windows.windows(2).any(|w| w[0] >= w[1]) {
            return fail("windows must be strictly ascending");
        }
        if self.windows[0] == 0 {
            return fail("windows must be positive");
        }
        if self.feature_maps == 0 {
            return fail("feature_maps must be at least 1");
        }
        if self.conv_layers_per_tower != 2 {
            return fail("only two conv layers per tower are supported");
        }
        if self.embed_dim == 0 {
            return fail("embed_dim must be positive");
        }
        if self.num_classes < 2 {
            return fail("need at least two classes");
        }
        if !(self.dropout_keep > 0.0 && self.dropout_keep <= 1.0) {
            return fail("dropout_keep must be in (0, 1]");
        }
        if self.batch_size == 0 {
            return fail("batch_size must be positive");
        }
        if !(self.adam.lr >= 0.0) || !(0.0..1.0).contains(&self.adam.beta1) || !(0.0..1.0).contains(&self.adam.beta2)
        {
            return fail("adam hyperparameters out of range");
        }
        if !(self.bn_momentum > 0.0 && self.bn_momentum <= 1.0) || !(self.bn_epsilon > 0.0) {
            return fail("batch norm momentum must be in (0, 1] and epsilon positive");
        }
        Ok(())
    }

    /// Shortest input for which every tower yields a second-layer output.
    pub fn min_len(&self) -> usize {
        2 * self.windows.iter().copied().max().unwrap_or(1) - 1
    }

    /// Width of the concatenated pooled feature vector.
    pub fn feature_width(&self) -> usize {
        self.feature_maps * self.windows.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        let c = ModelConfig::default();
        c.validate().unwrap();
        assert_eq!(c.min_len(), 9);
        assert_eq!(c.feature_width(), 192);
    }

    #[test]
    fn rejects_bad_configs() {
        let bad = [
            ModelConfig { windows: vec![], ..ModelConfig::default() },
            ModelConfig { windows: vec![4, 3], ..ModelConfig::default() },
            ModelConfig { feature_maps: 0, ..ModelConfig::default() },
            ModelConfig { conv_layers_per_tower: 3, ..ModelConfig::default() },
            ModelConfig { dropout_keep: 0.0, ..ModelConfig::default() },
            ModelConfig { num_classes: 1, ..ModelConfig::default() },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
    }
}
