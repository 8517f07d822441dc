//! Kernel probing: the post-bn-relu response of a kernel to a single n-gram.
//!
//! Batch norm always runs on running statistics here, so a probe value
//! depends on the n-gram alone and not on what else is being probed.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::{GroupKey, KernelId};
use crate::data::{embed_ngram, extract_ngrams, Dataset, EmbeddingTable, NGramRecord, ProbeSplit};
use crate::model::{Model, Tower};
use crate::{Error, Mode, Result, Tensor};

fn tower_for(model: &Model, window: usize) -> Result<&Tower> {
    model
        .tower(window)
        .ok_or_else(|| Error::invalid(format!("model has no tower with window {window}")))
}

/// Responses of every kernel in `group` to one embedded n-gram.
pub fn probe_group(model: &Model, group: GroupKey, ngram: &Tensor) -> Result<Vec<f64>> {
    let tower = tower_for(model, group.window)?;
    let expected = group.ngram_len();
    if ngram.rows() != expected {
        return Err(Error::shape("probe n-gram length", expected, ngram.rows()));
    }
    match group.layer {
        1 => {
            let z = tower.conv1.forward_at(ngram, 0)?;
            z.iter()
                .enumerate()
                .map(|(c, &v)| Ok(tower.bn1.infer_channel(c, v)?.max(0.0)))
                .collect()
        }
        2 => {
            let z1 = tower.conv1.forward(ngram)?;
            let (mut a1, _) = tower.bn1.normalize(&z1, Mode::Infer)?;
            crate::layers::relu_in_place(a1.data_mut());
            let z2 = tower.conv2.forward_at(&a1, 0)?;
            z2.iter()
                .enumerate()
                .map(|(c, &v)| Ok(tower.bn2.infer_channel(c, v)?.max(0.0)))
                .collect()
        }
        l => Err(Error::invalid(format!("layer {l} does not exist"))),
    }
}

pub fn probe_kernel(model: &Model, kernel: KernelId, ngram: &Tensor) -> Result<f64> {
    if kernel.index >= model.config.feature_maps {
        return Err(Error::invalid(format!("kernel {kernel} out of range")));
    }
    Ok(probe_group(model, kernel.group(), ngram)?[kernel.index])
}

/// Deduplicated probe records keyed by n-gram length.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ProbeSets {
    pub split: ProbeSplit,
    pub sets: BTreeMap<usize, Vec<NGramRecord>>,
}

impl ProbeSets {
    /// Extracts every length any group of `windows` needs.
    pub fn extract(dataset: &Dataset, table: &EmbeddingTable, windows: &[usize], split: ProbeSplit) -> Result<Self> {
        let mut sets = BTreeMap::new();
        for &h in windows {
            for n in [h, 2 * h - 1] {
                if !sets.contains_key(&n) {
                    sets.insert(n, extract_ngrams(dataset, n, table, split)?);
                }
            }
        }
        Ok(ProbeSets { split, sets })
    }

    pub fn get(&self, n: usize) -> Option<&[NGramRecord]> {
        self.sets.get(&n).map(Vec::as_slice)
    }
}

/// Activations of every kernel in one group over that group's probe set.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbeGroup {
    pub key: GroupKey,
    /// Row labels of `activations`.
    pub kernels: Vec<KernelId>,
    /// Column labels of `activations`.
    pub records: Vec<NGramRecord>,
    /// `kernels × records`, every entry finite and ≥ 0.
    pub activations: Tensor,
}

impl ProbeGroup {
    pub fn new(key: GroupKey, kernels: Vec<KernelId>, records: Vec<NGramRecord>, activations: Tensor) -> Result<Self> {
        if activations.rows() != kernels.len() || activations.cols() != records.len() {
            return Err(Error::shape(
                "activation matrix",
                kernels.len() * records.len(),
                activations.len(),
            ));
        }
        if activations.data().iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::invalid(format!("group {key} has negative or non-finite activations")));
        }
        Ok(ProbeGroup {
            key,
            kernels,
            records,
            activations,
        })
    }

    pub fn row(&self, kernel_index: usize) -> &[f64] {
        self.activations.row(kernel_index)
    }

    pub fn kernel_position(&self, kernel: KernelId) -> Option<usize> {
        self.kernels.iter().position(|k| *k == kernel)
    }
}

/// All probe groups of one model.
#[derive(Clone, Debug, PartialEq)]
pub struct ActivationMatrix {
    pub class_names: Vec<String>,
    /// Which sentences the probes came from, e.g. `train+test`.
    pub probe_split: String,
    pub groups: Vec<ProbeGroup>,
}

impl ActivationMatrix {
    pub fn group(&self, key: GroupKey) -> Option<&ProbeGroup> {
        self.groups.iter().find(|g| g.key == key)
    }

    pub fn kernel_count(&self) -> usize {
        self.groups.iter().map(|g| g.kernels.len()).sum()
    }

    /// Activation row of one kernel, together with its group.
    pub fn kernel_row(&self, kernel: KernelId) -> Option<(&ProbeGroup, &[f64])> {
        let group = self.group(kernel.group())?;
        let pos = group.kernel_position(kernel)?;
        Some((group, group.row(pos)))
    }
}

/// Probes every kernel of `model` with its matching probe set. Groups are
/// ordered layer 1 then layer 2, windows ascending.
pub fn build_activation_matrix(
    model: &Model,
    probes: &ProbeSets,
    table: &EmbeddingTable,
    class_names: &[String],
) -> Result<ActivationMatrix> {
    let mut groups = Vec::new();
    for layer in [1u8, 2] {
        for &h in &model.config.windows {
            let key = GroupKey::new(layer, h);
            let n = key.ngram_len();
            let records = probes.get(n).unwrap_or(&[]);
            if records.is_empty() {
                return Err(Error::EmptyProbeGroup(format!("{key} ({n}-grams)")));
            }
            let maps = model.config.feature_maps;
            let mut activations = Tensor::zeros(&[maps, records.len()]);
            for (col, record) in records.iter().enumerate() {
                let x = embed_ngram(record, table)?;
                for (k, v) in probe_group(model, key, &x)?.into_iter().enumerate() {
                    activations.set(k, col, v);
                }
            }
            let kernels = (0..maps).map(|i| KernelId::new(layer, h, i)).collect();
            groups.push(ProbeGroup::new(key, kernels, records.to_vec(), activations)?);
        }
    }
    Ok(ActivationMatrix {
        class_names: class_names.to_vec(),
        probe_split: probes.split.as_str().into(),
        groups,
    })
}
