//! Model checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic    8 bytes  "TCNNCKPT"
//! version  u32      FORMAT_VERSION
//! hlen     u64      length of the JSON header
//! header   hlen     {"config", "epoch", "populated", "tensors": [{"name", "shape"}]}
//! payload  f64 × Σ|shape|, tensors in header order
//! crc      u32      CRC-32 of every preceding byte
//! ```
//!
//! Tensor names: `tower{h}.conv{1,2}.{weight,bias}`,
//! `tower{h}.bn{1,2}.{gamma,beta,running_mean,running_var}`,
//! `head.{weight,bias}`. `populated` lists the batch norms whose running
//! statistics are estimated.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use textcnn_core::layers::BatchNormParams;
use textcnn_core::model::{Model, ModelConfig};

use crate::{Error, Result};

pub const MAGIC: &[u8; 8] = b"TCNNCKPT";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    config: ModelConfig,
    epoch: usize,
    populated: Vec<String>,
    tensors: Vec<TensorEntry>,
}

#[derive(Serialize, Deserialize)]
struct TensorEntry {
    name: String,
    shape: Vec<usize>,
}

fn bn_tensors<'a>(prefix: &str, bn: &'a BatchNormParams, out: &mut Vec<(String, Vec<usize>, &'a [f64])>) {
    let c = bn.channels();
    for (field, values) in [
        ("gamma", &bn.gamma),
        ("beta", &bn.beta),
        ("running_mean", &bn.running_mean),
        ("running_var", &bn.running_var),
    ] {
        out.push((format!("{prefix}.{field}"), vec![c], values.as_slice()));
    }
}

fn named_tensors(model: &Model) -> Vec<(String, Vec<usize>, &[f64])> {
    let mut out = Vec::new();
    for t in &model.towers {
        for (i, conv, bn) in [(1, &t.conv1, &t.bn1), (2, &t.conv2, &t.bn2)] {
            let p = format!("tower{}", t.window);
            out.push((format!("{p}.conv{i}.weight"), conv.weights().shape().to_vec(), conv.weights().data()));
            out.push((format!("{p}.conv{i}.bias"), vec![conv.bias().len()], conv.bias()));
            bn_tensors(&format!("{p}.bn{i}"), bn, &mut out);
        }
    }
    out.push(("head.weight".into(), model.head_weights.shape().to_vec(), model.head_weights.data()));
    out.push(("head.bias".into(), vec![model.head_bias.len()], &model.head_bias));
    out
}

pub fn encode_checkpoint(model: &Model) -> Result<Vec<u8>> {
    let tensors = named_tensors(model);
    let populated = model
        .towers
        .iter()
        .flat_map(|t| [(1, &t.bn1), (2, &t.bn2)].map(|(i, bn)| (format!("tower{}.bn{i}", t.window), bn.populated)))
        .filter_map(|(name, p)| p.then_some(name))
        .collect();
    let header = Header {
        config: model.config.clone(),
        epoch: model.epoch,
        populated,
        tensors: tensors
            .iter()
            .map(|(name, shape, _)| TensorEntry {
                name: name.clone(),
                shape: shape.clone(),
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::Corrupt(e.to_string()))?;
    let mut out = Vec::with_capacity(24 + json.len() + tensors.iter().map(|t| t.2.len() * 8).sum::<usize>());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    for (_, _, values) in &tensors {
        for v in *values {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

fn take<'a>(bytes: &'a [u8], at: &mut usize, n: usize, what: &str) -> Result<&'a [u8]> {
    let end = at.checked_add(n).filter(|&e| e <= bytes.len());
    match end {
        Some(end) => {
            let s = &bytes[*at..end];
            *at = end;
            Ok(s)
        }
        None => Err(Error::Corrupt(format!("truncated while reading {what}"))),
    }
}

pub fn decode_checkpoint(bytes: &[u8]) -> Result<Model> {
    let mut at = 0;
    if take(bytes, &mut at, 8, "magic")? != MAGIC {
        return Err(Error::Corrupt("not a checkpoint file".into()));
    }
    let version = u32::from_le_bytes(take(bytes, &mut at, 4, "version")?.try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let hlen = u64::from_le_bytes(take(bytes, &mut at, 8, "header length")?.try_into().unwrap());
    let hlen = usize::try_from(hlen).map_err(|_| Error::Corrupt("header length overflows".into()))?;
    let header: Header = serde_json::from_slice(take(bytes, &mut at, hlen, "header")?)
        .map_err(|e| Error::Corrupt(format!("bad header: {e}")))?;
    let payload_len: usize = header.tensors.iter().map(|t| t.shape.iter().product::<usize>() * 8).sum();
    let payload = take(bytes, &mut at, payload_len, "tensor payload")?;
    let stored = u32::from_le_bytes(take(bytes, &mut at, 4, "checksum")?.try_into().unwrap());
    if at != bytes.len() {
        return Err(Error::Corrupt(format!("{} trailing bytes", bytes.len() - at)));
    }
    if crc32fast::hash(&bytes[..at - 4]) != stored {
        return Err(Error::Corrupt("checksum mismatch".into()));
    }

    let mut model = Model::new(header.config)?;
    model.epoch = header.epoch;
    let expected: Vec<(String, Vec<usize>)> =
        named_tensors(&model).into_iter().map(|(n, s, _)| (n, s)).collect();
    let found: Vec<(String, Vec<usize>)> = header.tensors.iter().map(|t| (t.name.clone(), t.shape.clone())).collect();
    if expected != found {
        return Err(Error::Corrupt("tensor list does not match the stored config".into()));
    }
    let mut values = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
    let mut fill = |dst: &mut [f64]| dst.iter_mut().for_each(|d| *d = values.next().expect("length checked"));
    for t in &mut model.towers {
        let p = format!("tower{}", t.window);
        for (i, conv, bn) in [(1, &mut t.conv1, &mut t.bn1), (2, &mut t.conv2, &mut t.bn2)] {
            fill(conv.weights_mut().data_mut());
            fill(conv.bias_mut());
            fill(&mut bn.gamma);
            fill(&mut bn.beta);
            fill(&mut bn.running_mean);
            fill(&mut bn.running_var);
            bn.populated = header.populated.contains(&format!("{p}.bn{i}"));
        }
    }
    fill(model.head_weights.data_mut());
    fill(&mut model.head_bias);
    Ok(model)
}

pub fn save_checkpoint(model: &Model, path: &Path) -> Result<()> {
    fs::write(path, encode_checkpoint(model)?).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Model> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model() -> Model {
        let mut m = Model::new(ModelConfig {
            windows: vec![2, 3],
            feature_maps: 3,
            seed: 9,
            ..ModelConfig::new(4, 3)
        })
        .unwrap();
        m.towers[1].bn2.set_running_stats(vec![0.5, 1.0, -2.0], vec![1.0, 2.0, 0.25]).unwrap();
        m.epoch = 4;
        m
    }

    #[test]
    fn round_trip_is_exact() {
        let m = model();
        let bytes = encode_checkpoint(&m).unwrap();
        assert_eq!(decode_checkpoint(&bytes).unwrap(), m);
        assert_eq!(encode_checkpoint(&decode_checkpoint(&bytes).unwrap()).unwrap(), bytes);
    }

    #[test]
    fn version_and_corruption_errors() {
        let bytes = encode_checkpoint(&model()).unwrap();
        let mut v2 = bytes.clone();
        v2[8..12].copy_from_slice(&2u32.to_le_bytes());
        assert!(matches!(decode_checkpoint(&v2), Err(Error::VersionMismatch { found: 2, expected: 1 })));
        for cut in [0, 5, 20, bytes.len() / 2, bytes.len() - 1] {
            assert!(matches!(decode_checkpoint(&bytes[..cut]), Err(Error::Corrupt(_))), "cut {cut}");
        }
        let mut flipped = bytes.clone();
        let mid = bytes.len() - 40;
        flipped[mid] ^= 0x10;
        let err = decode_checkpoint(&flipped).unwrap_err();
        assert_eq!(err.to_string(), "corrupt checkpoint: checksum mismatch");
        let mut magic = bytes;
        magic[0] = b'X';
        assert!(matches!(decode_checkpoint(&magic), Err(Error::Corrupt(_))));
    }
}
