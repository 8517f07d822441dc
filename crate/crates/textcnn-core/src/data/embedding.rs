use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, Result, Tensor};

/// Static word → vector table. Rows keep insertion order.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vocab: BTreeMap<String, usize>,
    words: Vec<String>,
    matrix: Vec<f64>,
}

impl EmbeddingTable {
    pub fn new(dim: usize) -> Self {
        EmbeddingTable {
            dim,
            vocab: BTreeMap::new(),
            words: Vec::new(),
            matrix: Vec::new(),
        }
    }

    /// Adds a row. Returns `false` (and keeps the existing row) when the word
    /// is already present.
    pub fn insert(&mut self, word: impl Into<String>, vector: &[f64]) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::shape("embedding row", self.dim, vector.len()));
        }
        let word = word.into();
        if self.vocab.contains_key(&word) {
            return Ok(false);
        }
        self.vocab.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.matrix.extend_from_slice(vector);
        Ok(true)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.vocab.contains_key(word)
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vocab
            .get(word)
            .map(|&i| &self.matrix[i * self.dim..(i + 1) * self.dim])
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// `V × dim` row-major matrix.
    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.words
            .iter()
            .zip(self.matrix.chunks_exact(self.dim.max(1)))
            .map(|(w, v)| (w.as_str(), v))
    }

    /// Embeds a token sequence. Unknown tokens become zero rows and the
    /// result is right-padded with zero rows up to `min_len`.
    pub fn embed_padded(&self, tokens: &[String], min_len: usize) -> Tensor {
        let rows = tokens.len().max(min_len);
        let mut out = Tensor::zeros(&[rows, self.dim]);
        for (t, word) in tokens.iter().enumerate() {
            if let Some(v) = self.get(word) {
                out.row_mut(t).copy_from_slice(v);
            }
        }
        out
    }
}
