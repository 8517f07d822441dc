use alloc::string::String;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Split {
    Train,
    Test,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    pub id: usize,
    pub tokens: Vec<String>,
    pub label: usize,
    pub split: Split,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    pub name: String,
    pub class_names: Vec<String>,
    pub sentences: Vec<Sentence>,
}

impl Dataset {
    /// Validates class names and labels.
    pub fn new(name: impl Into<String>, class_names: Vec<String>, sentences: Vec<Sentence>) -> Result<Self> {
        for (i, a) in class_names.iter().enumerate() {
            if class_names[..i].contains(a) {
                return Err(Error::invalid(alloc::format!("duplicate class name {a:?}")));
            }
        }
        for s in &sentences {
            if s.label >= class_names.len() {
                return Err(Error::LabelOutOfRange {
                    label: s.label,
                    classes: class_names.len(),
                });
            }
        }
        Ok(Dataset {
            name: name.into(),
            class_names,
            sentences,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &Sentence> {
        self.sentences.iter().filter(move |s| s.split == split)
    }

    pub fn count(&self, split: Split) -> usize {
        self.split(split).count()
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|c| c == name)
    }

    /// Concatenates datasets with identical class lists and renumbers ids
    /// so they stay unique.
    pub fn concat(name: impl Into<String>, parts: Vec<Dataset>) -> Result<Self> {
        let mut iter = parts.into_iter();
        let mut first = iter.next().ok_or(Error::Empty("dataset"))?;
        for part in iter {
            if part.class_names != first.class_names {
                return Err(Error::invalid("cannot concatenate datasets with different classes"));
            }
            first.sentences.extend(part.sentences);
        }
        for (i, s) in first.sentences.iter_mut().enumerate() {
            s.id = i;
        }
        first.name = name.into();
        Ok(first)
    }

    /// Class frequencies over one split.
    pub fn class_counts(&self, split: Split) -> Vec<usize> {
        let mut counts = alloc::vec![0; self.num_classes()];
        for s in self.split(split) {
            counts[s.label] += 1;
        }
        counts
    }
}
