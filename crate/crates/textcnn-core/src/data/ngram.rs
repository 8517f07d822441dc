//! N-gram probe sets.
//!
//! Out-of-vocabulary words are deleted from a sentence before windows are
//! taken, so a probe may straddle a removed word. Identical token sequences
//! collapse into one record carrying every source sentence and label.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;

use super::{Dataset, EmbeddingTable, Sentence, Split};
use crate::{Error, Result, Tensor};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NGramRecord {
    pub id: usize,
    pub tokens: Vec<String>,
    pub labels: BTreeSet<usize>,
    pub source_ids: BTreeSet<usize>,
}

/// Which sentences feed the probe set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ProbeSplit {
    Train,
    Test,
    #[default]
    Both,
}

impl ProbeSplit {
    pub fn includes(self, split: Split) -> bool {
        match self {
            ProbeSplit::Both => true,
            ProbeSplit::Train => split == Split::Train,
            ProbeSplit::Test => split == Split::Test,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ProbeSplit::Train => "train",
            ProbeSplit::Test => "test",
            ProbeSplit::Both => "train+test",
        }
    }
}

pub fn extract_ngrams_from<'a, I>(sentences: I, n: usize, table: &EmbeddingTable) -> Result<Vec<NGramRecord>>
where
    I: IntoIterator<Item = &'a Sentence>,
{
    if n == 0 {
        return Err(Error::invalid("n-gram length must be at least 1"));
    }
    let mut index: BTreeMap<Vec<String>, usize> = BTreeMap::new();
    let mut records: Vec<NGramRecord> = Vec::new();
    for sentence in sentences {
        let kept: Vec<&String> = sentence.tokens.iter().filter(|t| table.contains(t)).collect();
        if kept.len() < n {
            continue;
        }
        for window in kept.windows(n) {
            let key: Vec<String> = window.iter().map(|t| (*t).clone()).collect();
            let id = *index.entry(key.clone()).or_insert_with(|| {
                records.push(NGramRecord {
                    id: records.len(),
                    tokens: key,
                    labels: BTreeSet::new(),
                    source_ids: BTreeSet::new(),
                });
                records.len() - 1
            });
            records[id].labels.insert(sentence.label);
            records[id].source_ids.insert(sentence.id);
        }
    }
    Ok(records)
}

pub fn extract_ngrams(
    dataset: &Dataset,
    n: usize,
    table: &EmbeddingTable,
    split: ProbeSplit,
) -> Result<Vec<NGramRecord>> {
    extract_ngrams_from(
        dataset.sentences.iter().filter(|s| split.includes(s.split)),
        n,
        table,
    )
}

/// `n × dim` matrix of the record's word vectors.
pub fn embed_ngram(record: &NGramRecord, table: &EmbeddingTable) -> Result<Tensor> {
    embed_tokens(&record.tokens, table)
}

pub fn embed_tokens(tokens: &[String], table: &EmbeddingTable) -> Result<Tensor> {
    let mut data = Vec::with_capacity(tokens.len() * table.dim());
    for t in tokens {
        let v = table.get(t).ok_or_else(|| Error::NotInVocabulary(t.clone()))?;
        data.extend_from_slice(v);
    }
    Tensor::matrix(tokens.len(), table.dim(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn table(words: &[&str]) -> EmbeddingTable {
        let mut t = EmbeddingTable::new(2);
        for (i, w) in words.iter().enumerate() {
            t.insert(*w, &[i as f64, 1.0]).unwrap();
        }
        t
    }

    fn sentence(id: usize, label: usize, tokens: &[&str]) -> Sentence {
        Sentence {
            id,
            tokens: tokens.iter().map(|t| t.to_string()).collect(),
            label,
            split: Split::Train,
        }
    }

    #[test]
    fn skips_oov_then_slides() {
        let t = table(&["a", "b", "c"]);
        let s = [sentence(0, 0, &["a", "X", "b", "c"])];
        let r = extract_ngrams_from(&s, 3, &t).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].tokens, ["a", "b", "c"]);
    }

    #[test]
    fn window_count_before_dedup() {
        let t = table(&["a", "b", "c", "d", "e"]);
        let s = [sentence(0, 0, &["a", "b", "c", "d", "e"])];
        assert_eq!(extract_ngrams_from(&s, 3, &t).unwrap().len(), 3);
        assert!(extract_ngrams_from(&s, 6, &t).unwrap().is_empty());
        assert!(extract_ngrams_from(&s, 0, &t).is_err());
    }

    #[test]
    fn duplicate_trigram_merges_labels() {
        let t = table(&["How", "many", "hours"]);
        let s = [
            sentence(4, 3, &["How", "many", "hours"]),
            sentence(9, 5, &["How", "many", "hours"]),
        ];
        let r = extract_ngrams_from(&s, 3, &t).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].labels, BTreeSet::from([3, 5]));
        assert_eq!(r[0].source_ids, BTreeSet::from([4, 9]));
    }

    #[test]
    fn embedding_rows_match_lookups() {
        let t = table(&["p", "q"]);
        let rec = NGramRecord {
            id: 0,
            tokens: vec!["q".into(), "p".into(), "q".into()],
            labels: BTreeSet::from([0]),
            source_ids: BTreeSet::from([0]),
        };
        let m = embed_ngram(&rec, &t).unwrap();
        assert_eq!(m.shape(), &[3, 2]);
        assert_eq!(m.row(0), t.get("q").unwrap());
        assert_eq!(m.row(0), m.row(2));
        assert_eq!(m.row(1), t.get("p").unwrap());
        let bad = NGramRecord {
            tokens: vec!["zzz".into()],
            ..rec
        };
        assert_eq!(embed_ngram(&bad, &t).unwrap_err(), Error::NotInVocabulary("zzz".into()));
    }
}
