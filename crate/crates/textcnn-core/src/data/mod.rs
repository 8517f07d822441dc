//! Corpora, tokenization, static embeddings and n-gram probe sets.

mod dataset;
mod embedding;
mod ngram;
mod sst;
pub mod synthetic;
mod tokenize;
mod trec;

pub use dataset::{Dataset, Sentence, Split};
pub use embedding::EmbeddingTable;
pub use ngram::{embed_ngram, embed_tokens, extract_ngrams, extract_ngrams_from, NGramRecord, ProbeSplit};
pub use sst::{parse_sst, parse_tree, relabel, SstTree, SST_CLASSES};
pub use tokenize::tokenize;
pub use trec::{parse_trec, write_trec, TREC_CLASSES};
