//! Reading corpora and embeddings from disk.

mod embeddings;

use std::borrow::Cow;
use std::path::Path;

use serde::{Deserialize, Serialize};
use textcnn_core::data::{parse_sst, parse_trec, Dataset, Split};

pub use embeddings::{
    load_embeddings, read_word2vec_binary, read_word2vec_text, save_embeddings, write_word2vec_binary,
    write_word2vec_text, EmbeddingFormat,
};

use crate::{Error, Result};

/// UTF-8 when valid, Latin-1 otherwise (the original TREC files contain a
/// few Latin-1 bytes).
pub fn decode_text(bytes: &[u8]) -> Cow<'_, str> {
    match std::str::from_utf8(bytes) {
        Ok(s) => Cow::Borrowed(s),
        Err(_) => Cow::Owned(bytes.iter().map(|&b| b as char).collect()),
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(decode_text(&bytes).into_owned())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusFormat {
    /// `COARSE:fine question` lines.
    Trec,
    /// Bracketed sentiment trees, one per line.
    Sst,
}

pub fn load_split(path: &Path, format: CorpusFormat, split: Split) -> Result<Dataset> {
    let text = read_text(path)?;
    let parsed = match format {
        CorpusFormat::Trec => parse_trec(&text, split),
        CorpusFormat::Sst => parse_sst(&text, split),
    };
    parsed.map_err(|e| match e {
        textcnn_core::Error::Parse { line, message } => Error::format(path, line, message),
        textcnn_core::Error::UnknownClass { line, tag } => {
            Error::format(path, line, format!("unknown class tag {tag:?}"))
        }
        other => Error::format(path, 0, other.to_string()),
    })
}

/// Train split plus an optional test split, ids renumbered across both.
pub fn load_corpus(format: CorpusFormat, train: &Path, test: Option<&Path>) -> Result<Dataset> {
    let mut parts = vec![load_split(train, format, Split::Train)?];
    if let Some(test) = test {
        parts.push(load_split(test, format, Split::Test)?);
    }
    let name = parts[0].name.clone();
    let d = Dataset::concat(name, parts)?;
    log::info!(
        "{}: {} train / {} test sentences",
        d.name,
        d.count(Split::Train),
        d.count(Split::Test)
    );
    Ok(d)
}
