//! TREC question classification: one question per line, `COARSE:fine text`.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{tokenize, Dataset, Sentence, Split};
use crate::{Error, Result};

pub const TREC_CLASSES: [&str; 6] = ["ABBR", "DESC", "ENTY", "HUM", "LOC", "NUM"];

/// Fine tag written by [`write_trec`]; loading discards fine tags.
const PLACEHOLDER_FINE: &str = "other";

pub fn parse_trec(text: &str, split: Split) -> Result<Dataset> {
    let mut sentences = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let (tag, question) = line
            .split_once(char::is_whitespace)
            .unwrap_or((line, ""));
        let (coarse, _fine) = tag
            .split_once(':')
            .ok_or_else(|| Error::parse(line_no, "expected COARSE:fine label before the question"))?;
        let label = TREC_CLASSES
            .iter()
            .position(|c| *c == coarse)
            .ok_or_else(|| Error::UnknownClass {
                line: line_no,
                tag: coarse.to_string(),
            })?;
        sentences.push(Sentence {
            id: sentences.len(),
            tokens: tokenize(question),
            label,
            split,
        });
    }
    if sentences.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    Dataset::new("TREC", TREC_CLASSES.iter().map(|c| c.to_string()).collect(), sentences)
}

/// Inverse of [`parse_trec`] for datasets whose tokens are already clean.
pub fn write_trec(dataset: &Dataset) -> String {
    let mut out = String::new();
    for s in &dataset.sentences {
        out.push_str(&dataset.class_names[s.label]);
        out.push(':');
        out.push_str(PLACEHOLDER_FINE);
        for t in &s.tokens {
            out.push(' ');
            out.push_str(t);
        }
        out.push('\n');
    }
    out
}
