//! word2vec embedding files, text and binary.
//!
//! Text: an optional `count dim` header, then one `word v1 … vd` line per
//! word. Binary: a `count dim` header line, then per word the word bytes, a
//! space and `dim` little-endian f32 values, optionally followed by a
//! newline. Both readers stream and can keep only a given vocabulary.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use textcnn_core::data::EmbeddingTable;

use super::decode_text;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingFormat {
    Word2vecText,
    Word2vecBinary,
}

struct Loader<'a> {
    table: Option<EmbeddingTable>,
    filter: Option<&'a HashSet<String>>,
    duplicates: usize,
}

impl<'a> Loader<'a> {
    fn new(filter: Option<&'a HashSet<String>>) -> Self {
        Loader {
            table: None,
            filter,
            duplicates: 0,
        }
    }

    fn wants(&self, word: &str) -> bool {
        self.filter.is_none_or(|f| f.contains(word))
    }

    fn add(&mut self, word: &str, v: &[f64]) -> textcnn_core::Result<()> {
        let table = self.table.get_or_insert_with(|| EmbeddingTable::new(v.len()));
        if !table.insert(word, v)? {
            self.duplicates += 1;
            if self.duplicates <= 5 {
                log::warn!("duplicate embedding for {word:?}; keeping the first");
            }
        }
        Ok(())
    }

    fn finish(self, dim: Option<usize>) -> EmbeddingTable {
        if self.duplicates > 5 {
            log::warn!("{} duplicate words in embedding file", self.duplicates);
        }
        self.table.unwrap_or_else(|| EmbeddingTable::new(dim.unwrap_or(0)))
    }
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let mut it = line.split_whitespace();
    let count = it.next()?.parse().ok()?;
    let dim = it.next()?.parse().ok()?;
    it.next().is_none().then_some((count, dim))
}

pub fn read_word2vec_text<R: BufRead>(
    reader: R,
    path: &Path,
    filter: Option<&HashSet<String>>,
) -> Result<EmbeddingTable> {
    let mut loader = Loader::new(filter);
    let mut header: Option<(usize, usize)> = None;
    let mut dim: Option<usize> = None;
    let mut rows = 0;
    let mut values = Vec::new();
    for (i, line) in reader.split(b'\n').enumerate() {
        let line_no = i + 1;
        let bytes = line.map_err(|e| Error::io(path, e))?;
        let line = decode_text(&bytes);
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if i == 0 {
            if let Some(h) = parse_header(line) {
                header = Some(h);
                dim = Some(h.1);
                continue;
            }
        }
        let mut fields = line.split_whitespace();
        let word = fields.next().expect("line is not blank");
        values.clear();
        for f in fields {
            let v: f64 = f
                .parse()
                .map_err(|_| Error::format(path, line_no, format!("bad number {f:?}")))?;
            values.push(v);
        }
        match dim {
            Some(d) if d != values.len() => {
                return Err(Error::format(
                    path,
                    line_no,
                    format!("expected {d} values for {word:?}, found {}", values.len()),
                ))
            }
            None => dim = Some(values.len()),
            _ => {}
        }
        rows += 1;
        if loader.wants(word) {
            loader.add(word, &values)?;
        }
    }
    if let Some((count, _)) = header {
        if rows < count {
            return Err(Error::format(path, 0, format!("truncated: header promises {count} words, found {rows}")));
        }
    }
    Ok(loader.finish(dim))
}

pub fn read_word2vec_binary<R: BufRead>(
    mut reader: R,
    path: &Path,
    filter: Option<&HashSet<String>>,
) -> Result<EmbeddingTable> {
    let mut first = Vec::new();
    reader.read_until(b'\n', &mut first).map_err(|e| Error::io(path, e))?;
    let (count, dim) = parse_header(&decode_text(&first))
        .ok_or_else(|| Error::format(path, 1, "missing `count dim` header"))?;
    let mut loader = Loader::new(filter);
    let mut word = Vec::new();
    let mut raw = vec![0u8; dim * 4];
    let mut values = vec![0.0; dim];
    let truncated = |n: usize| Error::format(path, 0, format!("truncated after {n} of {count} vectors"));
    for n in 0..count {
        word.clear();
        reader.read_until(b' ', &mut word).map_err(|e| Error::io(path, e))?;
        if word.last() != Some(&b' ') {
            return Err(truncated(n));
        }
        word.pop();
        let start = word.iter().position(|b| !b.is_ascii_whitespace()).unwrap_or(word.len());
        let text = decode_text(&word[start..]);
        reader.read_exact(&mut raw).map_err(|_| truncated(n))?;
        for (v, chunk) in values.iter_mut().zip(raw.chunks_exact(4)) {
            *v = f32::from_le_bytes(chunk.try_into().expect("4 bytes")) as f64;
        }
        if loader.wants(&text) {
            loader.add(&text, &values)?;
        }
    }
    Ok(loader.finish(Some(dim)))
}

pub fn load_embeddings(path: &Path, format: EmbeddingFormat, filter: Option<&HashSet<String>>) -> Result<EmbeddingTable> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::with_capacity(1 << 20, file);
    let table = match format {
        EmbeddingFormat::Word2vecText => read_word2vec_text(reader, path, filter)?,
        EmbeddingFormat::Word2vecBinary => read_word2vec_binary(reader, path, filter)?,
    };
    log::info!("loaded {} vectors of dim {} from {}", table.len(), table.dim(), path.display());
    Ok(table)
}

pub fn write_word2vec_text<W: Write>(table: &EmbeddingTable, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{} {}", table.len(), table.dim())?;
    for (word, v) in table.iter() {
        write!(out, "{word}")?;
        for x in v {
            write!(out, " {x}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Values are narrowed to f32, as the format requires.
pub fn write_word2vec_binary<W: Write>(table: &EmbeddingTable, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{} {}", table.len(), table.dim())?;
    for (word, v) in table.iter() {
        out.write_all(word.as_bytes())?;
        out.write_all(b" ")?;
        for x in v {
            out.write_all(&(*x as f32).to_le_bytes())?;
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}

pub fn save_embeddings(table: &EmbeddingTable, path: &Path, format: EmbeddingFormat) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    match format {
        EmbeddingFormat::Word2vecText => write_word2vec_text(table, &mut out),
        EmbeddingFormat::Word2vecBinary => write_word2vec_binary(table, &mut out),
    }
    .and_then(|_| out.flush())
    .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> &'static Path {
        Path::new("mem")
    }

    #[test]
    fn text_with_and_without_header() {
        let with = "2 3\ncat 1 2 3\ndog 4 5 6\n";
        let t = read_word2vec_text(with.as_bytes(), p(), None).unwrap();
        assert_eq!(t.get("dog"), Some(&[4.0, 5.0, 6.0][..]));
        let without = "cat 1 2 3\r\ndog 4 5 6";
        assert_eq!(read_word2vec_text(without.as_bytes(), p(), None).unwrap(), t);
    }

    #[test]
    fn text_errors() {
        let err = read_word2vec_text("cat 1 2\ndog 1\n".as_bytes(), p(), None).unwrap_err();
        assert!(err.to_string().contains(":2:"), "{err}");
        let err = read_word2vec_text("3 2\ncat 1 2\n".as_bytes(), p(), None).unwrap_err();
        assert!(err.to_string().contains("truncated"));
        assert!(read_word2vec_text("cat 1 x\n".as_bytes(), p(), None).is_err());
    }

    #[test]
    fn filter_and_duplicates() {
        let text = "a 1\nb 2\na 3\n";
        let keep: HashSet<String> = ["a".to_string()].into();
        let t = read_word2vec_text(text.as_bytes(), p(), Some(&keep)).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t.get("a"), Some(&[1.0][..]));
    }

    #[test]
    fn binary_round_trip() {
        let mut t = EmbeddingTable::new(2);
        t.insert("héllo", &[0.5, -1.25]).unwrap();
        t.insert("x", &[3.0, 4.0]).unwrap();
        let mut buf = Vec::new();
        write_word2vec_binary(&t, &mut buf).unwrap();
        assert_eq!(read_word2vec_binary(&buf[..], p(), None).unwrap(), t);
        let cut = &buf[..buf.len() - 3];
        let err = read_word2vec_binary(cut, p(), None).unwrap_err();
        assert!(err.to_string().contains("truncated after 1 of 2"), "{err}");
    }

    #[test]
    fn binary_without_trailing_newlines() {
        let mut buf = b"1 1\nw ".to_vec();
        buf.extend_from_slice(&2.0f32.to_le_bytes());
        assert_eq!(read_word2vec_binary(&buf[..], p(), None).unwrap().get("w"), Some(&[2.0][..]));
    }
}
