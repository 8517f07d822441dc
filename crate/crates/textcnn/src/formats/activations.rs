//! Columnar text export of an activation matrix, one block per probe group.
//!
//! ```text
//! # textcnn activations v1
//! classes<TAB>ABBR<TAB>DESC…
//! probe-split<TAB>train+test
//! group<TAB>1-3<TAB>ngram=3<TAB>kernels=64<TAB>probes=N
//! id<TAB>w1…wn<TAB>labels<TAB>sources<TAB>1-3/#0…1-3/#63
//! 0<TAB>how<TAB>many<TAB>hours<TAB>NUM<TAB>12,40<TAB>0.5<TAB>…
//! ```
//!
//! One row per n-gram; activations print in shortest round-trip form, so
//! an export re-imports bit for bit.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};
use std::path::Path;

use textcnn_core::analysis::{ActivationMatrix, GroupKey, KernelId, ProbeGroup};
use textcnn_core::data::NGramRecord;
use textcnn_core::Tensor;

use crate::{Error, Result};

const MAGIC: &str = "# textcnn activations v1";

fn join<T: ToString>(items: impl IntoIterator<Item = T>, sep: &str) -> String {
    items.into_iter().map(|i| i.to_string()).collect::<Vec<_>>().join(sep)
}

fn check_field(s: &str, what: &str) -> std::io::Result<()> {
    if s.is_empty() || s.contains(['\t', '\n', '\r', ',']) {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("{what} {s:?} cannot be written as a field"),
        ));
    }
    Ok(())
}

pub fn write_activations<W: Write>(m: &ActivationMatrix, mut out: W) -> std::io::Result<()> {
    for c in &m.class_names {
        check_field(c, "class name")?;
    }
    writeln!(out, "{MAGIC}")?;
    writeln!(out, "classes\t{}", m.class_names.join("\t"))?;
    writeln!(out, "probe-split\t{}", m.probe_split)?;
    for g in &m.groups {
        let n = g.key.ngram_len();
        writeln!(
            out,
            "group\t{}\tngram={n}\tkernels={}\tprobes={}",
            g.key,
            g.kernels.len(),
            g.records.len()
        )?;
        let words = (1..=n).map(|i| format!("w{i}"));
        writeln!(out, "id\t{}\tlabels\tsources\t{}", join(words, "\t"), join(&g.kernels, "\t"))?;
        for (col, r) in g.records.iter().enumerate() {
            write!(out, "{}", r.id)?;
            for t in &r.tokens {
                if t.is_empty() || t.contains(['\t', '\n', '\r']) {
                    return Err(std::io::Error::new(std::io::ErrorKind::InvalidData, format!("token {t:?}")));
                }
                write!(out, "\t{t}")?;
            }
            let labels = join(r.labels.iter().map(|&l| &m.class_names[l]), ",");
            write!(out, "\t{labels}\t{}", join(&r.source_ids, ","))?;
            for k in 0..g.kernels.len() {
                write!(out, "\t{}", g.activations.get(k, col))?;
            }
            writeln!(out)?;
        }
    }
    Ok(())
}

struct Lines<'a, R> {
    inner: std::io::Lines<R>,
    path: &'a Path,
    line: usize,
}

impl<R: BufRead> Lines<'_, R> {
    fn next(&mut self) -> Result<Option<String>> {
        self.line += 1;
        self.inner.next().transpose().map_err(|e| Error::io(self.path, e))
    }

    fn expect(&mut self, what: &str) -> Result<String> {
        self.next()?.ok_or_else(|| self.err(format!("unexpected end of file, expected {what}")))
    }

    fn err(&self, message: impl Into<String>) -> Error {
        Error::format(self.path, self.line, message)
    }
}

fn keyed<'a>(line: &'a str, key: &str) -> Option<Vec<&'a str>> {
    let mut fields = line.split('\t');
    (fields.next() == Some(key)).then(|| fields.collect())
}

fn kv(field: &str, key: &str) -> Option<usize> {
    field.strip_prefix(key)?.strip_prefix('=')?.parse().ok()
}

pub fn read_activations<R: BufRead>(reader: R, path: &Path) -> Result<ActivationMatrix> {
    let mut lines = Lines {
        inner: reader.lines(),
        path,
        line: 0,
    };
    if lines.expect("header")?.trim_end() != MAGIC {
        return Err(lines.err("not an activation export"));
    }
    let classes_line = lines.expect("classes")?;
    let class_names: Vec<String> = keyed(&classes_line, "classes")
        .ok_or_else(|| lines.err("expected `classes` line"))?
        .into_iter()
        .map(String::from)
        .collect();
    let split_line = lines.expect("probe-split")?;
    let probe_split = match keyed(&split_line, "probe-split").as_deref() {
        Some([s]) => s.to_string(),
        _ => return Err(lines.err("expected `probe-split` line")),
    };

    let mut groups = Vec::new();
    while let Some(line) = lines.next()? {
        if line.is_empty() {
            continue;
        }
        let fields = keyed(&line, "group").ok_or_else(|| lines.err("expected `group` line"))?;
        let [key, ngram, kernels, probes] = fields[..] else {
            return Err(lines.err("group line needs key, ngram, kernels and probes"));
        };
        let key: GroupKey = key.parse().map_err(|_| lines.err(format!("bad group {key:?}")))?;
        let (Some(n), Some(k), Some(p)) = (kv(ngram, "ngram"), kv(kernels, "kernels"), kv(probes, "probes")) else {
            return Err(lines.err("bad group sizes"));
        };
        if n != key.ngram_len() {
            return Err(lines.err(format!("group {key} probes {}-grams, not {n}-grams", key.ngram_len())));
        }
        let header = lines.expect("column header")?;
        let cols: Vec<&str> = header.split('\t').collect();
        if cols.len() != 3 + n + k || cols[0] != "id" {
            return Err(lines.err("column header does not match the group line"));
        }
        let kernel_ids = cols[3 + n..]
            .iter()
            .map(|c| {
                c.parse::<KernelId>()
                    .ok()
                    .filter(|id| id.group() == key)
                    .ok_or_else(|| lines.err(format!("kernel {c:?} does not belong to {key}")))
            })
            .collect::<Result<Vec<_>>>()?;

        let mut records = Vec::with_capacity(p);
        let mut values = Tensor::zeros(&[k, p]);
        for col in 0..p {
            let row = lines.expect("n-gram row")?;
            let f: Vec<&str> = row.split('\t').collect();
            if f.len() != cols.len() {
                return Err(lines.err(format!("expected {} fields, found {}", cols.len(), f.len())));
            }
            let id = f[0].parse().map_err(|_| lines.err("bad n-gram id"))?;
            let labels = f[1 + n]
                .split(',')
                .map(|name| {
                    class_names
                        .iter()
                        .position(|c| c == name)
                        .ok_or_else(|| lines.err(format!("unknown class {name:?}")))
                })
                .collect::<Result<BTreeSet<_>>>()?;
            let source_ids = f[2 + n]
                .split(',')
                .filter(|s| !s.is_empty())
                .map(|s| s.parse().map_err(|_| lines.err("bad source id")))
                .collect::<Result<BTreeSet<_>>>()?;
            for (i, v) in f[3 + n..].iter().enumerate() {
                let v: f64 = v.parse().map_err(|_| lines.err(format!("bad activation {v:?}")))?;
                values.set(i, col, v);
            }
            records.push(NGramRecord {
                id,
                tokens: f[1..1 + n].iter().map(|s| s.to_string()).collect(),
                labels,
                source_ids,
            });
        }
        let group = ProbeGroup::new(key, kernel_ids, records, values).map_err(|e| lines.err(e.to_string()))?;
        groups.push(group);
    }
    Ok(ActivationMatrix {
        class_names,
        probe_split,
        groups,
    })
}
