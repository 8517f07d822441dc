//! Correlation matrices as text: a header line, then `K` tab-separated rows.
//!
//! ```text
//! group<TAB>1-3<TAB>kernels=64<TAB>degenerate=3,17
//! 1<TAB>0.25…
//! ```
//!
//! `degenerate=-` when no kernel is constant. Values print in round-trip form.

use std::io::{BufRead, Write};
use std::path::Path;

use textcnn_core::analysis::{CorrelationMatrix, GroupKey};
use textcnn_core::Tensor;

use crate::{Error, Result};

pub fn write_correlation<W: Write>(cm: &CorrelationMatrix, mut out: W) -> std::io::Result<()> {
    let degenerate: Vec<String> = (0..cm.size()).filter(|&i| cm.degenerate[i]).map(|i| i.to_string()).collect();
    let degenerate = if degenerate.is_empty() { "-".to_string() } else { degenerate.join(",") };
    writeln!(out, "group\t{}\tkernels={}\tdegenerate={degenerate}", cm.group, cm.size())?;
    for i in 0..cm.size() {
        let row: Vec<String> = (0..cm.size()).map(|j| cm.get(i, j).to_string()).collect();
        writeln!(out, "{}", row.join("\t"))?;
    }
    Ok(())
}

/// Reads every matrix in a file written by repeated [`write_correlation`].
pub fn read_correlations<R: BufRead>(reader: R, path: &Path) -> Result<Vec<CorrelationMatrix>> {
    let lines: Vec<String> = reader
        .lines()
        .collect::<std::io::Result<_>>()
        .map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    let mut at = 0;
    while at < lines.len() {
        let line_no = at + 1;
        let bad = |m: &str| Error::format(path, line_no, m.to_string());
        let fields: Vec<&str> = lines[at].split('\t').collect();
        let [tag, key, kernels, degenerate] = fields[..] else {
            return Err(bad("expected a group header"));
        };
        if tag != "group" {
            return Err(bad("expected a group header"));
        }
        let key: GroupKey = key.parse().map_err(|e: String| bad(&e))?;
        let k: usize = kernels
            .strip_prefix("kernels=")
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| bad("bad kernel count"))?;
        let mut flags = vec![false; k];
        match degenerate.strip_prefix("degenerate=") {
            Some("-") => {}
            Some(list) => {
                for i in list.split(',') {
                    let i: usize = i.parse().map_err(|_| bad("bad degenerate index"))?;
                    *flags.get_mut(i).ok_or_else(|| bad("degenerate index out of range"))? = true;
                }
            }
            None => return Err(bad("missing degenerate list")),
        }
        let mut r = Tensor::zeros(&[k, k]);
        for i in 0..k {
            let row_no = at + 2 + i;
            let row = lines
                .get(row_no - 1)
                .ok_or_else(|| Error::format(path, row_no, "unexpected end of file"))?;
            let values: Vec<&str> = row.split('\t').collect();
            if values.len() != k {
                return Err(Error::format(path, row_no, format!("expected {k} values, found {}", values.len())));
            }
            for (j, v) in values.iter().enumerate() {
                let v: f64 = v.parse().map_err(|_| Error::format(path, row_no, format!("bad value {v:?}")))?;
                r.set(i, j, v);
            }
        }
        out.push(CorrelationMatrix::from_values(key, r, flags)?);
        at += 1 + k;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let r = Tensor::from_rows(&[&[1.0, 0.1 + 0.2, 0.0], &[0.1 + 0.2, 1.0, 0.0], &[0.0, 0.0, 1.0]]).unwrap();
        let a = CorrelationMatrix::from_values(GroupKey::new(2, 4), r.clone(), vec![false, false, true]).unwrap();
        let b = CorrelationMatrix::from_values(GroupKey::new(1, 3), r, vec![false; 3]).unwrap();
        let mut buf = Vec::new();
        write_correlation(&a, &mut buf).unwrap();
        write_correlation(&b, &mut buf).unwrap();
        let back = read_correlations(&buf[..], Path::new("mem")).unwrap();
        assert_eq!(back, vec![a, b]);
        let err = read_correlations(&buf[..40], Path::new("mem")).unwrap_err();
        assert!(err.to_string().starts_with("mem:"), "{err}");
    }
}
