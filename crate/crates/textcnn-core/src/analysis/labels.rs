//! Kernel labeling from top-activating n-grams.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::{GroupKey, KernelId, ProbeGroup};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum KernelClass {
    Class(usize),
    Other,
}

/// One of a kernel's top n-grams.
#[derive(Clone, Debug, PartialEq)]
pub struct TopNgram {
    /// Column in the group's activation matrix.
    pub column: usize,
    pub ngram_id: usize,
    pub tokens: Vec<String>,
    pub activation: f64,
    pub labels: BTreeSet<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct KernelLabelReport {
    pub kernel: KernelId,
    pub assigned: KernelClass,
    pub top3: Vec<TopNgram>,
}

/// Highest first; equal activations order by ascending id.
fn rank(a: (f64, usize), b: (f64, usize)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

/// Columns of the `k` largest entries of `row`, descending, ties broken by
/// the smaller `ids[column]`.
pub fn top_k_columns(row: &[f64], ids: &[usize], k: usize) -> Result<Vec<usize>> {
    if k == 0 {
        return Err(Error::invalid("top-k needs k ≥ 1"));
    }
    if k > row.len() {
        return Err(Error::invalid(alloc::format!("asked for top {k} of {} probes", row.len())));
    }
    let mut best: Vec<usize> = Vec::with_capacity(k + 1);
    for col in 0..row.len() {
        let key = (row[col], ids[col]);
        if best.len() == k && rank(key, (row[best[k - 1]], ids[best[k - 1]])) != Ordering::Less {
            continue;
        }
        let at = best
            .iter()
            .position(|&b| rank(key, (row[b], ids[b])) == Ordering::Less)
            .unwrap_or(best.len());
        best.insert(at, col);
        best.truncate(k);
    }
    Ok(best)
}

/// The `k` most activating n-grams of one kernel in `group`.
pub fn top_ngrams_report(group: &ProbeGroup, kernel: KernelId, k: usize) -> Result<Vec<TopNgram>> {
    let pos = group
        .kernel_position(kernel)
        .ok_or_else(|| Error::invalid(alloc::format!("kernel {kernel} not in group {}", group.key)))?;
    let ids: Vec<usize> = group.records.iter().map(|r| r.id).collect();
    let row = group.row(pos);
    Ok(top_k_columns(row, &ids, k)?
        .into_iter()
        .map(|col| {
            let rec = &group.records[col];
            TopNgram {
                column: col,
                ngram_id: rec.id,
                tokens: rec.tokens.clone(),
                activation: row[col],
                labels: rec.labels.clone(),
            }
        })
        .collect())
}

/// Assigns a class to a kernel when the union of its top-3 n-grams' label
/// sets is a single class, and `Other` otherwise.
pub fn label_kernels(group: &ProbeGroup) -> Result<Vec<KernelLabelReport>> {
    group
        .kernels
        .iter()
        .map(|&kernel| {
            let top3 = top_ngrams_report(group, kernel, 3)?;
            let union: BTreeSet<usize> = top3.iter().flat_map(|t| t.labels.iter().copied()).collect();
            let assigned = match union.len() {
                1 => KernelClass::Class(*union.iter().next().expect("one element")),
                _ => KernelClass::Other,
            };
            Ok(KernelLabelReport { kernel, assigned, top3 })
        })
        .collect()
}

/// Kernel counts per class (rows, `Other` last) and group (columns).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassTable {
    /// Class names followed by `"Other"`.
    pub rows: Vec<String>,
    pub groups: Vec<GroupKey>,
    /// `counts[row][group]`.
    pub counts: Vec<Vec<usize>>,
}

impl ClassTable {
    pub fn column_total(&self, group: usize) -> usize {
        self.counts.iter().map(|r| r[group]).sum()
    }

    /// Row sum over the groups of one layer.
    pub fn layer_sum(&self, row: usize, layer: u8) -> usize {
        self.groups
            .iter()
            .zip(&self.counts[row])
            .filter(|(g, _)| g.layer == layer)
            .map(|(_, c)| c)
            .sum()
    }
}

pub fn kernel_class_table(reports: &[KernelLabelReport], class_names: &[String]) -> Result<ClassTable> {
    let mut groups: Vec<GroupKey> = reports.iter().map(|r| r.kernel.group()).collect();
    groups.sort();
    groups.dedup();
    let mut rows: Vec<String> = class_names.to_vec();
    rows.push("Other".into());
    let mut counts = vec![vec![0; groups.len()]; rows.len()];
    for r in reports {
        let g = groups.binary_search(&r.kernel.group()).expect("group collected above");
        let row = match r.assigned {
            KernelClass::Class(c) if c < class_names.len() => c,
            KernelClass::Class(c) => {
                return Err(Error::LabelOutOfRange {
                    label: c,
                    classes: class_names.len(),
                })
            }
            KernelClass::Other => class_names.len(),
        };
        counts[row][g] += 1;
    }
    Ok(ClassTable { rows, groups, counts })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn top_k_orders_and_breaks_ties_by_id() {
        let row = [0.5, 2.0, 2.0, 0.0, 1.0];
        let ids = [0, 1, 2, 3, 4];
        assert_eq!(top_k_columns(&row, &ids, 3).unwrap(), vec![1, 2, 4]);
        assert_eq!(top_k_columns(&row, &ids, 1).unwrap(), vec![1]);
        let reversed_ids = [4, 3, 2, 1, 0];
        assert_eq!(top_k_columns(&row, &reversed_ids, 2).unwrap(), vec![2, 1]);
        assert!(top_k_columns(&row, &ids, 0).is_err());
        assert!(top_k_columns(&row, &ids, 6).is_err());
    }
}
