//! Bridge kernels: `k` bridges `i` and `j` when `|r(i,j)| < low` while both
//! `|r(i,k)|` and `|r(j,k)|` exceed `high`.

use alloc::vec;
use alloc::vec::Vec;

use super::{CorrelationMatrix, GroupKey};
use crate::{Error, Result};

pub const DEFAULT_BRIDGE_LOW: f64 = 0.1;
pub const DEFAULT_BRIDGE_HIGH: f64 = 0.4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bridge {
    pub i: usize,
    pub j: usize,
    pub k: usize,
    pub r_ij: f64,
    pub r_ik: f64,
    pub r_jk: f64,
}

impl Bridge {
    pub fn satisfies(&self, low: f64, high: f64) -> bool {
        self.i < self.j
            && self.k != self.i
            && self.k != self.j
            && self.r_ij.abs() < low
            && self.r_ik.abs() > high
            && self.r_jk.abs() > high
    }
}

/// Every bridge triple in one group, ordered by `(i, j, k)`. Degenerate
/// kernels take no part in any triple.
pub fn find_bridges(cm: &CorrelationMatrix, low: f64, high: f64) -> Result<Vec<Bridge>> {
    if !(low > 0.0 && low < high && high < 1.0) {
        return Err(Error::invalid("bridge thresholds need 0 < low < high < 1"));
    }
    let n = cm.size();
    // Strong neighbours of every kernel, ascending.
    let neighbours: Vec<Vec<usize>> = (0..n)
        .map(|k| {
            (0..n)
                .filter(|&x| x != k && cm.strength(k, x).is_some_and(|s| s > high))
                .collect()
        })
        .collect();
    let mut bridges = Vec::new();
    for (k, near) in neighbours.iter().enumerate() {
        for (a, &i) in near.iter().enumerate() {
            for &j in &near[a + 1..] {
                if cm.strength(i, j).is_some_and(|s| s < low) {
                    bridges.push(Bridge {
                        i,
                        j,
                        k,
                        r_ij: cm.get(i, j),
                        r_ik: cm.get(i, k),
                        r_jk: cm.get(j, k),
                    });
                }
            }
        }
    }
    bridges.sort_by_key(|b| (b.i, b.j, b.k));
    Ok(bridges)
}

/// Bridge counts per `(layer, window)` group.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BridgeTable {
    pub groups: Vec<GroupKey>,
    pub counts: Vec<usize>,
}

impl BridgeTable {
    pub fn layer_sum(&self, layer: u8) -> usize {
        self.groups
            .iter()
            .zip(&self.counts)
            .filter(|(g, _)| g.layer == layer)
            .map(|(_, c)| c)
            .sum()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

pub fn bridge_count_table(lists: &[(GroupKey, Vec<Bridge>)]) -> BridgeTable {
    let mut groups: Vec<GroupKey> = lists.iter().map(|(g, _)| *g).collect();
    groups.sort();
    groups.dedup();
    let mut counts = vec![0; groups.len()];
    for (g, list) in lists {
        let idx = groups.binary_search(g).expect("group collected above");
        counts[idx] += list.len();
    }
    BridgeTable { groups, counts }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Tensor;

    fn cm(values: &[&[f64]]) -> CorrelationMatrix {
        let r = Tensor::from_rows(values).unwrap();
        CorrelationMatrix::from_values(GroupKey::new(1, 3), r, vec![false; values.len()]).unwrap()
    }

    #[test]
    fn single_bridge() {
        let m = cm(&[&[1.0, 0.5, 0.05], &[0.5, 1.0, 0.5], &[0.05, 0.5, 1.0]]);
        let b = find_bridges(&m, 0.1, 0.4).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!((b[0].i, b[0].j, b[0].k), (0, 2, 1));
        assert!(b[0].satisfies(0.1, 0.4));
    }

    #[test]
    fn no_low_pair_means_no_bridge() {
        let m = cm(&[&[1.0, 0.5, 0.5], &[0.5, 1.0, 0.5], &[0.5, 0.5, 1.0]]);
        assert!(find_bridges(&m, 0.1, 0.4).unwrap().is_empty());
        assert!(find_bridges(&m, 0.5, 0.4).is_err());
    }

    #[test]
    fn degenerate_kernels_are_excluded() {
        let mut m = cm(&[&[1.0, 0.5, 0.0], &[0.5, 1.0, 0.5], &[0.0, 0.5, 1.0]]);
        assert_eq!(find_bridges(&m, 0.1, 0.4).unwrap().len(), 1);
        m.degenerate[2] = true;
        assert!(find_bridges(&m, 0.1, 0.4).unwrap().is_empty());
    }

    #[test]
    fn count_table_sums() {
        let empty = bridge_count_table(&[]);
        assert_eq!(empty.total(), 0);
        let b = Bridge { i: 0, j: 1, k: 2, r_ij: 0.0, r_ik: 0.5, r_jk: 0.5 };
        let t = bridge_count_table(&[
            (GroupKey::new(2, 3), vec![b, b]),
            (GroupKey::new(1, 3), vec![b]),
            (GroupKey::new(1, 5), vec![]),
        ]);
        assert_eq!(t.groups, vec![GroupKey::new(1, 3), GroupKey::new(1, 5), GroupKey::new(2, 3)]);
        assert_eq!(t.counts, vec![1, 0, 2]);
        assert_eq!(t.layer_sum(1) + t.layer_sum(2), t.total());
    }
}
