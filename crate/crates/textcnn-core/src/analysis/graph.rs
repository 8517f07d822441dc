//! Activation graphs: the paired activation series of two kernels, arranged
//! for plotting.
//!
//! Pairs are sorted by the first kernel's activation (descending), truncated
//! to `limit`, cut into `slices` contiguous near-equal slices, and each slice
//! is re-sorted by the second kernel's activation (descending).

use alloc::vec::Vec;

use super::pearson;
use crate::{Error, Result};

pub const DEFAULT_GRAPH_LIMIT: usize = 1200;
pub const DEFAULT_GRAPH_SLICES: usize = 3;

#[derive(Clone, Debug, PartialEq)]
pub struct ActivationGraph {
    /// `(a_i, a_j)` in plotting order.
    pub points: Vec<(f64, f64)>,
    /// Start offset of each slice in `points`, plus the final length.
    pub slice_bounds: Vec<usize>,
    /// Correlation over the full rows; `None` when either row is constant.
    pub r: Option<f64>,
}

impl ActivationGraph {
    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.0).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.1).collect()
    }
}

/// Sizes of `slices` contiguous parts of `len` items; earlier slices take
/// the remainder, so sizes differ by at most one.
pub fn slice_sizes(len: usize, slices: usize) -> Vec<usize> {
    let base = len / slices;
    let extra = len % slices;
    (0..slices).map(|s| base + usize::from(s < extra)).collect()
}

pub fn activation_graph(x: &[f64], y: &[f64], limit: usize, slices: usize) -> Result<ActivationGraph> {
    if x.len() != y.len() {
        return Err(Error::shape("activation graph rows", x.len(), y.len()));
    }
    if x.is_empty() {
        return Err(Error::Empty("activation rows"));
    }
    if limit == 0 || slices == 0 {
        return Err(Error::invalid("activation graph limit and slice count must be positive"));
    }
    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    // Stable sorts keep the original column order among equal keys.
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    pairs.truncate(limit);

    let mut bounds = Vec::with_capacity(slices + 1);
    let mut start = 0;
    for size in slice_sizes(pairs.len(), slices) {
        bounds.push(start);
        pairs[start..start + size].sort_by(|a, b| b.1.total_cmp(&a.1));
        start += size;
    }
    bounds.push(start);

    let r = if x.len() >= 2 {
        let p = pearson(x, y)?;
        (!p.degenerate).then_some(p.r)
    } else {
        None
    };
    Ok(ActivationGraph {
        points: pairs,
        slice_bounds: bounds,
        r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn small_input_keeps_everything() {
        let x = [0.1, 0.9, 0.5, 0.3, 0.7];
        let y = [1.0, 2.0, 3.0, 4.0, 5.0];
        let g = activation_graph(&x, &y, 1200, 3).unwrap();
        assert_eq!(g.points.len(), 5);
        assert_eq!(g.slice_bounds, vec![0, 2, 4, 5]);
        // x-desc: (0.9,2) (0.7,5) | (0.5,3) (0.3,4) | (0.1,1); then y-desc per slice
        assert_eq!(g.points, vec![(0.7, 5.0), (0.9, 2.0), (0.3, 4.0), (0.5, 3.0), (0.1, 1.0)]);
    }

    #[test]
    fn identical_rows_stay_aligned() {
        let x: Vec<f64> = (0..50).map(|i| ((i * 37) % 11) as f64).collect();
        let g = activation_graph(&x, &x, 20, 3).unwrap();
        assert_eq!(g.xs(), g.ys());
        assert_eq!(g.points.len(), 20);
        assert_eq!(g.r, Some(1.0));
    }

    #[test]
    fn slice_sizes_are_balanced() {
        assert_eq!(slice_sizes(1200, 3), vec![400, 400, 400]);
        assert_eq!(slice_sizes(7, 3), vec![3, 2, 2]);
        assert_eq!(slice_sizes(2, 3), vec![1, 1, 0]);
    }
}
