//! Pearson correlation between kernel activation rows.

use alloc::vec;
use alloc::vec::Vec;

use super::{GroupKey, KernelId, ProbeGroup};
use crate::{Error, Result, Tensor};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Pearson {
    pub r: f64,
    /// One of the inputs had zero variance; `r` is reported as 0.
    pub degenerate: bool,
}

/// Single-pass (Welford) mean and co-moment accumulation.
#[derive(Clone, Copy, Default)]
struct CoMoments {
    n: f64,
    mean_x: f64,
    mean_y: f64,
    m2_x: f64,
    m2_y: f64,
    c_xy: f64,
}

impl CoMoments {
    fn push(&mut self, x: f64, y: f64) {
        self.n += 1.0;
        let dx = x - self.mean_x;
        let dy = y - self.mean_y;
        self.mean_x += dx / self.n;
        self.mean_y += dy / self.n;
        self.m2_x += dx * (x - self.mean_x);
        self.m2_y += dy * (y - self.mean_y);
        self.c_xy += dx * (y - self.mean_y);
    }
}

pub fn pearson(x: &[f64], y: &[f64]) -> Result<Pearson> {
    if x.len() != y.len() {
        return Err(Error::shape("pearson inputs", x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(Error::invalid("pearson needs at least two observations"));
    }
    let mut acc = CoMoments::default();
    for (&a, &b) in x.iter().zip(y) {
        acc.push(a, b);
    }
    if acc.m2_x == 0.0 || acc.m2_y == 0.0 {
        return Ok(Pearson { r: 0.0, degenerate: true });
    }
    let r = acc.c_xy / (libm::sqrt(acc.m2_x) * libm::sqrt(acc.m2_y));
    Ok(Pearson {
        r: r.clamp(-1.0, 1.0),
        degenerate: false,
    })
}

/// Pairwise correlations within one probe group.
#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationMatrix {
    pub group: GroupKey,
    pub kernels: Vec<KernelId>,
    /// Symmetric `K × K`, unit diagonal, signed coefficients.
    pub r: Tensor,
    /// Kernels whose activation row is constant over the probe set.
    pub degenerate: Vec<bool>,
}

impl CorrelationMatrix {
    /// Builds a matrix from precomputed coefficients, e.g. for tests or
    /// externally computed correlations.
    pub fn from_values(group: GroupKey, r: Tensor, degenerate: Vec<bool>) -> Result<Self> {
        let k = r.rows();
        if r.cols() != k {
            return Err(Error::shape("correlation matrix columns", k, r.cols()));
        }
        if degenerate.len() != k {
            return Err(Error::shape("degenerate flags", k, degenerate.len()));
        }
        let kernels = (0..k).map(|i| KernelId::new(group.layer, group.window, i)).collect();
        Ok(CorrelationMatrix {
            group,
            kernels,
            r,
            degenerate,
        })
    }

    pub fn size(&self) -> usize {
        self.kernels.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.r.get(i, j)
    }

    /// |r| of a pair, or `None` when either kernel is degenerate.
    pub fn strength(&self, i: usize, j: usize) -> Option<f64> {
        if self.degenerate[i] || self.degenerate[j] {
            None
        } else {
            Some(self.r.get(i, j).abs())
        }
    }
}

pub fn correlation_matrix(group: &ProbeGroup) -> Result<CorrelationMatrix> {
    let k = group.kernels.len();
    if k < 2 {
        return Err(Error::invalid("correlation needs at least two kernels"));
    }
    let mut r = Tensor::zeros(&[k, k]);
    let mut degenerate = vec![false; k];
    for i in 0..k {
        // A constant row correlates with nothing, itself included.
        degenerate[i] = pearson(group.row(i), group.row(i))?.degenerate;
        r.set(i, i, 1.0);
        for j in i + 1..k {
            let p = pearson(group.row(i), group.row(j))?;
            r.set(i, j, p.r);
            r.set(j, i, p.r);
        }
    }
    Ok(CorrelationMatrix {
        group: group.key,
        kernels: group.kernels.clone(),
        r,
        degenerate,
    })
}

/// Pairs `i < j` with `|r| > t` for each threshold `t`; degenerate kernels
/// never count.
pub fn count_correlated_pairs(cm: &CorrelationMatrix, thresholds: &[f64]) -> Result<Vec<usize>> {
    if thresholds.iter().any(|t| !(*t > 0.0 && *t < 1.0)) {
        return Err(Error::invalid("pair thresholds must lie in (0, 1)"));
    }
    if thresholds.windows(2).any(|w| w[0] < w[1]) {
        return Err(Error::invalid("pair thresholds must be descending"));
    }
    let mut counts = vec![0; thresholds.len()];
    let k = cm.size();
    for i in 0..k {
        for j in i + 1..k {
            if let Some(s) = cm.strength(i, j) {
                for (c, &t) in counts.iter_mut().zip(thresholds) {
                    if s > t {
                        *c += 1;
                    }
                }
            }
        }
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_values() {
        let p = pearson(&[1.0, 2.0, 3.0, 4.0], &[1.0, 3.0, 2.0, 4.0]).unwrap();
        assert!((p.r - 0.8).abs() < 1e-12);
        let p = pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap();
        assert!((p.r + 1.0).abs() < 1e-12);
        let x = [0.3, -1.0, 4.5, 2.0];
        assert!((pearson(&x, &x).unwrap().r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_and_errors() {
        let p = pearson(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(p, Pearson { r: 0.0, degenerate: true });
        assert!(pearson(&[1.0], &[1.0]).is_err());
        assert!(pearson(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn identity_matrix_has_no_pairs() {
        let mut r = Tensor::zeros(&[4, 4]);
        for i in 0..4 {
            r.set(i, i, 1.0);
        }
        let cm = CorrelationMatrix::from_values(GroupKey::new(1, 3), r, vec![false; 4]).unwrap();
        assert_eq!(count_correlated_pairs(&cm, &[0.8, 0.6]).unwrap(), vec![0, 0]);
        assert!(count_correlated_pairs(&cm, &[0.6, 0.8]).is_err());
        assert!(count_correlated_pairs(&cm, &[1.2]).is_err());
    }
}
