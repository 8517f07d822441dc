use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::{Error, Mode, Result, Tensor};

pub fn relu(x: &Tensor) -> Tensor {
    let mut out = x.clone();
    relu_in_place(out.data_mut());
    out
}

pub fn relu_in_place(x: &mut [f64]) {
    for v in x {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

/// Gradient passes only where the forward input was strictly positive.
pub fn relu_backward(x: &Tensor, grad_out: &Tensor) -> Result<Tensor> {
    if x.shape() != grad_out.shape() {
        return Err(Error::shape("relu grad_out", x.len(), grad_out.len()));
    }
    let data = x
        .data()
        .iter()
        .zip(grad_out.data())
        .map(|(&xi, &g)| if xi > 0.0 { g } else { 0.0 })
        .collect();
    Tensor::new(x.shape().to_vec(), data)
}

/// Column-wise maximum of a `T × C` matrix plus the winning row per column.
/// Ties go to the lowest row index.
pub fn maxpool_time(matrix: &Tensor) -> Result<(Vec<f64>, Vec<usize>)> {
    if matrix.rows() == 0 || matrix.is_empty() {
        return Err(Error::Empty("max-pool input"));
    }
    let mut best = matrix.row(0).to_vec();
    let mut argmax = vec![0; matrix.cols()];
    for t in 1..matrix.rows() {
        for (c, &v) in matrix.row(t).iter().enumerate() {
            if v > best[c] {
                best[c] = v;
                argmax[c] = t;
            }
        }
    }
    Ok((best, argmax))
}

pub fn maxpool_time_backward(rows: usize, argmax: &[usize], grad_out: &[f64]) -> Result<Tensor> {
    if argmax.len() != grad_out.len() {
        return Err(Error::shape("max-pool grad_out", argmax.len(), grad_out.len()));
    }
    let mut grad = Tensor::zeros(&[rows, argmax.len()]);
    for (c, (&t, &g)) in argmax.iter().zip(grad_out).enumerate() {
        if t >= rows {
            return Err(Error::invalid("max-pool argmax out of range"));
        }
        grad.set(t, c, g);
    }
    Ok(grad)
}

/// Inverted dropout. Returns the output and a 0/1 keep mask; survivors are
/// scaled by `1/keep` so inference is the identity.
pub fn dropout<R: Rng + ?Sized>(x: &[f64], keep: f64, rng: &mut R, mode: Mode) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(keep > 0.0 && keep <= 1.0) {
        return Err(Error::invalid("dropout keep rate must be in (0, 1]"));
    }
    if mode == Mode::Infer || keep == 1.0 {
        return Ok((x.to_vec(), vec![1.0; x.len()]));
    }
    let mask: Vec<f64> = x
        .iter()
        .map(|_| if rng.gen::<f64>() < keep { 1.0 } else { 0.0 })
        .collect();
    let out = x.iter().zip(&mask).map(|(v, m)| v * m / keep).collect();
    Ok((out, mask))
}

pub fn dropout_seeded(x: &[f64], keep: f64, seed: u64, mode: Mode) -> Result<(Vec<f64>, Vec<f64>)> {
    dropout(x, keep, &mut ChaCha8Rng::seed_from_u64(seed), mode)
}

pub fn dropout_backward(grad_out: &[f64], mask: &[f64], keep: f64) -> Vec<f64> {
    grad_out.iter().zip(mask).map(|(g, m)| g * m / keep).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relu_clamps_negatives() {
        let x = Tensor::vector(vec![-1.0, 0.0, 2.0]);
        assert_eq!(relu(&x).data(), &[0.0, 0.0, 2.0]);
        let pos = Tensor::vector(vec![0.0, 3.5, 1e-9]);
        assert_eq!(relu(&pos), pos);
    }

    #[test]
    fn relu_backward_zero_at_origin() {
        let x = Tensor::vector(vec![-1.0, 0.0, 2.0]);
        let g = Tensor::vector(vec![5.0, 5.0, 5.0]);
        assert_eq!(relu_backward(&x, &g).unwrap().data(), &[0.0, 0.0, 5.0]);
    }

    #[test]
    fn maxpool_examples() {
        let m = Tensor::from_rows(&[[1.0, 5.0], [3.0, 2.0]]).unwrap();
        let (out, arg) = maxpool_time(&m).unwrap();
        assert_eq!(out, vec![3.0, 5.0]);
        assert_eq!(arg, vec![1, 0]);
        let single = Tensor::from_rows(&[[4.0, -2.0, 0.5]]).unwrap();
        assert_eq!(maxpool_time(&single).unwrap().0, vec![4.0, -2.0, 0.5]);
        assert!(maxpool_time(&Tensor::zeros(&[0, 2])).is_err());
    }

    #[test]
    fn maxpool_tie_routes_to_first_row() {
        let m = Tensor::from_rows(&[[1.0], [7.0], [7.0]]).unwrap();
        let (_, arg) = maxpool_time(&m).unwrap();
        let g = maxpool_time_backward(3, &arg, &[2.0]).unwrap();
        assert_eq!(g.data(), &[0.0, 2.0, 0.0]);
    }

    #[test]
    fn dropout_contracts() {
        let x = [1.0, -2.0, 3.0, 4.0];
        let (out, mask) = dropout_seeded(&x, 1.0, 9, Mode::Train).unwrap();
        assert_eq!(out, x.to_vec());
        assert_eq!(mask, vec![1.0; 4]);
        let (out, _) = dropout_seeded(&x, 0.3, 9, Mode::Infer).unwrap();
        assert_eq!(out, x.to_vec());
        assert!(dropout_seeded(&x, 0.0, 9, Mode::Train).is_err());
        assert!(dropout_seeded(&x, 1.5, 9, Mode::Train).is_err());
    }

    #[test]
    fn dropout_is_seed_deterministic_and_scaled() {
        let x: Vec<f64> = (0..64).map(|i| i as f64 + 1.0).collect();
        let a = dropout_seeded(&x, 0.5, 42, Mode::Train).unwrap();
        let b = dropout_seeded(&x, 0.5, 42, Mode::Train).unwrap();
        assert_eq!(a, b);
        for ((o, m), v) in a.0.iter().zip(&a.1).zip(&x) {
            assert_eq!(*o, if *m == 1.0 { v * 2.0 } else { 0.0 });
        }
        assert!(a.1.iter().any(|&m| m == 0.0) && a.1.iter().any(|&m| m == 1.0));
    }
}
