use rand::Rng;

/// Fills `out` from U(−a, a) with `a = sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<R: Rng + ?Sized>(rng: &mut R, fan_in: usize, fan_out: usize, out: &mut [f64]) {
    let limit = libm::sqrt(6.0 / (fan_in + fan_out) as f64);
    for v in out {
        *v = rng.gen_range(-limit..limit);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn within_limit_and_seeded() {
        let mut a = [0.0; 100];
        let mut b = [0.0; 100];
        glorot_uniform(&mut ChaCha8Rng::seed_from_u64(1), 10, 5, &mut a);
        glorot_uniform(&mut ChaCha8Rng::seed_from_u64(1), 10, 5, &mut b);
        assert_eq!(a, b);
        let limit = libm::sqrt(6.0 / 15.0);
        assert!(a.iter().all(|v| v.abs() < limit));
    }
}
