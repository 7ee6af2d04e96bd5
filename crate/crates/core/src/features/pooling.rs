use crate::error::{Error, Result};
use crate::nn::Matrix;

use super::fseq::FeatureSequence;

/// Concatenation of per-dimension mean and population standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledVector {
    pub utterance_id: String,
    pub values: Vec<f32>,
}

impl PooledVector {
    pub fn dims(&self) -> usize {
        self.values.len()
    }
}

/// Statistic pooling over frames: `[mean_1..mean_D, std_1..std_D]`.
///
/// Standard deviation divides by `T`, so a single frame pools to `std = 0`.
/// Accumulation is Welford-style in `f64`.
pub fn stat_pool(seq: &FeatureSequence) -> Result<PooledVector> {
    let values = stat_pool_matrix(&seq.values)?;
    Ok(PooledVector {
        utterance_id: seq.utterance_id.clone(),
        values,
    })
}

pub fn stat_pool_matrix(frames: &Matrix<f32>) -> Result<Vec<f32>> {
    let (t, d) = frames.shape();
    if t == 0 {
        return Err(Error::EmptyInput("stat_pool of a sequence with no frames".into()));
    }
    let mut mean = vec![0.0f64; d];
    let mut m2 = vec![0.0f64; d];
    for (n, row) in (0..t).map(|r| frames.row(r)).enumerate() {
        let k = (n + 1) as f64;
        for ((mu, s), &x) in mean.iter_mut().zip(m2.iter_mut()).zip(row) {
            let x = x as f64;
            let delta = x - *mu;
            *mu += delta / k;
            *s += delta * (x - *mu);
        }
    }
    let mut out = Vec::with_capacity(2 * d);
    out.extend(mean.iter().map(|&m| m as f32));
    out.extend(m2.iter().map(|&s| (s.max(0.0) / t as f64).sqrt() as f32));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    /// Straight two-pass mean / population-std in f64.
    fn two_pass(frames: &Matrix<f32>) -> Vec<f64> {
        let (t, d) = frames.shape();
        let mut out = vec![0.0; 2 * d];
        for c in 0..d {
            let mut s = 0.0;
            for r in 0..t {
                s += frames.get(r, c) as f64;
            }
            let mean = s / t as f64;
            let mut v = 0.0;
            for r in 0..t {
                let e = frames.get(r, c) as f64 - mean;
                v += e * e;
            }
            out[c] = mean;
            out[d + c] = (v / t as f64).sqrt();
        }
        out
    }

    #[test]
    fn constant_sequence_has_zero_std() {
        let seq = FeatureSequence::new("c", Matrix::from_rows(&vec![vec![1.5, -2.0, 0.25]; 4]).unwrap());
        let p = stat_pool(&seq).unwrap();
        assert_eq!(p.values, vec![1.5, -2.0, 0.25, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn two_frames_population_std() {
        let m = Matrix::from_vec(2, 1, vec![1.0, 3.0]).unwrap();
        assert_eq!(stat_pool_matrix(&m).unwrap(), vec![2.0, 1.0]);
    }

    #[test]
    fn matches_two_pass_oracle_on_random_5x3() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(42);
        let m = Matrix::from_vec(5, 3, (0..15).map(|_| rng.gen_range(-3.0f32..3.0)).collect()).unwrap();
        let got = stat_pool_matrix(&m).unwrap();
        for (g, e) in got.iter().zip(two_pass(&m)) {
            assert!((*g as f64 - e).abs() < 1e-6, "{g} vs {e}");
        }
    }

    #[test]
    fn single_frame_and_empty() {
        let m = Matrix::from_vec(1, 2, vec![4.0, -1.0]).unwrap();
        assert_eq!(stat_pool_matrix(&m).unwrap(), vec![4.0, -1.0, 0.0, 0.0]);
        assert!(matches!(stat_pool_matrix(&Matrix::zeros(0, 3)), Err(Error::EmptyInput(_))));
    }

    proptest! {
        #[test]
        fn length_sign_and_permutation_invariance(t in 1usize..12, d in 1usize..6, seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let m = Matrix::from_vec(t, d, (0..t * d).map(|_| rng.gen_range(-100.0f32..100.0)).collect()).unwrap();
            let pooled = stat_pool_matrix(&m).unwrap();
            prop_assert_eq!(pooled.len(), 2 * d);
            prop_assert!(pooled[d..].iter().all(|&s| s >= 0.0));

            let mut order: Vec<usize> = (0..t).collect();
            order.reverse();
            order.rotate_left(seed as usize % t);
            let shuffled = stat_pool_matrix(&m.select_rows(&order)).unwrap();
            for (a, b) in pooled.iter().zip(&shuffled) {
                prop_assert!((a - b).abs() <= 1e-6 * a.abs().max(1.0));
            }
            for (g, e) in pooled.iter().zip(two_pass(&m)) {
                prop_assert!((*g as f64 - e).abs() <= 1e-6 * e.abs().max(1.0));
            }
        }
    }
}
