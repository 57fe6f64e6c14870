//! Encryption controls used by white-box tests and the calibration tool:
//! forcing the noise, splitting the secret, and capturing the randomness.

#![cfg_attr(not(feature = "test-hooks"), allow(dead_code))]

use rand::Rng;

use crate::gauss::{sample_chi, NoiseParam};
use crate::zq::{IntMatrix, ZqVector};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum NoiseMode {
    /// Honest draws from `chi`.
    #[default]
    Sampled,
    Zero,
    /// Every noise coordinate is `±B` with a random sign.
    Extreme,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EncHooks {
    pub noise: NoiseMode,
    /// Encrypt the second-layer components under an independent secret `s'`.
    pub split_secret: bool,
}

/// Everything an encryption drew, so that tests can rebuild each component.
#[derive(Debug, Clone, Default)]
pub struct EncTrace {
    pub s: Option<ZqVector>,
    /// Secret of the second layer when [`EncHooks::split_secret`] is set.
    pub s_prime: Option<ZqVector>,
    pub e: Vec<i64>,
    pub e1: Vec<i64>,
    pub e2: Vec<i64>,
    /// Sign matrices `R_i` of the attribute components (first layer).
    pub r: Vec<IntMatrix>,
    /// Sign matrix of the time component.
    pub r_bar: Option<IntMatrix>,
    /// Sign matrices `S_i` of the second layer.
    pub s_mats: Vec<IntMatrix>,
}

pub(crate) fn noise_vec<R: Rng + ?Sized>(p: NoiseParam, len: usize, mode: NoiseMode, rng: &mut R) -> Vec<i64> {
    match mode {
        NoiseMode::Sampled => (0..len).map(|_| sample_chi(p, rng)).collect(),
        NoiseMode::Zero => vec![0; len],
        NoiseMode::Extreme => {
            let b = p.bound() as i64;
            (0..len).map(|_| if rng.gen::<bool>() { b } else { -b }).collect()
        }
    }
}

/// `R^T e` for a fresh uniform `R in {-1, 1}^{len x cols}`. `R` is drawn row
/// by row, 64 signs per word, and only materialized when `keep` asks for it.
pub(crate) fn signed_combination<R: Rng + ?Sized>(
    e: &[i64],
    cols: usize,
    rng: &mut R,
    keep: Option<&mut Vec<IntMatrix>>,
) -> Vec<i64> {
    let mut out = vec![0i64; cols];
    let mut kept = keep.as_ref().map(|_| IntMatrix::zeros(e.len(), cols));
    for (r, &x) in e.iter().enumerate() {
        for chunk in 0..cols.div_ceil(64) {
            let bits: u64 = rng.gen();
            for b in 0..64.min(cols - chunk * 64) {
                let j = chunk * 64 + b;
                let negative = (bits >> b) & 1 == 1;
                out[j] += if negative { -x } else { x };
                if let Some(k) = kept.as_mut() {
                    k.set(r, j, if negative { -1 } else { 1 });
                }
            }
        }
    }
    if let (Some(list), Some(k)) = (keep, kept) {
        list.push(k);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn kept_matrix_reproduces_combination() {
        let e: Vec<i64> = (0..70).map(|i| i % 7 - 3).collect();
        let mut kept = Vec::new();
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        let out = signed_combination(&e, 130, &mut rng, Some(&mut kept));
        let r = &kept[0];
        assert!(r.as_slice().iter().all(|&x| x == 1 || x == -1));
        let want = r.transpose().mul(&IntMatrix::from_vec(70, 1, e.clone()).unwrap()).unwrap();
        assert_eq!(out, want.column(0));
        // identical stream with and without materialization
        let mut rng = ChaCha20Rng::seed_from_u64(4);
        assert_eq!(signed_combination(&e, 130, &mut rng, None), out);
    }

    #[test]
    fn noise_modes() {
        let p = NoiseParam::from_bound(5).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        assert!(noise_vec(p, 10, NoiseMode::Zero, &mut rng).iter().all(|&x| x == 0));
        assert!(noise_vec(p, 100, NoiseMode::Extreme, &mut rng).iter().all(|&x| x.abs() == 5));
        assert!(noise_vec(p, 100, NoiseMode::Sampled, &mut rng).iter().all(|&x| x.abs() <= 5));
    }
}
