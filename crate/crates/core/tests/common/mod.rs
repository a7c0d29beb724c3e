//! Random inputs and dense oracles shared by the integration tests.
#![allow(dead_code)]

use lrstokes::LowRankMatrix;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn random(m: usize, n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(m, n, |_, _| rng.gen_range(-1.0..1.0))
}

/// Random factors with geometrically decaying column scales.
pub fn random_lr(m: usize, n: usize, r: usize, decay: f64, seed: u64) -> LowRankMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u = random(m, r, &mut rng);
    for k in 0..r {
        u.column_mut(k).scale_mut(decay.powi(k as i32));
    }
    LowRankMatrix::new(u, random(n, r, &mut rng)).unwrap()
}

/// Smallest rank whose discarded tail is within `eps·‖A‖_F`.
pub fn eps_rank(a: &DMatrix<f64>, eps: f64) -> usize {
    let s = a.clone().svd(false, false).singular_values;
    let total = s.norm();
    let mut tail2 = 0.0;
    let mut k = s.len();
    while k > 0 && (tail2 + s[k - 1] * s[k - 1]).sqrt() <= eps * total {
        tail2 += s[k - 1] * s[k - 1];
        k -= 1;
    }
    k
}
