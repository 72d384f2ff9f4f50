#![allow(dead_code)]

use agitrack_core::pose::{SequenceDataset, SequenceSample};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// label = 1 iff the mean of feature 0 over the sequence is positive.
/// Each sequence draws an offset so most examples sit away from the boundary.
pub fn toy_dataset(n: usize, len: usize, d: usize, seed: u64) -> SequenceDataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, 1.0).unwrap();
    let samples = (0..n)
        .map(|id| {
            let mu: f64 = rng.random_range(-1.0..1.0);
            let mut data = Vec::with_capacity(len * d);
            for _ in 0..len {
                data.push(mu + noise.sample(&mut rng));
                for _ in 1..d {
                    data.push(noise.sample(&mut rng));
                }
            }
            let mean = (0..len).map(|t| data[t * d]).sum::<f64>() / len as f64;
            SequenceSample { id, label: mean > 0.0, data }
        })
        .collect();
    SequenceDataset { names: (0..d).map(|k| format!("f{k}")).collect(), seq_len: len, samples }
}
