#![allow(dead_code)]

pub mod atoms;
pub mod cases;
pub mod envelope;
pub mod linalg;
pub mod quartic;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
