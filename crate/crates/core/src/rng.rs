//! Seeded random streams.
//!
//! Every run derives independent ChaCha streams from one master seed, so the
//! agent's draws never shift the GAN's noise or batch order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::tensor::Tensor;

pub type Rng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    GanInit = 1,
    GanNoise = 2,
    Data = 3,
    AgentInit = 4,
    AgentExplore = 5,
    AgentReplay = 6,
    Eval = 7,
    Samples = 8,
}

pub fn stream(master_seed: u64, which: Stream) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(which as u64);
    rng
}

pub fn standard_normal<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// `rows × cols` matrix of i.i.d. standard normal draws.
pub fn normal_matrix<R: rand::Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Tensor {
    let data = (0..rows * cols).map(|_| standard_normal(rng)).collect();
    Tensor::matrix(rows, cols, data).expect("positive dims")
}
