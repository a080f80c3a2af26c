//! Shared fixtures for the criterion benchmarks.

use retroq::objects::{random_pvm, random_rank_one_povm, random_uniform_spectrum_state};
use retroq::{DensityMatrix, Povm, RngStream};

/// Random state and two random PVMs in dimension `d`.
pub fn pvm_triple(d: usize, seed: u64) -> (DensityMatrix, Povm, Povm) {
    let mut rng = RngStream::new(seed, 0).rng();
    let gamma = random_uniform_spectrum_state(d, &mut rng);
    let m = random_pvm(d, &mut rng);
    let n = random_pvm(d, &mut rng);
    (gamma, m, n)
}

/// Random state and two random rank-one POVMs with `n` outcomes.
pub fn povm_triple(d: usize, n: usize, seed: u64) -> (DensityMatrix, Povm, Povm) {
    let mut rng = RngStream::new(seed, 0).rng();
    let gamma = random_uniform_spectrum_state(d, &mut rng);
    let m = random_rank_one_povm(d, n, &mut rng).expect("n >= d");
    let nn = random_rank_one_povm(d, n, &mut rng).expect("n >= d");
    (gamma, m, nn)
}
