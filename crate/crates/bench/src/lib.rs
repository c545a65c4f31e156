//! Inputs shared by the stage benchmarks.

use csisense_core::scenario::Scenario;
use csisense_core::CsiTrace;
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A five-second `jump` from the first generated room.
pub fn action_trace() -> CsiTrace {
    let specs = Scenario::cross_room(1, 1, 0).traces().expect("preset scenario is valid");
    let spec = specs.iter().find(|s| s.action == "jump").expect("jump is a preset action");
    spec.generate().expect("preset trace generates")
}

/// Uniform entries in `[-1, 1)`.
pub fn random_matrix(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
}
