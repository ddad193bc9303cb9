//! Shared fixtures for the criterion benchmarks.

use rand::Rng;

use ircsc_core::seed::rng_from;
use ircsc_core::{
    sort_importance, DataSample, ImportanceVector, SortedImportance, TaskModel, TaskModelConfig,
};

/// Sorted importance over `channels` random positive weights.
pub fn random_sorted_weights(channels: usize, seed: u64) -> SortedImportance {
    let mut rng = rng_from(seed, &[0xBE7C]);
    let weights: Vec<f64> = (0..channels).map(|_| rng.gen::<f64>() + 1e-9).collect();
    sort_importance(&ImportanceVector::new(weights).unwrap())
}

/// Desk-scale model with freshly initialized parameters and one sample.
pub fn desk_model_and_sample(seed: u64) -> (TaskModel, DataSample) {
    let config = TaskModelConfig::desk_default(seed);
    let model = ircsc_core::task::random_model(&config).unwrap();
    let dataset = ircsc_core::generate_dataset(1, &config, seed).unwrap();
    (model, dataset.into_iter().next().unwrap())
}

/// A deterministic payload of `n` bits.
pub fn payload(n: usize, seed: u64) -> Vec<bool> {
    let mut rng = rng_from(seed, &[0xB175]);
    (0..n).map(|_| rng.gen()).collect()
}
